"""Two-phase bounded-variable primal simplex on a dense tableau.

The model is brought to the form ``A y = b, 0 <= y <= u`` with ``b >= 0``:
lower bounds are shifted out, variables bounded only from above are
mirrored, free variables are split, fixed variables are folded into the
right-hand side, and each inequality gets a slack. Nonbasic variables sit at
either bound, so variable bounds never become rows.

Phase 1 minimises the sum of artificials; phase 2 the model objective.
Dantzig pricing is used until the objective stalls for ``3 * (rows + cols)``
iterations, after which Bland's rule takes over for the rest of the phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..formulation import MilpModel, Sense
from .types import LpSolution, LpStatus, SolverError

PIVOT_TOL = 1e-9
SINGULAR_TOL = 1e-11
OPT_TOL = 1e-9
REINVERT_EVERY = 100


@dataclass
class StandardForm:
    """``min c.y  s.t.  A y = b, 0 <= y <= u`` plus the map back to model space."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    u: np.ndarray
    obj_const: float
    # x = x0 + R @ y[:n_struct]
    x0: np.ndarray
    R: np.ndarray
    n_struct: int
    slack_of_row: np.ndarray  # column of the +1 slack usable as initial basis, or -1
    infeasible_bounds: bool = False


def standardize(c, A, senses, b, lower, upper) -> StandardForm:
    """Bring a bounded LP to equality form with nonnegative bounded columns."""
    A = A.toarray() if hasattr(A, "toarray") else np.asarray(A, dtype=float)
    m, n = A.shape
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)

    x0 = np.zeros(n)
    cols, ub, cost, rmap = [], [], [], []
    infeasible = bool(np.any(lower > upper + 1e-12))
    for j in range(n):
        lo, hi = lower[j], upper[j]
        if math.isfinite(lo) and math.isfinite(hi) and hi - lo <= 0:
            x0[j] = lo  # fixed: folded into b
        elif math.isfinite(lo):
            x0[j] = lo
            cols.append(A[:, j]); ub.append(hi - lo); cost.append(c[j]); rmap.append((j, 1.0))
        elif math.isfinite(hi):
            x0[j] = hi
            cols.append(-A[:, j]); ub.append(math.inf); cost.append(-c[j]); rmap.append((j, -1.0))
        else:
            cols.append(A[:, j]); ub.append(math.inf); cost.append(c[j]); rmap.append((j, 1.0))
            cols.append(-A[:, j]); ub.append(math.inf); cost.append(-c[j]); rmap.append((j, -1.0))
    n_struct = len(cols)
    R = np.zeros((n, n_struct))
    for k, (j, sgn) in enumerate(rmap):
        R[j, k] = sgn
    b = b - A @ x0
    obj_const = float(c @ x0)

    slack_cols = []
    slack_row = np.full(m, -1, dtype=int)
    for i, sense in enumerate(senses):
        if sense is Sense.EQ:
            continue
        col = np.zeros(m)
        col[i] = 1.0 if sense is Sense.LE else -1.0
        slack_cols.append(col)
        slack_row[i] = n_struct + len(slack_cols) - 1
    n_slack = len(slack_cols)
    big = np.zeros((m, n_struct + n_slack))
    if n_struct:
        big[:, :n_struct] = np.column_stack(cols)
    if n_slack:
        big[:, n_struct:] = np.column_stack(slack_cols)
    u = np.array(ub + [math.inf] * n_slack, dtype=float)
    cc = np.array(cost + [0.0] * n_slack, dtype=float)

    neg = b < 0
    big[neg] *= -1.0
    b[neg] *= -1.0
    usable = np.full(m, -1, dtype=int)
    for i in range(m):
        j = slack_row[i]
        if j >= 0 and big[i, j] > 0:
            usable[i] = j
    return StandardForm(big, b, cc, u, obj_const, x0, R, n_struct, usable, infeasible)


class SimplexTableau:
    """Dense tableau ``B^-1 [A]`` with basis bookkeeping.

    ``basis[i]`` is the column basic in row ``i``; ``at_upper[j]`` marks
    nonbasic columns resting at their upper bound.
    """

    def __init__(self, A: np.ndarray, b: np.ndarray, u: np.ndarray, basis: np.ndarray):
        self.A = A  # original standardized matrix, kept for reinversion
        self.b = b
        self.u = u
        self.m, self.n = A.shape
        self.basis = basis.copy()
        self.at_upper = np.zeros(self.n, dtype=bool)
        self.is_basic = np.zeros(self.n, dtype=bool)
        self.is_basic[self.basis] = True
        self.T = A.copy()
        self.beta = b.copy()
        self.phase = 1
        self.banned = np.zeros(self.n, dtype=bool)
        self.reinvert()

    def nonbasic_values(self) -> np.ndarray:
        v = np.where(self.at_upper, self.u, 0.0)
        v[self.is_basic] = 0.0
        return v

    def reinvert(self) -> None:
        if self.m == 0:
            return
        B = self.A[:, self.basis]
        try:
            self.T = np.linalg.solve(B, self.A)
            self.beta = np.linalg.solve(B, self.b - self.A @ self.nonbasic_values())
        except np.linalg.LinAlgError:
            raise SolverError("basis matrix became singular during reinversion") from None
        self.T[:, self.basis] = np.eye(self.m)

    def values(self) -> np.ndarray:
        y = self.nonbasic_values()
        y[self.basis] = self.beta
        return y

    def pivot(self, p: int, q: int) -> None:
        piv = self.T[p, q]
        if abs(piv) < SINGULAR_TOL:
            raise SolverError(f"numerically singular pivot {piv:.3e} at row {p}, column {q}")
        self.T[p] /= piv
        col = self.T[:, q].copy()
        col[p] = 0.0
        self.T -= np.outer(col, self.T[p])
        self.T[:, q] = 0.0
        self.T[p, q] = 1.0
        leaving = self.basis[p]
        self.is_basic[leaving] = False
        self.is_basic[q] = True
        self.basis[p] = q

    def drop_row(self, p: int) -> None:
        keep = np.arange(self.m) != p
        self.is_basic[self.basis[p]] = False
        self.A, self.b, self.T = self.A[keep], self.b[keep], self.T[keep]
        self.beta, self.basis = self.beta[keep], self.basis[keep]
        self.m -= 1


def _run_phase(tab: SimplexTableau, cost: np.ndarray, max_iter: int) -> tuple[str, int]:
    """Primal simplex iterations for ``cost`` from the tableau's current basis."""
    m, n = tab.m, tab.n
    d = cost - cost[tab.basis] @ tab.T if m else cost.copy()
    stall_limit = 3 * (m + n)
    bland = False
    best = math.inf
    since_progress = 0
    iters = 0
    while iters < max_iter:
        obj = float(cost @ tab.values())
        if obj < best - 1e-12 * max(1.0, abs(best) if math.isfinite(best) else 1.0):
            best = obj
            since_progress = 0
        else:
            since_progress += 1
            if since_progress > stall_limit:
                bland = True

        eligible = ~tab.is_basic & ~tab.banned & (
            (~tab.at_upper & (d < -OPT_TOL)) | (tab.at_upper & (d > OPT_TOL))
        )
        cand = np.flatnonzero(eligible)
        if cand.size == 0:
            return "optimal", iters
        q = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
        direction = -1.0 if tab.at_upper[q] else 1.0

        alpha = tab.T[:, q] * direction
        ub_basic = tab.u[tab.basis]
        ratios = np.full(m, math.inf)
        pos = alpha > PIVOT_TOL
        neg = (alpha < -PIVOT_TOL) & np.isfinite(ub_basic)
        ratios[pos] = np.maximum(tab.beta[pos], 0.0) / alpha[pos]
        ratios[neg] = np.maximum(ub_basic[neg] - tab.beta[neg], 0.0) / -alpha[neg]
        rmin = ratios.min() if m else math.inf
        p = -1
        if rmin < tab.u[q]:
            theta = rmin
            ties = np.flatnonzero(ratios <= rmin + 1e-12)
            if bland:
                p = int(ties[np.argmin(tab.basis[ties])])
            else:
                p = int(ties[np.argmax(np.abs(alpha[ties]))])
            to_upper = bool(neg[p])
        else:
            theta = tab.u[q]
        if not math.isfinite(theta):
            return "unbounded", iters

        iters += 1
        tab.beta = tab.beta - theta * alpha
        if p < 0:
            tab.at_upper[q] = not tab.at_upper[q]  # bound flip
            continue
        enter_val = (tab.u[q] if tab.at_upper[q] else 0.0) + direction * theta
        leaving = tab.basis[p]
        tab.pivot(p, q)
        tab.at_upper[leaving] = to_upper
        tab.at_upper[q] = False
        tab.beta[p] = enter_val
        if iters % REINVERT_EVERY == 0:
            tab.reinvert()
            d = cost - cost[tab.basis] @ tab.T
        else:
            d = d - d[q] * tab.T[p]
            d[tab.basis] = 0.0
    raise SolverError(f"simplex iteration limit {max_iter} reached")


def solve_standard(
    c, A, senses, b, lower, upper, eps_feas: float = 1e-7, max_iter: int | None = None
) -> LpSolution:
    """Solve ``min c.x`` over rows ``A x (<=|>=|=) b`` and ``lower <= x <= upper``."""
    sf = standardize(c, A, senses, b, lower, upper)
    n_model = len(np.asarray(c))
    if sf.infeasible_bounds:
        return LpSolution(LpStatus.INFEASIBLE, math.nan, None, 0)
    m, n0 = sf.A.shape
    if max_iter is None:
        max_iter = 50 * (m + n0) + 1000

    # phase 1: artificials for rows lacking a usable slack
    need = np.flatnonzero(sf.slack_of_row < 0)
    art = np.zeros((m, need.size))
    art[need, np.arange(need.size)] = 1.0
    A1 = np.hstack([sf.A, art]) if need.size else sf.A
    u1 = np.concatenate([sf.u, np.full(need.size, math.inf)])
    basis = sf.slack_of_row.copy()
    basis[need] = n0 + np.arange(need.size)
    tab = SimplexTableau(A1, sf.b, u1, basis)
    iters = 0
    if need.size:
        cost1 = np.zeros(n0 + need.size)
        cost1[n0:] = 1.0
        status, k = _run_phase(tab, cost1, max_iter)
        iters += k
        tab.reinvert()
        infeas = float(cost1 @ tab.values())
        if infeas > eps_feas:
            return LpSolution(LpStatus.INFEASIBLE, math.nan, None, iters)
        # drive zero-valued artificials out of the basis, dropping redundant rows
        p = 0
        while p < tab.m:
            if tab.basis[p] >= n0:
                row = np.abs(tab.T[p, :n0])
                row[tab.is_basic[:n0]] = 0.0
                q = int(np.argmax(row)) if row.size else -1
                if q >= 0 and row[q] > 1e-7:
                    val = tab.u[q] if tab.at_upper[q] else 0.0
                    tab.pivot(p, q)
                    tab.at_upper[q] = False
                    tab.beta[p] = val
                else:
                    tab.drop_row(p)
                    continue
            p += 1
        tab.banned[n0:] = True
        tab.u[n0:] = 0.0
        tab.at_upper[n0:] = False
        tab.reinvert()

    tab.phase = 2
    cost2 = np.concatenate([sf.c, np.zeros(tab.n - n0)])
    status, k = _run_phase(tab, cost2, max_iter)
    iters += k
    if status == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, -math.inf, None, iters)
    tab.reinvert()
    y = tab.values()[: sf.n_struct]
    x = sf.x0 + sf.R @ y
    x = np.clip(x, lower, upper)
    obj = float(np.asarray(c, dtype=float) @ x)
    assert x.shape == (n_model,)
    return LpSolution(LpStatus.OPTIMAL, obj, x, iters)


def solve_lp(
    model: MilpModel,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
    eps_feas: float = 1e-7,
) -> LpSolution:
    """LP relaxation of ``model`` (binaries relaxed to their bounds).

    ``lower``/``upper`` override the model's variable bounds, which is how
    branch-and-bound fixes binaries without copying the model.
    """
    c, A, senses, b, lo, hi, _ = model.arrays()
    lo = lo if lower is None else np.asarray(lower, dtype=float)
    hi = hi if upper is None else np.asarray(upper, dtype=float)
    sol = solve_standard(c, A, senses, b, lo, hi, eps_feas=eps_feas)
    if sol.ok:
        sol.objective += model.objective_constant
    return sol
