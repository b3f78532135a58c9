"""Best-first branch-and-bound over the binary variables of a model.

Nodes are ordered by their parent's LP bound (ties by creation order); the
branching variable is the most fractional binary, ties broken by lowest
variable id. Each node LP is solved from scratch by the simplex in
:mod:`.simplex` with the node's bound overrides.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time

import numpy as np

from ..formulation import MilpModel
from .simplex import solve_lp
from .types import OPTIMAL_GAP, BnbParams, LpStatus, MilpSolution, MilpStatus


def most_fractional(x: np.ndarray, binaries: np.ndarray, eps_int: float) -> int:
    """Index of the binary closest to 0.5, or -1 if all are integral."""
    vals = x[binaries]
    frac = np.abs(vals - np.round(vals))
    if frac.size == 0 or frac.max() <= eps_int:
        return -1
    # argmax returns the first maximum, i.e. the lowest variable id
    return int(binaries[np.argmax(frac)])


def polish(model: MilpModel, x: np.ndarray, params: BnbParams, solve=solve_lp):
    """Round binaries in ``x`` and re-solve the LP over the continuous part."""
    c, A, senses, b, lo, hi, isbin = model.arrays()
    lo, hi = lo.copy(), hi.copy()
    fixed = np.round(x[isbin])
    lo[isbin] = fixed
    hi[isbin] = fixed
    return solve(model, lo, hi, eps_feas=params.eps_feas)


def branch_and_bound(model: MilpModel, params: BnbParams | None = None) -> MilpSolution:
    params = params or BnbParams()
    start = time.perf_counter()
    _, _, _, _, lo0, hi0, isbin = model.arrays()
    binaries = np.flatnonzero(isbin)

    counter = itertools.count()
    heap: list = [(-math.inf, next(counter), lo0, hi0)]
    incumbent_obj = math.inf
    incumbent_x = None
    trace: list[float] = []
    nodes = 0
    limit_hit = False
    unbounded = False

    while heap:
        bound = heap[0][0]
        if bound >= incumbent_obj - params.gap_abs:
            break
        if nodes >= params.node_limit or (
            params.time_limit_s is not None
            and time.perf_counter() - start >= params.time_limit_s
        ):
            limit_hit = True
            break
        _, _, lo, hi = heapq.heappop(heap)
        nodes += 1
        lp = solve_lp(model, lo, hi, eps_feas=params.eps_feas)
        if lp.status is LpStatus.INFEASIBLE:
            continue
        if lp.status is LpStatus.UNBOUNDED:
            unbounded = True
            break
        if lp.objective >= incumbent_obj - params.gap_abs:
            continue
        j = most_fractional(lp.x, binaries, params.eps_int)
        if j < 0:
            incumbent_obj, incumbent_x = lp.objective, lp.x
            trace.append(incumbent_obj)
            continue
        down_hi = hi.copy()
        down_hi[j] = 0.0
        up_lo = lo.copy()
        up_lo[j] = 1.0
        heapq.heappush(heap, (lp.objective, next(counter), lo, down_hi))
        heapq.heappush(heap, (lp.objective, next(counter), up_lo, hi))

    elapsed = time.perf_counter() - start
    if unbounded:
        return MilpSolution(MilpStatus.UNBOUNDED, -math.inf, None, nodes_explored=nodes,
                            wall_time=elapsed, incumbent_trace=trace)

    best_bound = min((n[0] for n in heap), default=incumbent_obj)
    best_bound = min(best_bound, incumbent_obj)
    if incumbent_x is not None:
        final = polish(model, incumbent_x, params)
        if final.ok:
            incumbent_x, incumbent_obj = final.x, final.objective
        x = incumbent_x.copy()
        x[binaries] = np.round(x[binaries])
    else:
        x = None
    gap = incumbent_obj - best_bound if x is not None else math.inf

    if limit_hit:
        status = MilpStatus.LIMIT_REACHED
    elif x is None:
        status = MilpStatus.INFEASIBLE
    elif gap <= OPTIMAL_GAP:
        status = MilpStatus.OPTIMAL
    else:
        status = MilpStatus.FEASIBLE
    return MilpSolution(
        status,
        incumbent_obj if x is not None else math.nan,
        x,
        gap=max(gap, 0.0) if x is not None else math.inf,
        best_bound=best_bound,
        nodes_explored=nodes,
        wall_time=elapsed,
        solver="bnb",
        incumbent_trace=trace,
    )
