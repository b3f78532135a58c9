"""HiGHS backend returning the same solution types as the native solver.

Used for full-day scenarios, whose thermal binaries leave a relaxation gap
that cut-free best-first search cannot close in reasonable time.
"""

from __future__ import annotations

import math
import time

import highspy
import numpy as np

from ..formulation import MilpModel, Sense
from .bnb import polish
from .types import OPTIMAL_GAP, BnbParams, LpSolution, LpStatus, MilpSolution, MilpStatus

_INF = highspy.kHighsInf


def _highs(model: MilpModel, lower, upper, integer: bool, options: dict) -> highspy.Highs:
    c, A, senses, b, lo, hi, isbin = model.arrays()
    lo = lo if lower is None else np.asarray(lower, dtype=float)
    hi = hi if upper is None else np.asarray(upper, dtype=float)
    csc = A.tocsc()
    lp = highspy.HighsLp()
    lp.num_col_ = model.num_vars
    lp.num_row_ = len(model.constraints)
    lp.col_cost_ = c
    lp.col_lower_ = np.where(np.isfinite(lo), lo, -_INF)
    lp.col_upper_ = np.where(np.isfinite(hi), hi, _INF)
    lp.row_lower_ = np.array([-_INF if s is Sense.LE else r for s, r in zip(senses, b)])
    lp.row_upper_ = np.array([_INF if s is Sense.GE else r for s, r in zip(senses, b)])
    lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    lp.a_matrix_.start_ = csc.indptr
    lp.a_matrix_.index_ = csc.indices
    lp.a_matrix_.value_ = csc.data
    if integer:
        lp.integrality_ = [
            highspy.HighsVarType.kInteger if f else highspy.HighsVarType.kContinuous
            for f in isbin
        ]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    h.setOptionValue("random_seed", 0)
    for key, val in options.items():
        h.setOptionValue(key, val)
    h.passModel(lp)
    return h


def solve_lp_highs(model: MilpModel, lower=None, upper=None, eps_feas: float = 1e-7) -> LpSolution:
    h = _highs(model, lower, upper, False, {"primal_feasibility_tolerance": eps_feas})
    h.run()
    st = h.getModelStatus()
    if st == highspy.HighsModelStatus.kOptimal:
        x = np.array(h.getSolution().col_value)
        obj = float(model.objective_value(x))
        return LpSolution(LpStatus.OPTIMAL, obj, x, int(h.getInfo().simplex_iteration_count))
    if st == highspy.HighsModelStatus.kUnbounded:
        return LpSolution(LpStatus.UNBOUNDED, -math.inf, None)
    return LpSolution(LpStatus.INFEASIBLE, math.nan, None)


def solve_milp_highs(model: MilpModel, params: BnbParams | None = None) -> MilpSolution:
    params = params or BnbParams()
    start = time.perf_counter()
    options = {
        "mip_abs_gap": params.gap_abs,
        "mip_rel_gap": 0.0,
        "mip_feasibility_tolerance": params.eps_int,
        "primal_feasibility_tolerance": params.eps_feas,
        "mip_max_nodes": int(params.node_limit),
    }
    if params.time_limit_s is not None:
        options["time_limit"] = float(params.time_limit_s)
    h = _highs(model, None, None, True, options)
    h.run()
    st = h.getModelStatus()
    if st == highspy.HighsModelStatus.kUnboundedOrInfeasible:
        h.setOptionValue("presolve", "off")
        h.run()
        st = h.getModelStatus()
    info = h.getInfo()
    nodes = int(info.mip_node_count)
    bound = float(info.mip_dual_bound)
    S = highspy.HighsModelStatus
    has_x = info.primal_solution_status == 2  # kSolutionStatusFeasible
    x = np.array(h.getSolution().col_value) if has_x else None

    if st == S.kInfeasible:
        status = MilpStatus.INFEASIBLE
        x = None
    elif st == S.kUnbounded:
        status = MilpStatus.UNBOUNDED
        x = None
    elif st == S.kOptimal:
        status = MilpStatus.OPTIMAL
    else:
        status = MilpStatus.LIMIT_REACHED

    obj = math.nan
    if x is not None:
        final = polish(model, x, params, solve=solve_lp_highs)
        if final.ok:
            x = final.x
        isbin = np.array([v.binary for v in model.variables], dtype=bool)
        x[isbin] = np.round(x[isbin])
        obj = model.objective_value(x)
    if x is not None and st == S.kOptimal and not any(v.binary for v in model.variables):
        bound = obj  # pure LP: no MIP bound is reported
    gap = obj - bound if x is not None and math.isfinite(bound) else math.inf
    if status is MilpStatus.OPTIMAL and gap > OPTIMAL_GAP:
        status = MilpStatus.FEASIBLE
    return MilpSolution(
        status,
        obj,
        x,
        gap=max(gap, 0.0),
        best_bound=bound if math.isfinite(bound) else -math.inf,
        nodes_explored=nodes,
        wall_time=time.perf_counter() - start,
        solver="highs",
    )
