"""LP/MILP solving: native simplex and branch-and-bound, HiGHS backend, MPS export."""

from __future__ import annotations

from ..formulation import MilpModel
from .bnb import branch_and_bound
from .mps import export_mps
from .simplex import SimplexTableau, solve_lp
from .types import (
    OPTIMAL_GAP,
    BnbParams,
    LpSolution,
    LpStatus,
    MilpSolution,
    MilpStatus,
    SolverError,
)

BACKENDS = ("highs", "bnb")


def solve_milp(model: MilpModel, params: BnbParams | None = None, backend: str = "highs") -> MilpSolution:
    """Solve ``model`` with the named backend ("highs" or the native "bnb")."""
    if backend == "bnb":
        return branch_and_bound(model, params)
    if backend == "highs":
        from .highs import solve_milp_highs

        return solve_milp_highs(model, params)
    raise ValueError(f"unknown solver backend {backend!r}; choose from {BACKENDS}")


__all__ = [
    "BACKENDS",
    "OPTIMAL_GAP",
    "BnbParams",
    "LpSolution",
    "LpStatus",
    "MilpSolution",
    "MilpStatus",
    "SimplexTableau",
    "SolverError",
    "branch_and_bound",
    "export_mps",
    "solve_lp",
    "solve_milp",
]
