from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Proven gap at or below this counts as optimal rather than merely feasible.
OPTIMAL_GAP = 1e-6


class SolverError(RuntimeError):
    pass


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class MilpStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT_REACHED = "limit_reached"


@dataclass(frozen=True)
class BnbParams:
    eps_int: float = 1e-6
    eps_feas: float = 1e-7
    gap_abs: float = 1e-6
    node_limit: int = 1_000_000
    time_limit_s: float | None = None

    def __post_init__(self):
        for name in ("eps_int", "eps_feas", "gap_abs"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.node_limit < 1:
            raise ValueError("node_limit must be >= 1")
        if self.time_limit_s is not None and not self.time_limit_s > 0:
            raise ValueError("time_limit_s must be > 0")


@dataclass
class LpSolution:
    status: LpStatus
    objective: float
    x: np.ndarray | None
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status is LpStatus.OPTIMAL


@dataclass
class MilpSolution:
    status: MilpStatus
    objective: float = math.nan
    x: np.ndarray | None = None
    gap: float = math.inf
    best_bound: float = -math.inf
    nodes_explored: int = 0
    wall_time: float = 0.0
    solver: str = "bnb"
    incumbent_trace: list[float] = field(default_factory=list, repr=False)

    @property
    def has_assignment(self) -> bool:
        return self.x is not None

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "objective": None if self.x is None else self.objective,
            "gap": None if not math.isfinite(self.gap) else self.gap,
            "best_bound": None if not math.isfinite(self.best_bound) else self.best_bound,
            "nodes": self.nodes_explored,
            "solver": self.solver,
        }
