"""Decode a solved model into per-device dispatch and a cost breakdown."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import ProfileKind, ScenarioConfig, StorageKind
from .formulation import MilpModel
from .solver.types import MilpSolution


@dataclass(frozen=True)
class CostBreakdown:
    energy_purchase: float
    energy_sale_revenue: float
    degradation_desd: float
    degradation_phev: float

    @property
    def total(self) -> float:
        return (
            self.energy_purchase
            - self.energy_sale_revenue
            + self.degradation_desd
            + self.degradation_phev
        )

    def to_dict(self) -> dict:
        return {
            "energy_purchase": self.energy_purchase,
            "energy_sale_revenue": self.energy_sale_revenue,
            "degradation_desd": self.degradation_desd,
            "degradation_phev": self.degradation_phev,
            "total": self.total,
        }


@dataclass(frozen=True)
class StorageTrace:
    """Per-interval flows of one battery; ``None`` where it is unavailable."""

    name: str
    kind: StorageKind
    charge: tuple[float | None, ...]
    discharge: tuple[float | None, ...]
    used: tuple[float | None, ...]
    sold: tuple[float | None, ...]
    soe: tuple[float | None, ...]


@dataclass(frozen=True)
class Schedule:
    scenario: str
    horizon_len: int
    interval_hours: float
    status: dict[str, tuple[int, ...]]  # device -> ON flags per interval
    theta_in: tuple[float, ...]
    theta_fr: tuple[float, ...]
    pv_used: tuple[float, ...]
    pv_sold: tuple[float, ...]
    buy: tuple[float, ...]
    sell: tuple[float, ...]
    grid_status: tuple[int, ...]
    load: tuple[float, ...]
    storages: dict[str, StorageTrace] = field(default_factory=dict)
    cost: CostBreakdown | None = None
    objective: float = 0.0


def _clean(v: float) -> float:
    return 0.0 if abs(v) < 1e-12 else float(v)


def extract_schedule(solution: MilpSolution, model: MilpModel, config: ScenarioConfig) -> Schedule:
    if solution.x is None:
        raise ValueError(f"solution has no assignment (status {solution.status.value})")
    return decode(solution.x, model, config)


def decode(x: np.ndarray, model: MilpModel, config: ScenarioConfig) -> Schedule:
    """Build a :class:`Schedule` from a raw assignment over ``model``'s variables."""
    T = list(config.grid.intervals)
    dt = config.grid.interval_hours

    def get(name: str, default: float | None = 0.0):
        return _clean(x[model.var(name)]) if model.has_var(name) else default

    def series(fmt: str) -> tuple[float, ...]:
        return tuple(get(fmt.format(t=t)) for t in T)

    def flags(fmt: str) -> tuple[int, ...]:
        return tuple(int(round(get(fmt.format(t=t)))) for t in T)

    status = {
        "ac": flags("s_ac.hvac.{t}"),
        "heater": flags("s_ht.hvac.{t}"),
        "fridge": flags("s_fr.fridge.{t}"),
    }
    for app in config.appliances:
        status[app.name] = flags(f"s.{app.name}.{{t}}")

    rated = {"ac": config.hvac.ac_rated_kw, "heater": config.hvac.ht_rated_kw,
             "fridge": config.fridge.rated_kw}
    rated.update({a.name: a.rated_kw for a in config.appliances})
    load = tuple(
        _clean(sum(rated[dev] * status[dev][i] for dev in status)) for i in range(len(T))
    )

    storages = {}
    deg = {StorageKind.DESD: 0.0, StorageKind.PHEV: 0.0}
    for dev in config.storages:
        trace = StorageTrace(
            dev.name,
            dev.kind,
            *(
                tuple(get(f"{sym}.{dev.name}.{t}", None) for t in T)
                for sym in ("P_ch", "P_dis", "P_used", "P_s", "SOE")
            ),
        )
        storages[dev.name] = trace
        throughput = sum(v for v in trace.charge + trace.discharge if v is not None)
        deg[dev.kind] += dev.degradation_cost * throughput * dt

    buy = series("P_b.grid.{t}")
    sell = series("P_s.grid.{t}")
    price = config.profile(ProfileKind.BUY_PRICE)
    cost = CostBreakdown(
        energy_purchase=sum(price.at(t) * b * dt for t, b in zip(T, buy)),
        energy_sale_revenue=sum(config.contract.sell_price * s * dt for s in sell),
        degradation_desd=deg[StorageKind.DESD],
        degradation_phev=deg[StorageKind.PHEV],
    )
    return Schedule(
        scenario=config.name,
        horizon_len=config.grid.horizon_len,
        interval_hours=dt,
        status=status,
        theta_in=series("theta_in.hvac.{t}"),
        theta_fr=series("theta_fr.fridge.{t}"),
        pv_used=series("P_used.pv.{t}"),
        pv_sold=series("P_s.pv.{t}"),
        buy=buy,
        sell=sell,
        grid_status=flags("s_grid.grid.{t}"),
        load=load,
        storages=storages,
        cost=cost,
        objective=model.objective_value(x),
    )
