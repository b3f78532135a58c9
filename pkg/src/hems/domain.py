"""Scenario, device and profile types for the home energy optimizer.

Types are plain frozen dataclasses and do not check themselves on
construction; call :func:`validate` to get the list of broken invariants.
Intervals are 1-based: interval ``t`` covers clock hour ``t-1`` to ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping


class ProfileKind(str, Enum):
    OUTSIDE_TEMPERATURE = "outside_temperature"  # degC
    ACTIVITY_LEVEL = "activity_level"  # fraction 0-1
    BUY_PRICE = "buy_price"  # $/kWh
    PV_OUTPUT = "pv_output"  # kW


class StorageKind(str, Enum):
    DESD = "desd"
    PHEV = "phev"


@dataclass(frozen=True)
class TimeGrid:
    horizon_len: int = 24
    interval_hours: float = 1.0

    @property
    def intervals(self) -> range:
        return range(1, self.horizon_len + 1)

    def violations(self, path: str = "grid") -> list[str]:
        out = []
        if self.horizon_len < 1:
            out.append(f"{path}.horizon_len: must be >= 1 (got {self.horizon_len})")
        if not self.interval_hours > 0:
            out.append(f"{path}.interval_hours: must be > 0 (got {self.interval_hours})")
        return out


@dataclass(frozen=True)
class Profile:
    kind: ProfileKind
    values: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.values)

    def at(self, t: int) -> float:
        """Value for 1-based interval ``t``."""
        return self.values[t - 1]

    def violations(self, grid: TimeGrid, path: str) -> list[str]:
        out = []
        if len(self.values) != grid.horizon_len:
            out.append(
                f"{path}.values: length {len(self.values)} != horizon_len {grid.horizon_len}"
            )
        for i, v in enumerate(self.values, start=1):
            if not math.isfinite(v):
                out.append(f"{path}.values[{i}]: not finite ({v})")
            elif self.kind is ProfileKind.ACTIVITY_LEVEL and not 0.0 <= v <= 1.0:
                out.append(f"{path}.values[{i}]: activity level {v} outside [0, 1]")
            elif self.kind in (ProfileKind.PV_OUTPUT, ProfileKind.BUY_PRICE) and v < 0:
                out.append(f"{path}.values[{i}]: {self.kind.value} {v} is negative")
        return out


@dataclass(frozen=True)
class HvacPair:
    """Air conditioner and heater sharing one indoor temperature state.

    ``v_*`` is the per-unit-activity drift while OFF, ``u_*`` the temperature
    change of one ON interval and ``i_*`` the share of the indoor/outdoor gap
    closed per interval.
    """

    ac_rated_kw: float = 1.9
    ht_rated_kw: float = 1.5
    v_ac: float = 0.5
    v_ht: float = 0.5
    u_ac: float = 2.0
    u_ht: float = 2.0
    i_ac: float = 0.2
    i_ht: float = 0.2
    theta_init: float = 22.0
    comfort_min: float = 20.0
    comfort_max: float = 24.0

    def violations(self, path: str = "hvac") -> list[str]:
        out = []
        if not self.ac_rated_kw > 0:
            out.append(f"{path}.ac_rated_kw: must be > 0")
        if not self.ht_rated_kw > 0:
            out.append(f"{path}.ht_rated_kw: must be > 0")
        if not self.u_ac > 0:
            out.append(f"{path}.u_ac: must be > 0")
        if not self.u_ht > 0:
            out.append(f"{path}.u_ht: must be > 0")
        for name in ("i_ac", "i_ht"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                out.append(f"{path}.{name}: must lie in [0, 1]")
        if not self.comfort_min < self.comfort_max:
            out.append(f"{path}.comfort_min: must be < comfort_max")
        return out


@dataclass(frozen=True)
class FridgeDevice:
    rated_kw: float = 0.42
    u_fr: float = 1.0
    v_fr: float = 1.5
    alpha_fr: float = 0.5
    theta_fr_init: float = 4.0
    band_min: float = 2.0
    band_max: float = 6.0

    def violations(self, path: str = "fridge") -> list[str]:
        out = []
        if not self.rated_kw > 0:
            out.append(f"{path}.rated_kw: must be > 0")
        if not self.v_fr > 0:
            out.append(f"{path}.v_fr: must be > 0")
        if not self.alpha_fr > 0:
            out.append(f"{path}.alpha_fr: must be > 0")
        if not self.band_min < self.band_max:
            out.append(f"{path}.band_min: must be < band_max")
        return out


@dataclass(frozen=True)
class CyclingAppliance:
    name: str
    rated_kw: float
    required_runtime: int
    max_successive: int
    min_up: int = 1
    min_down: int = 1
    allowed_window: tuple[int, ...] = ()

    def violations(self, grid: TimeGrid, path: str) -> list[str]:
        out = []
        if not self.name:
            out.append(f"{path}.name: must be non-empty")
        if not self.rated_kw > 0:
            out.append(f"{path}.rated_kw: must be > 0")
        if not 1 <= self.required_runtime <= len(set(self.allowed_window)):
            out.append(
                f"{path}.required_runtime: must lie in [1, |allowed_window|="
                f"{len(set(self.allowed_window))}] (got {self.required_runtime})"
            )
        if self.min_up < 1:
            out.append(f"{path}.min_up: must be >= 1")
        if self.min_up > self.max_successive:
            out.append(f"{path}.min_up: must be <= max_successive")
        if self.min_down < 1:
            out.append(f"{path}.min_down: must be >= 1")
        bad = [t for t in self.allowed_window if t not in grid.intervals]
        if bad:
            out.append(f"{path}.allowed_window: intervals {bad} outside the horizon")
        return out


@dataclass(frozen=True)
class PrecedencePair:
    first: str
    second: str
    gap_omega: int = 1

    def violations(self, names: set[str], path: str) -> list[str]:
        out = []
        if self.first == self.second:
            out.append(f"{path}.first: must differ from second")
        for attr in ("first", "second"):
            if getattr(self, attr) not in names:
                out.append(f"{path}.{attr}: unknown appliance {getattr(self, attr)!r}")
        if self.gap_omega < 1:
            out.append(f"{path}.gap_omega: must be >= 1")
        return out


@dataclass(frozen=True)
class StorageDevice:
    """A battery; the PHEV is one restricted to its plugged-in intervals.

    A discharge rate of 0 disables discharge entirely (charge-only vehicle).
    """

    name: str
    kind: StorageKind
    capacity_kwh: float
    soe_init: float
    soe_min: float
    soe_max: float
    charge_rate_kw: float
    discharge_rate_kw: float
    eta_charge: float = 1.0
    eta_discharge: float = 1.0
    degradation_cost: float = 0.0
    availability: tuple[int, ...] = ()
    full_charge_deadline: int | None = None
    can_sell_to_grid: bool = True
    can_charge_from_grid: bool = True

    def violations(self, grid: TimeGrid, path: str) -> list[str]:
        out = []
        if not self.name:
            out.append(f"{path}.name: must be non-empty")
        if not 0 <= self.soe_min:
            out.append(f"{path}.soe_min: must be >= 0")
        if not self.soe_min <= self.soe_init:
            out.append(f"{path}.soe_init: {self.soe_init} below soe_min {self.soe_min}")
        if not self.soe_init <= self.soe_max:
            out.append(f"{path}.soe_init: {self.soe_init} above soe_max {self.soe_max}")
        if not self.soe_max <= self.capacity_kwh:
            out.append(f"{path}.soe_max: {self.soe_max} above capacity_kwh {self.capacity_kwh}")
        if not self.charge_rate_kw > 0:
            out.append(f"{path}.charge_rate_kw: must be > 0")
        if not self.discharge_rate_kw >= 0:
            out.append(f"{path}.discharge_rate_kw: must be >= 0")
        if not 0 < self.eta_charge <= 1:
            out.append(f"{path}.eta_charge: must lie in (0, 1]")
        if not 0 < self.eta_discharge <= 1:
            out.append(f"{path}.eta_discharge: must lie in (0, 1]")
        if not self.degradation_cost >= 0:
            out.append(f"{path}.degradation_cost: must be >= 0")
        if not self.availability:
            out.append(f"{path}.availability: must contain at least one interval")
        bad = [t for t in self.availability if t not in grid.intervals]
        if bad:
            out.append(f"{path}.availability: intervals {bad} outside the horizon")
        if len(set(self.availability)) != len(self.availability):
            out.append(f"{path}.availability: duplicate intervals")
        if (
            self.full_charge_deadline is not None
            and self.full_charge_deadline not in self.availability
        ):
            out.append(
                f"{path}.full_charge_deadline: interval {self.full_charge_deadline} "
                "outside availability"
            )
        return out

    @property
    def intervals(self) -> list[int]:
        return sorted(self.availability)


@dataclass(frozen=True)
class GridContract:
    sell_price: float = 0.04
    max_buy_kw: float = 12.0
    max_sell_kw: float = 5.0

    def violations(self, path: str = "contract") -> list[str]:
        out = []
        if not self.sell_price >= 0:
            out.append(f"{path}.sell_price: must be >= 0")
        if not self.max_buy_kw > 0:
            out.append(f"{path}.max_buy_kw: must be > 0")
        if not self.max_sell_kw >= 0:
            out.append(f"{path}.max_sell_kw: must be >= 0")
        return out


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    grid: TimeGrid
    profiles: Mapping[ProfileKind, Profile]
    hvac: HvacPair
    fridge: FridgeDevice
    appliances: tuple[CyclingAppliance, ...] = ()
    precedences: tuple[PrecedencePair, ...] = ()
    storages: tuple[StorageDevice, ...] = ()
    pv_enabled: bool = True
    contract: GridContract = field(default_factory=GridContract)
    # field path -> "document" or "default (<value>)"; not part of equality
    provenance: Mapping[str, str] = field(default_factory=dict, compare=False, repr=False)

    def profile(self, kind: ProfileKind) -> Profile:
        return self.profiles[kind]

    def appliance(self, name: str) -> CyclingAppliance:
        for app in self.appliances:
            if app.name == name:
                return app
        raise KeyError(name)


def validate(config: ScenarioConfig) -> list[str]:
    """Return every invariant violation in ``config``, in field order.

    An empty list means the configuration is valid.
    """
    out = list(config.grid.violations())
    for kind in ProfileKind:
        path = f"profiles.{kind.value}"
        prof = config.profiles.get(kind)
        if prof is None:
            out.append(f"{path}: missing")
            continue
        if prof.kind is not kind:
            out.append(f"{path}.kind: holds a {prof.kind.value} profile")
        out.extend(prof.violations(config.grid, path))
    out.extend(config.hvac.violations())
    out.extend(config.fridge.violations())
    names = [a.name for a in config.appliances]
    for i, app in enumerate(config.appliances):
        path = f"appliances[{i}]"
        out.extend(app.violations(config.grid, path))
        if names.count(app.name) > 1:
            out.append(f"{path}.name: duplicate appliance name {app.name!r}")
    for i, pair in enumerate(config.precedences):
        out.extend(pair.violations(set(names), f"precedences[{i}]"))
    snames = [s.name for s in config.storages]
    for i, dev in enumerate(config.storages):
        path = f"storages[{i}]"
        out.extend(dev.violations(config.grid, path))
        if snames.count(dev.name) > 1:
            out.append(f"{path}.name: duplicate storage name {dev.name!r}")
    out.extend(config.contract.violations())
    return out
