"""Mixed-integer linear model of one day of household operation.

:class:`MilpModel` is a plain registry of variables and sparse linear rows.
The ``add_*`` builders append one constraint family each; :func:`build`
runs them in a fixed order so the same config always gives the same model.

Variable names follow ``<symbol>.<device>.<t>`` and constraint tags follow
``eq<k>.<device>.t=<t>``; both are part of the public naming contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .domain import (
    CyclingAppliance,
    FridgeDevice,
    GridContract,
    HvacPair,
    PrecedencePair,
    Profile,
    ProfileKind,
    ScenarioConfig,
    StorageDevice,
    StorageKind,
    TimeGrid,
    validate,
)


class FormulationError(ValueError):
    pass


class Sense(str, Enum):
    LE = "L"
    GE = "G"
    EQ = "E"


VarId = int


@dataclass(frozen=True)
class VarSpec:
    name: str
    lower: float = 0.0
    upper: float = math.inf
    binary: bool = False
    objective_coeff: float = 0.0


@dataclass(frozen=True)
class LinearConstraint:
    terms: tuple[tuple[VarId, float], ...]
    sense: Sense
    rhs: float
    tag: str


@dataclass
class MilpModel:
    """Minimisation model: variables, linear rows and a linear objective."""

    name: str = "hems"
    variables: list[VarSpec] = field(default_factory=list)
    constraints: list[LinearConstraint] = field(default_factory=list)
    objective_constant: float = 0.0
    _by_name: dict[str, VarId] = field(default_factory=dict, repr=False)
    _tags: set[str] = field(default_factory=set, repr=False)

    # -- registry ---------------------------------------------------------

    def add_var(
        self,
        name: str,
        lower: float = 0.0,
        upper: float = math.inf,
        binary: bool = False,
        obj: float = 0.0,
    ) -> VarId:
        if name in self._by_name:
            raise FormulationError(f"duplicate variable name {name!r}")
        if binary:
            lower, upper = max(0.0, lower), min(1.0, upper)
        if lower > upper:
            raise FormulationError(f"{name}: lower bound {lower} > upper bound {upper}")
        self.variables.append(VarSpec(name, float(lower), float(upper), binary, float(obj)))
        vid = len(self.variables) - 1
        self._by_name[name] = vid
        return vid

    def add_binary(self, name: str, obj: float = 0.0) -> VarId:
        return self.add_var(name, 0.0, 1.0, binary=True, obj=obj)

    def add_constraint(
        self,
        terms: Iterable[tuple[VarId, float]],
        sense: Sense | str,
        rhs: float,
        tag: str,
    ) -> LinearConstraint:
        merged: dict[VarId, float] = {}
        for vid, coef in terms:
            if not 0 <= vid < len(self.variables):
                raise FormulationError(f"{tag}: unknown variable id {vid}")
            merged[vid] = merged.get(vid, 0.0) + float(coef)
        if not all(math.isfinite(c) for c in merged.values()) or not math.isfinite(rhs):
            raise FormulationError(f"{tag}: non-finite coefficient")
        if tag in self._tags:
            raise FormulationError(f"duplicate constraint tag {tag!r}")
        con = LinearConstraint(
            tuple((v, c) for v, c in merged.items() if c != 0.0), Sense(sense), float(rhs), tag
        )
        self.constraints.append(con)
        self._tags.add(tag)
        return con

    def set_objective_coeff(self, vid: VarId, coef: float) -> None:
        spec = self.variables[vid]
        self.variables[vid] = VarSpec(spec.name, spec.lower, spec.upper, spec.binary, float(coef))

    def var(self, name: str) -> VarId:
        return self._by_name[name]

    def has_var(self, name: str) -> bool:
        return name in self._by_name

    # -- views ------------------------------------------------------------

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def binaries(self) -> list[VarId]:
        return [i for i, v in enumerate(self.variables) if v.binary]

    @property
    def tags(self) -> list[str]:
        return [c.tag for c in self.constraints]

    def matrix(self) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for i, con in enumerate(self.constraints):
            for vid, coef in con.terms:
                rows.append(i)
                cols.append(vid)
                vals.append(coef)
        return sp.csr_matrix(
            (vals, (rows, cols)), shape=(len(self.constraints), self.num_vars), dtype=float
        )

    def arrays(self):
        """Return ``(c, A, senses, b, lower, upper, is_binary)`` as numpy data."""
        c = np.array([v.objective_coeff for v in self.variables], dtype=float)
        lo = np.array([v.lower for v in self.variables], dtype=float)
        hi = np.array([v.upper for v in self.variables], dtype=float)
        isbin = np.array([v.binary for v in self.variables], dtype=bool)
        senses = [con.sense for con in self.constraints]
        b = np.array([con.rhs for con in self.constraints], dtype=float)
        return c, self.matrix(), senses, b, lo, hi, isbin

    def objective_value(self, x) -> float:
        return self.objective_constant + float(
            sum(v.objective_coeff * x[i] for i, v in enumerate(self.variables))
        )


# -- builders ------------------------------------------------------------------


def _check_len(grid: TimeGrid, *profiles: Profile) -> None:
    for prof in profiles:
        if len(prof) != grid.horizon_len:
            raise FormulationError(
                f"profile {prof.kind.value} has {len(prof)} values, "
                f"horizon is {grid.horizon_len}"
            )


def add_hvac(
    model: MilpModel,
    grid: TimeGrid,
    hvac: HvacPair,
    theta_out: Profile,
    activity: Profile,
) -> list[VarId]:
    """Indoor temperature recurrence with AC and heater sharing one state.

    The AC and heater recurrences are merged into one equality per interval
    using the mean OFF-drift and mean insulation coefficient, so the indoor
    temperature is determined uniquely by the two ON statuses.
    """
    problems = hvac.violations()
    if problems:
        raise FormulationError("; ".join(problems))
    _check_len(grid, theta_out, activity)
    drift = 0.5 * (hvac.v_ac + hvac.v_ht)
    leak = 0.5 * (hvac.i_ac + hvac.i_ht)
    created = []
    prev = None
    for t in grid.intervals:
        th = model.add_var(f"theta_in.hvac.{t}", hvac.comfort_min, hvac.comfort_max)
        s_ac = model.add_binary(f"s_ac.hvac.{t}")
        s_ht = model.add_binary(f"s_ht.hvac.{t}")
        created += [th, s_ac, s_ht]
        # theta(t) - (1-I) theta(t-1) + u_ac s_ac - u_ht s_ht = v A(t) + I theta_out(t)
        rhs = drift * activity.at(t) + leak * theta_out.at(t)
        terms = [(th, 1.0), (s_ac, hvac.u_ac), (s_ht, -hvac.u_ht)]
        if prev is None:
            rhs += (1.0 - leak) * hvac.theta_init
        else:
            terms.append((prev, -(1.0 - leak)))
        model.add_constraint(terms, Sense.EQ, rhs, f"eq2_3.hvac.t={t}")
        model.add_constraint([(s_ac, 1.0), (s_ht, 1.0)], Sense.LE, 1.0, f"eq4.hvac.t={t}")
        prev = th
    return created


def add_fridge(
    model: MilpModel, grid: TimeGrid, fridge: FridgeDevice, activity: Profile
) -> list[VarId]:
    problems = fridge.violations()
    if problems:
        raise FormulationError("; ".join(problems))
    _check_len(grid, activity)
    created = []
    prev = None
    for t in grid.intervals:
        th = model.add_var(f"theta_fr.fridge.{t}", fridge.band_min, fridge.band_max)
        s = model.add_binary(f"s_fr.fridge.{t}")
        created += [th, s]
        rhs = fridge.u_fr * activity.at(t) + fridge.alpha_fr
        terms = [(th, 1.0), (s, fridge.v_fr)]
        if prev is None:
            rhs += fridge.theta_fr_init
        else:
            terms.append((prev, -1.0))
        model.add_constraint(terms, Sense.EQ, rhs, f"eq5.fridge.t={t}")
        prev = th
    return created


def _appliance_problems(app: CyclingAppliance, grid: TimeGrid) -> list[str]:
    # Looser than domain validation: a zero runtime is allowed here and
    # simply pins the appliance OFF.
    out = []
    if not app.rated_kw > 0:
        out.append(f"{app.name}.rated_kw: must be > 0")
    if not 0 <= app.required_runtime <= len(set(app.allowed_window)):
        out.append(f"{app.name}.required_runtime: must lie in [0, |allowed_window|]")
    if app.max_successive < 1:
        out.append(f"{app.name}.max_successive: must be >= 1")
    if app.min_up < 1 or app.min_down < 1:
        out.append(f"{app.name}: min_up and min_down must be >= 1")
    if any(t not in grid.intervals for t in app.allowed_window):
        out.append(f"{app.name}.allowed_window: outside the horizon")
    return out


def add_cycling_appliance(
    model: MilpModel, grid: TimeGrid, app: CyclingAppliance
) -> list[VarId]:
    """Start/stop logic, runtime, max-successive and min up/down rows."""
    problems = _appliance_problems(app, grid)
    if problems:
        raise FormulationError("; ".join(problems))
    name = app.name
    window = set(app.allowed_window)
    horizon = grid.horizon_len
    big_m = float(horizon)
    s, u, v = {}, {}, {}
    for t in grid.intervals:
        s[t] = model.add_var(f"s.{name}.{t}", 0.0, 1.0 if t in window else 0.0, binary=True)
        u[t] = model.add_binary(f"u.{name}.{t}")
        v[t] = model.add_binary(f"v.{name}.{t}")
    for t in grid.intervals:
        terms = [(u[t], 1.0), (v[t], -1.0), (s[t], -1.0)]
        if t > 1:
            terms.append((s[t - 1], 1.0))
        model.add_constraint(terms, Sense.EQ, 0.0, f"eq6.{name}.t={t}")
        model.add_constraint([(u[t], 1.0), (v[t], 1.0)], Sense.LE, 1.0, f"eq7.{name}.t={t}")
    model.add_constraint(
        [(s[t], 1.0) for t in sorted(window)], Sense.EQ, app.required_runtime, f"eq8.{name}"
    )
    for t in grid.intervals:
        last = min(t + app.max_successive, horizon)
        terms = [(s[k], 1.0) for k in range(t, last + 1)] + [(u[t], big_m)]
        model.add_constraint(
            terms, Sense.LE, app.max_successive + big_m, f"eq9.{name}.t={t}"
        )
    for t in grid.intervals:
        first = max(1, t - app.min_up + 1)
        terms = [(u[k], 1.0) for k in range(first, t + 1)] + [(s[t], -1.0)]
        model.add_constraint(terms, Sense.LE, 0.0, f"eq10.{name}.t={t}")
    for t in grid.intervals:
        first = max(1, t - app.min_down + 1)
        terms = [(v[k], 1.0) for k in range(first, t + 1)] + [(s[t], 1.0)]
        model.add_constraint(terms, Sense.LE, 1.0, f"eq11.{name}.t={t}")
    return list(s.values()) + list(u.values()) + list(v.values())


def add_precedence(model: MilpModel, grid: TimeGrid, pair: PrecedencePair) -> None:
    """Second appliance may run only within ``gap_omega`` intervals after the first."""
    if pair.gap_omega < 1 or pair.first == pair.second:
        raise FormulationError(f"invalid precedence {pair.first}->{pair.second}")
    for name in (pair.first, pair.second):
        if not model.has_var(f"s.{name}.1"):
            raise FormulationError(f"precedence references unknown appliance {name!r}")
    label = f"{pair.first}>{pair.second}"
    for t in grid.intervals:
        later = model.var(f"s.{pair.second}.{t}")
        earlier = model.var(f"s.{pair.first}.{t}")
        terms = [(later, 1.0)]
        for k in range(1, pair.gap_omega + 1):
            if t - k >= 1:
                terms.append((model.var(f"s.{pair.first}.{t - k}"), -1.0))
        model.add_constraint(terms, Sense.LE, 0.0, f"eq12.{label}.t={t}")
        model.add_constraint(
            [(later, 1.0), (earlier, 1.0)], Sense.LE, 1.0, f"eq13.{label}.t={t}"
        )


def add_storage(model: MilpModel, grid: TimeGrid, dev: StorageDevice) -> list[VarId]:
    """Charge/discharge limits and state-of-energy bookkeeping for one battery.

    Variables exist only for intervals in ``dev.availability``; elsewhere the
    device is absent from the model.
    """
    problems = dev.violations(grid, dev.name)
    if problems:
        raise FormulationError("; ".join(problems))
    eq = "eq15" if dev.kind is StorageKind.DESD else "eq16"
    dt = grid.interval_hours
    name = dev.name
    created = []
    prev = None
    for t in dev.intervals:
        ch_ub = dev.charge_rate_kw if dev.can_charge_from_grid else 0.0
        ch = model.add_var(f"P_ch.{name}.{t}", 0.0, ch_ub)
        dis = model.add_var(f"P_dis.{name}.{t}", 0.0, dev.discharge_rate_kw)
        used = model.add_var(f"P_used.{name}.{t}")
        sold = model.add_var(f"P_s.{name}.{t}", 0.0, math.inf if dev.can_sell_to_grid else 0.0)
        soe = model.add_var(f"SOE.{name}.{t}", dev.soe_min, dev.soe_max)
        mode = model.add_binary(f"s.{name}.{t}")
        created += [ch, dis, used, sold, soe, mode]
        model.add_constraint(
            [(used, 1.0), (sold, 1.0), (dis, -dev.eta_discharge)],
            Sense.EQ,
            0.0,
            f"{eq}a.{name}.t={t}",
        )
        model.add_constraint(
            [(ch, 1.0), (mode, -dev.charge_rate_kw)], Sense.LE, 0.0, f"{eq}b.{name}.t={t}"
        )
        model.add_constraint(
            [(dis, 1.0), (mode, dev.discharge_rate_kw)],
            Sense.LE,
            dev.discharge_rate_kw,
            f"{eq}c.{name}.t={t}",
        )
        terms = [(soe, 1.0), (ch, -dev.eta_charge * dt), (dis, dt)]
        if prev is None:
            model.add_constraint(terms, Sense.EQ, dev.soe_init, f"{eq}e.{name}.t={t}")
        else:
            terms.append((prev, -1.0))
            model.add_constraint(terms, Sense.EQ, 0.0, f"{eq}d.{name}.t={t}")
        if dev.full_charge_deadline == t:
            model.add_constraint([(soe, 1.0)], Sense.EQ, dev.soe_max, f"eq16h.{name}.t={t}")
        prev = soe
    return created


def add_pv(model: MilpModel, grid: TimeGrid, pv_profile: Profile) -> list[VarId]:
    """PV output split into self-use and sale; curtailment allowed."""
    _check_len(grid, pv_profile)
    created = []
    for t in grid.intervals:
        used = model.add_var(f"P_used.pv.{t}")
        sold = model.add_var(f"P_s.pv.{t}")
        created += [used, sold]
        model.add_constraint(
            [(used, 1.0), (sold, 1.0)], Sense.LE, pv_profile.at(t), f"eq17.pv.t={t}"
        )
    return created


def load_terms(config: ScenarioConfig, model: MilpModel, t: int) -> list[tuple[VarId, float]]:
    """Household load at interval ``t`` as rated power times ON status."""
    terms = [
        (model.var(f"s_ac.hvac.{t}"), config.hvac.ac_rated_kw),
        (model.var(f"s_ht.hvac.{t}"), config.hvac.ht_rated_kw),
        (model.var(f"s_fr.fridge.{t}"), config.fridge.rated_kw),
    ]
    for app in config.appliances:
        terms.append((model.var(f"s.{app.name}.{t}"), app.rated_kw))
    return terms


def add_grid_and_balance(
    model: MilpModel, config: ScenarioConfig
) -> list[VarId]:
    """Power balance, total sale and the buy/sell exclusion rows."""
    contract = config.contract
    if not model.has_var("s_ac.hvac.1") or not model.has_var("s_fr.fridge.1"):
        raise FormulationError("device builders must run before the power balance")
    problems = contract.violations()
    if problems:
        raise FormulationError("; ".join(problems))
    created = []
    for t in config.grid.intervals:
        pb = model.add_var(f"P_b.grid.{t}")
        ps = model.add_var(f"P_s.grid.{t}")
        sg = model.add_binary(f"s_grid.grid.{t}")
        created += [pb, ps, sg]
        supply = [(pb, 1.0)]
        sales = [(ps, 1.0)]
        if config.pv_enabled:
            supply.append((model.var(f"P_used.pv.{t}"), 1.0))
            sales.append((model.var(f"P_s.pv.{t}"), -1.0))
        demand = [(vid, -coef) for vid, coef in load_terms(config, model, t)]
        demand.append((ps, -1.0))
        for dev in config.storages:
            if t in dev.availability:
                supply.append((model.var(f"P_used.{dev.name}.{t}"), 1.0))
                demand.append((model.var(f"P_ch.{dev.name}.{t}"), -1.0))
                sales.append((model.var(f"P_s.{dev.name}.{t}"), -1.0))
        model.add_constraint(supply + demand, Sense.EQ, 0.0, f"eq14.house.t={t}")
        model.add_constraint(sales, Sense.EQ, 0.0, f"eq18.grid.t={t}")
        model.add_constraint(
            [(pb, 1.0), (sg, -contract.max_buy_kw)], Sense.LE, 0.0, f"eq19.grid.t={t}"
        )
        model.add_constraint(
            [(ps, 1.0), (sg, contract.max_sell_kw)],
            Sense.LE,
            contract.max_sell_kw,
            f"eq20.grid.t={t}",
        )
    return created


def set_objective(
    model: MilpModel,
    grid: TimeGrid,
    contract: GridContract,
    buy_price: Profile,
    storages: Iterable[StorageDevice],
) -> None:
    """Energy purchase minus sale revenue plus battery throughput cost."""
    _check_len(grid, buy_price)
    dt = grid.interval_hours
    try:
        for t in grid.intervals:
            model.set_objective_coeff(model.var(f"P_b.grid.{t}"), buy_price.at(t) * dt)
            model.set_objective_coeff(model.var(f"P_s.grid.{t}"), -contract.sell_price * dt)
        for dev in storages:
            for t in dev.intervals:
                for sym in ("P_ch", "P_dis"):
                    vid = model.var(f"{sym}.{dev.name}.{t}")
                    model.set_objective_coeff(vid, dev.degradation_cost * dt)
    except KeyError as exc:
        raise FormulationError(f"objective references missing variable {exc}") from None


def build(config: ScenarioConfig) -> MilpModel:
    problems = validate(config)
    if problems:
        raise FormulationError("invalid scenario: " + "; ".join(problems))
    grid = config.grid
    model = MilpModel(name=config.name)
    activity = config.profile(ProfileKind.ACTIVITY_LEVEL)
    add_hvac(model, grid, config.hvac, config.profile(ProfileKind.OUTSIDE_TEMPERATURE), activity)
    add_fridge(model, grid, config.fridge, activity)
    for app in config.appliances:
        add_cycling_appliance(model, grid, app)
    for pair in config.precedences:
        add_precedence(model, grid, pair)
    for dev in config.storages:
        add_storage(model, grid, dev)
    if config.pv_enabled:
        add_pv(model, grid, config.profile(ProfileKind.PV_OUTPUT))
    add_grid_and_balance(model, config)
    set_objective(
        model, grid, config.contract, config.profile(ProfileKind.BUY_PRICE), config.storages
    )
    return model
