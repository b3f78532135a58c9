"""Feasibility checks that do not trust the solver.

:func:`check_assignment` walks the model's own rows and bounds against an
assignment. :func:`check_schedule` re-derives the household physics from
the scenario config and the decoded schedule alone, without looking at the
model's rows, so a formulation bug shows up as a violation here.
"""

from __future__ import annotations

import numpy as np

from .domain import ProfileKind, ScenarioConfig
from .formulation import MilpModel, Sense
from .schedule import Schedule

DEFAULT_TOL = 1e-6


def check_assignment(model: MilpModel, x, tol: float = DEFAULT_TOL) -> list[str]:
    x = np.asarray(x, dtype=float)
    out = []
    for j, var in enumerate(model.variables):
        v = x[j]
        if v < var.lower - tol or v > var.upper + tol:
            out.append(f"{var.name}: value {v:.9g} outside [{var.lower}, {var.upper}]")
        if var.binary and min(abs(v), abs(v - 1)) > tol:
            out.append(f"{var.name}: binary takes value {v:.9g}")
    for con in model.constraints:
        lhs = sum(coef * x[vid] for vid, coef in con.terms)
        gap = lhs - con.rhs
        if (
            (con.sense is Sense.LE and gap > tol)
            or (con.sense is Sense.GE and gap < -tol)
            or (con.sense is Sense.EQ and abs(gap) > tol)
        ):
            out.append(f"{con.tag}: lhs {lhs:.9g} {con.sense.value} rhs {con.rhs:.9g}")
    return out


def check_schedule(schedule: Schedule, config: ScenarioConfig, tol: float = DEFAULT_TOL) -> list[str]:
    """Household-level checks computed straight from the scenario definition."""
    out = []
    T = range(config.grid.horizon_len)
    dt = config.grid.interval_hours
    on = schedule.status
    rated = {"ac": config.hvac.ac_rated_kw, "heater": config.hvac.ht_rated_kw,
             "fridge": config.fridge.rated_kw}
    rated.update({a.name: a.rated_kw for a in config.appliances})

    for i in T:
        t = i + 1
        load = sum(rated[d] * on[d][i] for d in rated)
        supply = schedule.buy[i] + (schedule.pv_used[i] if config.pv_enabled else 0.0)
        demand = load + schedule.sell[i]
        sold = schedule.pv_sold[i] if config.pv_enabled else 0.0
        for trace in schedule.storages.values():
            if trace.soe[i] is not None:
                supply += trace.used[i]
                demand += trace.charge[i]
                sold += trace.sold[i]
        if abs(supply - demand) > tol:
            out.append(f"t={t}: power balance residual {supply - demand:.3e} kW")
        if abs(sold - schedule.sell[i]) > tol:
            out.append(f"t={t}: total sale {schedule.sell[i]} != sum of sellers {sold}")
        if schedule.buy[i] > tol and schedule.sell[i] > tol:
            out.append(f"t={t}: buys {schedule.buy[i]} and sells {schedule.sell[i]} at once")
        if schedule.buy[i] > config.contract.max_buy_kw + tol:
            out.append(f"t={t}: purchase above max_buy_kw")
        if schedule.sell[i] > config.contract.max_sell_kw + tol:
            out.append(f"t={t}: sale above max_sell_kw")
        if on["ac"][i] + on["heater"][i] > 1:
            out.append(f"t={t}: AC and heater both ON")
        if config.pv_enabled:
            gen = config.profile(ProfileKind.PV_OUTPUT).at(t)
            if schedule.pv_used[i] + schedule.pv_sold[i] > gen + tol:
                out.append(f"t={t}: PV dispatch above generation {gen}")

    out += _check_thermal(schedule, config, tol)
    out += _check_appliances(schedule, config)
    for dev in config.storages:
        out += _check_storage(schedule.storages[dev.name], dev, dt, tol)
    return out


def _check_thermal(schedule: Schedule, config: ScenarioConfig, tol: float) -> list[str]:
    out = []
    hvac, fridge = config.hvac, config.fridge
    act = config.profile(ProfileKind.ACTIVITY_LEVEL)
    tout = config.profile(ProfileKind.OUTSIDE_TEMPERATURE)
    drift = (hvac.v_ac + hvac.v_ht) / 2
    leak = (hvac.i_ac + hvac.i_ht) / 2
    prev_in, prev_fr = hvac.theta_init, fridge.theta_fr_init
    for i in range(config.grid.horizon_len):
        t = i + 1
        want = (prev_in + drift * act.at(t) - hvac.u_ac * schedule.status["ac"][i]
                + hvac.u_ht * schedule.status["heater"][i] + leak * (tout.at(t) - prev_in))
        th = schedule.theta_in[i]
        if abs(th - want) > tol:
            out.append(f"t={t}: indoor temperature {th:.6f} does not follow dynamics ({want:.6f})")
        if not hvac.comfort_min - tol <= th <= hvac.comfort_max + tol:
            out.append(f"t={t}: indoor temperature {th:.4f} outside comfort band")
        want_fr = (prev_fr + fridge.u_fr * act.at(t) - fridge.v_fr * schedule.status["fridge"][i]
                   + fridge.alpha_fr)
        tf = schedule.theta_fr[i]
        if abs(tf - want_fr) > tol:
            out.append(f"t={t}: fridge temperature {tf:.6f} does not follow dynamics ({want_fr:.6f})")
        if not fridge.band_min - tol <= tf <= fridge.band_max + tol:
            out.append(f"t={t}: fridge temperature {tf:.4f} outside band")
        prev_in, prev_fr = th, tf
    return out


def _runs(flags) -> list[tuple[int, int]]:
    """(start, length) of each ON run, 1-based starts."""
    runs, start = [], None
    for i, f in enumerate(list(flags) + [0]):
        if f and start is None:
            start = i
        elif not f and start is not None:
            runs.append((start + 1, i - start))
            start = None
    return runs


def _check_appliances(schedule: Schedule, config: ScenarioConfig) -> list[str]:
    out = []
    H = config.grid.horizon_len
    for app in config.appliances:
        s = schedule.status[app.name]
        if sum(s) != app.required_runtime:
            out.append(f"{app.name}: runtime {sum(s)} != required {app.required_runtime}")
        outside = [t for t in range(1, H + 1) if s[t - 1] and t not in app.allowed_window]
        if outside:
            out.append(f"{app.name}: ON outside allowed window at {outside}")
        runs = _runs(s)
        for start, length in runs:
            if length > app.max_successive:
                out.append(f"{app.name}: run at t={start} lasts {length} > {app.max_successive}")
            if length < app.min_up and start + length - 1 < H:
                out.append(f"{app.name}: run at t={start} shorter than min_up {app.min_up}")
        for (s1, l1), (s2, _) in zip(runs, runs[1:]):
            if s2 - (s1 + l1) < app.min_down:
                out.append(f"{app.name}: off-time before t={s2} shorter than min_down")
    for pair in config.precedences:
        a, b = schedule.status[pair.first], schedule.status[pair.second]
        for i in range(H):
            if a[i] and b[i]:
                out.append(f"t={i + 1}: {pair.first} and {pair.second} both ON")
            if b[i] and not any(a[i - k] for k in range(1, pair.gap_omega + 1) if i - k >= 0):
                out.append(
                    f"t={i + 1}: {pair.second} ON without {pair.first} in the "
                    f"previous {pair.gap_omega} interval(s)"
                )
    return out


def _check_storage(trace, dev, dt: float, tol: float) -> list[str]:
    out = []
    prev = dev.soe_init
    for i, soe in enumerate(trace.soe):
        t = i + 1
        if t not in dev.availability:
            if any(v not in (None, 0.0) for v in (trace.charge[i], trace.discharge[i])):
                out.append(f"{dev.name} t={t}: active while unavailable")
            continue
        ch, dis = trace.charge[i], trace.discharge[i]
        if ch > tol and dis > tol:
            out.append(f"{dev.name} t={t}: charges and discharges at once")
        if ch > dev.charge_rate_kw + tol or dis > dev.discharge_rate_kw + tol:
            out.append(f"{dev.name} t={t}: rate limit exceeded")
        if ch > tol and not dev.can_charge_from_grid:
            out.append(f"{dev.name} t={t}: charging is disabled")
        if trace.sold[i] > tol and not dev.can_sell_to_grid:
            out.append(f"{dev.name} t={t}: selling is disabled")
        if abs(trace.used[i] + trace.sold[i] - dev.eta_discharge * dis) > tol:
            out.append(f"{dev.name} t={t}: delivered power does not match discharge")
        want = prev + dev.eta_charge * ch * dt - dis * dt
        if abs(soe - want) > tol:
            out.append(f"{dev.name} t={t}: SOE {soe:.6f} does not follow bookkeeping ({want:.6f})")
        if not dev.soe_min - tol <= soe <= dev.soe_max + tol:
            out.append(f"{dev.name} t={t}: SOE {soe:.4f} outside [{dev.soe_min}, {dev.soe_max}]")
        if dev.full_charge_deadline == t and abs(soe - dev.soe_max) > tol:
            out.append(f"{dev.name} t={t}: not fully charged at deadline (SOE {soe:.4f})")
        prev = soe
    return out


def verify(schedule: Schedule, model: MilpModel, x, config: ScenarioConfig,
           tol: float = DEFAULT_TOL) -> list[str]:
    return check_assignment(model, x, tol) + check_schedule(schedule, config, tol)
