import dataclasses
import itertools
import math
import re
from collections import Counter

import numpy as np
import pytest

from oracles import appliance_ok, start_stop

from hems.domain import (
    CyclingAppliance,
    FridgeDevice,
    GridContract,
    HvacPair,
    PrecedencePair,
    Profile,
    ProfileKind,
    StorageDevice,
    StorageKind,
    TimeGrid,
)
from hems.formulation import (
    FormulationError,
    MilpModel,
    Sense,
    add_cycling_appliance,
    add_fridge,
    add_grid_and_balance,
    add_hvac,
    add_precedence,
    add_pv,
    add_storage,
    build,
    set_objective,
)
from hems.solver import BnbParams, branch_and_bound, export_mps, solve_lp
from hems.verify import check_assignment


def _flat(kind, value, horizon):
    return Profile(kind, (float(value),) * horizon)


# -- model container -------------------------------------------------------------


def test_duplicate_names_and_tags_rejected():
    m = MilpModel()
    x = m.add_var("x")
    with pytest.raises(FormulationError):
        m.add_var("x")
    m.add_constraint([(x, 1.0)], Sense.LE, 1.0, "r")
    with pytest.raises(FormulationError, match="duplicate constraint tag"):
        m.add_constraint([(x, 1.0)], Sense.LE, 2.0, "r")


def test_repeated_terms_are_merged():
    m = MilpModel()
    x, y = m.add_var("x"), m.add_var("y")
    con = m.add_constraint([(x, 1.0), (y, 2.0), (x, 2.0), (y, -2.0)], "L", 3.0, "r")
    assert con.terms == ((x, 3.0),)


def test_non_finite_coefficient_rejected():
    m = MilpModel()
    x = m.add_var("x")
    with pytest.raises(FormulationError):
        m.add_constraint([(x, math.nan)], Sense.LE, 1.0, "r")


# -- thermal loads ---------------------------------------------------------------


def test_hvac_counts():
    m = MilpModel()
    grid = TimeGrid()
    add_hvac(m, grid, HvacPair(), _flat(ProfileKind.OUTSIDE_TEMPERATURE, 25, 24),
             _flat(ProfileKind.ACTIVITY_LEVEL, 0.3, 24))
    assert m.num_vars == 72 and len(m.binaries) == 48
    fams = Counter(t.split(".")[0] for t in m.tags)
    assert fams == {"eq2_3": 24, "eq4": 24}
    assert all(m.variables[m.var(f"theta_in.hvac.{t}")].upper == 24.0 for t in grid.intervals)


def test_hvac_profile_length_mismatch_names_profile():
    with pytest.raises(FormulationError, match="outside_temperature"):
        add_hvac(MilpModel(), TimeGrid(), HvacPair(), _flat(ProfileKind.OUTSIDE_TEMPERATURE, 25, 23),
                 _flat(ProfileKind.ACTIVITY_LEVEL, 0.3, 24))


def test_hvac_rejects_zero_ac_effect():
    with pytest.raises(FormulationError, match="u_ac"):
        add_hvac(MilpModel(), TimeGrid(6), HvacPair(u_ac=0.0),
                 _flat(ProfileKind.OUTSIDE_TEMPERATURE, 22, 6), _flat(ProfileKind.ACTIVITY_LEVEL, 0, 6))


def test_hvac_all_off_holds_temperature_when_outside_equals_inside():
    # theta = theta + 0*A - 0 + I*(22 - 22) stays at 22
    grid, hvac = TimeGrid(6), HvacPair()
    m = MilpModel()
    add_hvac(m, grid, hvac, _flat(ProfileKind.OUTSIDE_TEMPERATURE, 22, 6),
             _flat(ProfileKind.ACTIVITY_LEVEL, 0, 6))
    x = np.zeros(m.num_vars)
    for t in grid.intervals:
        x[m.var(f"theta_in.hvac.{t}")] = 22.0
    assert check_assignment(m, x) == []


def test_hvac_ac_on_cools_by_u():
    grid, hvac = TimeGrid(1), HvacPair()
    m = MilpModel()
    add_hvac(m, grid, hvac, _flat(ProfileKind.OUTSIDE_TEMPERATURE, 22, 1),
             _flat(ProfileKind.ACTIVITY_LEVEL, 0, 1))
    x = np.zeros(m.num_vars)
    x[m.var("s_ac.hvac.1")] = 1
    x[m.var("theta_in.hvac.1")] = 22.0 - hvac.u_ac
    assert check_assignment(m, x) == []
    x[m.var("s_ac.hvac.1")], x[m.var("s_ht.hvac.1")] = 1, 1
    assert any(v.startswith("eq4") for v in check_assignment(m, x))


def test_fridge_counts():
    m = MilpModel()
    add_fridge(m, TimeGrid(), FridgeDevice(), _flat(ProfileKind.ACTIVITY_LEVEL, 0.3, 24))
    assert len(m.binaries) == 24 and Counter(t.split(".")[0] for t in m.tags) == {"eq5": 24}


def test_fridge_forced_on_when_already_at_band_top():
    # A = 0 and alpha = v: any OFF interval lifts the fridge above band_max
    fridge = FridgeDevice(alpha_fr=1.5, v_fr=1.5, theta_fr_init=6.0, band_max=6.0)
    m = MilpModel()
    grid = TimeGrid(6)
    add_fridge(m, grid, fridge, _flat(ProfileKind.ACTIVITY_LEVEL, 0, 6))
    for t in grid.intervals:
        m.set_objective_coeff(m.var(f"s_fr.fridge.{t}"), 1.0)
    sol = branch_and_bound(m)
    assert sol.status.value == "optimal"
    assert [round(sol.x[m.var(f"s_fr.fridge.{t}")]) for t in grid.intervals] == [1] * 6


def test_fridge_band_out_of_reach_is_infeasible():
    fridge = FridgeDevice(theta_fr_init=4.0, band_min=5.0, band_max=6.0, alpha_fr=0.5)
    m = MilpModel()
    add_fridge(m, TimeGrid(3), fridge, _flat(ProfileKind.ACTIVITY_LEVEL, 0, 3))
    assert branch_and_bound(m).status.value == "infeasible"


# -- cycling appliances: enumeration oracle ---------------------------------------

CASES = [
    # horizon, runtime, max_successive, min_up, min_down, window
    (6, 2, 2, 1, 1, range(1, 7)),
    (6, 3, 2, 1, 1, range(1, 7)),
    (8, 3, 2, 1, 1, range(1, 9)),
    (8, 3, 2, 1, 2, range(1, 9)),
    (8, 4, 3, 2, 2, range(2, 9)),
    (8, 2, 2, 2, 1, range(3, 7)),
    (6, 0, 1, 1, 1, range(1, 7)),
]


def _appliance_model(horizon, runtime, mst, up, down, window):
    m = MilpModel()
    app = CyclingAppliance("a", 1.0, runtime, mst, up, down, tuple(window))
    add_cycling_appliance(m, TimeGrid(horizon), app)
    return m


@pytest.mark.parametrize("case", CASES, ids=lambda c: "h{}rt{}mst{}up{}dn{}".format(*c[:5]))
def test_appliance_rows_accept_exactly_the_valid_strings(case):
    horizon, runtime, mst, up, down, window = case
    m = _appliance_model(*case)
    accepted = []
    for s in itertools.product((0, 1), repeat=horizon):
        u, v = start_stop(s)
        x = np.zeros(m.num_vars)
        for t in range(1, horizon + 1):
            x[m.var(f"s.a.{t}")], x[m.var(f"u.a.{t}")], x[m.var(f"v.a.{t}")] = s[t - 1], u[t - 1], v[t - 1]
        feasible = check_assignment(m, x) == []
        assert feasible == appliance_ok(s, runtime, mst, up, down, set(window)), s
        if feasible:
            accepted.append(s)
    if runtime == 0:
        assert accepted == [(0,) * horizon]
    else:
        assert accepted


def test_three_long_run_needs_a_split():
    m = _appliance_model(8, 3, 2, 1, 1, range(1, 9))
    patterns = set()
    for s in itertools.product((0, 1), repeat=8):
        u, v = start_stop(s)
        x = np.zeros(m.num_vars)
        for t in range(1, 9):
            x[m.var(f"s.a.{t}")], x[m.var(f"u.a.{t}")], x[m.var(f"v.a.{t}")] = s[t - 1], u[t - 1], v[t - 1]
        if not check_assignment(m, x):
            runs = "".join(map(str, s)).strip("0").split("0")
            patterns.add(tuple(sorted(len(r) for r in runs if r)))
    # a single run of three is cut by the max-successive row
    assert patterns == {(1, 2), (1, 1, 1)}


def test_start_stop_are_forced_by_status():
    # with s fixed, u and v have exactly one feasible value
    m = _appliance_model(6, 2, 2, 1, 1, range(1, 7))
    s = (0, 1, 1, 0, 0, 0)
    u, v = start_stop(s)
    x = np.zeros(m.num_vars)
    for t in range(1, 7):
        x[m.var(f"s.a.{t}")], x[m.var(f"u.a.{t}")], x[m.var(f"v.a.{t}")] = s[t - 1], u[t - 1], v[t - 1]
    assert check_assignment(m, x) == []
    x[m.var("u.a.4")], x[m.var("v.a.4")] = 1, 1
    assert check_assignment(m, x)


def test_status_pinned_off_outside_window():
    m = _appliance_model(6, 1, 1, 1, 1, (3, 4))
    assert [m.variables[m.var(f"s.a.{t}")].upper for t in range(1, 7)] == [0, 0, 1, 1, 0, 0]


def test_invalid_appliance_rejected():
    with pytest.raises(FormulationError):
        _appliance_model(6, 7, 2, 1, 1, range(1, 7))


# -- precedence --------------------------------------------------------------------


def _pair_model(horizon, omega):
    m = MilpModel()
    grid = TimeGrid(horizon)
    add_cycling_appliance(m, grid, CyclingAppliance("w", 0.5, 1, 1, allowed_window=tuple(grid.intervals)))
    add_cycling_appliance(m, grid, CyclingAppliance("d", 3.5, 1, 1, allowed_window=tuple(grid.intervals)))
    add_precedence(m, grid, PrecedencePair("w", "d", omega))
    return m


def _pair_feasible(m, horizon, w_on, d_on):
    x = np.zeros(m.num_vars)
    for name, on in (("w", w_on), ("d", d_on)):
        s = tuple(int(t == on) for t in range(1, horizon + 1))
        u, v = start_stop(s)
        for t in range(1, horizon + 1):
            x[m.var(f"s.{name}.{t}")] = s[t - 1]
            x[m.var(f"u.{name}.{t}")] = u[t - 1]
            x[m.var(f"v.{name}.{t}")] = v[t - 1]
    return check_assignment(m, x) == []


@pytest.mark.parametrize("omega", [1, 2, 6])
def test_dryer_only_within_omega_after_washer(omega):
    H = 6
    m = _pair_model(H, omega)
    for w, d in itertools.product(range(1, H + 1), repeat=2):
        assert _pair_feasible(m, H, w, d) == (1 <= d - w <= omega), (w, d)


def test_dryer_without_washer_is_infeasible():
    m = _pair_model(4, 2)
    m.set_objective_coeff(m.var("s.w.1"), 0)
    ub_w = [m.var(f"s.w.{t}") for t in range(1, 5)]
    _, _, _, _, lo, hi, _ = m.arrays()
    hi[ub_w] = 0.0
    assert solve_lp(m, lo, hi).status.value == "infeasible"


def test_precedence_unknown_appliance():
    m = MilpModel()
    add_cycling_appliance(m, TimeGrid(4), CyclingAppliance("w", 0.5, 1, 1, allowed_window=(1, 2)))
    with pytest.raises(FormulationError, match="unknown appliance 'd'"):
        add_precedence(m, TimeGrid(4), PrecedencePair("w", "d"))


# -- storage -----------------------------------------------------------------------


def _battery(**kw):
    base = dict(name="b", kind=StorageKind.PHEV, capacity_kwh=16.0, soe_init=8.0, soe_min=2.0,
                soe_max=16.0, charge_rate_kw=3.3, discharge_rate_kw=3.3, availability=(1, 2, 3))
    base.update(kw)
    return StorageDevice(**base)


def _fixed_lp(m, fixes, objective=None):
    _, _, _, _, lo, hi, _ = m.arrays()
    for name, val in fixes.items():
        lo[m.var(name)] = hi[m.var(name)] = val
    for name, coef in (objective or {}).items():
        m.set_objective_coeff(m.var(name), coef)
    return solve_lp(m, lo, hi)


def test_one_hour_charge_adds_rate():
    m = MilpModel()
    add_storage(m, TimeGrid(3), _battery())
    sol = _fixed_lp(m, {"P_ch.b.1": 3.3, "s.b.1": 1.0})
    assert sol.ok
    # SOE(1) is pinned by the e-row, so any objective sees the same value
    assert sol.x[m.var("SOE.b.1")] == pytest.approx(11.3, abs=1e-9)


def test_discharge_lowers_soe_and_delivers_eta_share():
    m = MilpModel()
    add_storage(m, TimeGrid(3), _battery(eta_discharge=0.9, kind=StorageKind.DESD))
    sol = _fixed_lp(m, {"P_dis.b.2": 2.0, "s.b.2": 0.0, "P_ch.b.1": 0.0, "P_dis.b.1": 0.0,
                        "P_s.b.2": 0.0})
    assert sol.x[m.var("SOE.b.2")] == pytest.approx(6.0, abs=1e-9)
    assert sol.x[m.var("P_used.b.2")] == pytest.approx(1.8, abs=1e-9)


def test_storage_rows_per_available_interval():
    m = MilpModel()
    add_storage(m, TimeGrid(24), _battery(availability=tuple(range(19, 25)), full_charge_deadline=24))
    fams = Counter(re.match(r"eq\d+[a-h]", t).group(0) for t in m.tags)
    assert fams == {"eq16a": 6, "eq16b": 6, "eq16c": 6, "eq16d": 5, "eq16e": 1, "eq16h": 1}
    assert not m.has_var("SOE.b.18") and m.has_var("SOE.b.19")


def test_charge_and_discharge_exclusive_through_mode_binary():
    m = MilpModel()
    add_storage(m, TimeGrid(1), _battery(availability=(1,)))
    x = np.zeros(m.num_vars)
    x[m.var("P_ch.b.1")] = 1.0
    x[m.var("P_dis.b.1")] = 1.0
    x[m.var("P_used.b.1")] = 1.0
    x[m.var("SOE.b.1")] = 8.0
    for mode in (0.0, 1.0):
        x[m.var("s.b.1")] = mode
        assert check_assignment(m, x), mode


def test_already_full_vehicle_meets_first_interval_deadline():
    m = MilpModel()
    dev = _battery(soe_init=16.0, availability=(1, 2), full_charge_deadline=1)
    add_storage(m, TimeGrid(2), dev)
    x = np.zeros(m.num_vars)
    x[m.var("SOE.b.1")] = x[m.var("SOE.b.2")] = 16.0
    assert check_assignment(m, x) == []


def test_disabled_flows_have_zero_upper_bound():
    m = MilpModel()
    add_storage(m, TimeGrid(2), _battery(availability=(1, 2), discharge_rate_kw=0.0,
                                        can_sell_to_grid=False, can_charge_from_grid=False))
    for sym in ("P_ch", "P_dis", "P_s"):
        assert m.variables[m.var(f"{sym}.b.1")].upper == 0.0


def test_deadline_outside_availability_rejected():
    with pytest.raises(FormulationError, match="full_charge_deadline"):
        add_storage(MilpModel(), TimeGrid(24), _battery(full_charge_deadline=12))


# -- PV, grid, objective -------------------------------------------------------------


def test_pv_dispatch_capped_by_generation():
    m = MilpModel()
    vals = [0.0] * 24
    vals[13] = 0.82
    add_pv(m, TimeGrid(), Profile(ProfileKind.PV_OUTPUT, tuple(vals)))
    for name in ("P_used.pv.14", "P_s.pv.14"):
        m.set_objective_coeff(m.var(name), -1.0)
    sol = solve_lp(m)
    assert sol.objective == pytest.approx(-0.82)
    assert sol.x[m.var("P_used.pv.3")] == 0 and sol.x[m.var("P_s.pv.3")] == 0


def _bare(config, horizon=24, **kw):
    return dataclasses.replace(config, appliances=(), precedences=(), storages=(), pv_enabled=False, **kw)


def test_grid_before_devices_is_an_error(scenario2):
    with pytest.raises(FormulationError, match="before the power balance"):
        add_grid_and_balance(MilpModel(), scenario2)


def test_all_off_house_balances_with_zero_trade(scenario2):
    m = build(_bare(scenario2))
    fams = Counter(t.split(".")[0] for t in m.tags)
    assert set(fams) == {"eq2_3", "eq4", "eq5", "eq14", "eq18", "eq19", "eq20"}
    x = np.zeros(m.num_vars)
    grid_rows = ("eq14", "eq18", "eq19", "eq20")
    assert [v for v in check_assignment(m, x) if v.startswith(grid_rows)] == []


def test_no_sales_when_sell_cap_is_zero(scenario2):
    config = dataclasses.replace(scenario2, contract=GridContract(0.04, 12.0, 0.0))
    m = build(config)
    assert all(m.variables[m.var(f"P_s.grid.{t}")].upper == math.inf for t in range(1, 25))
    sol = solve_lp(m)
    assert sol.ok
    assert max(sol.x[m.var(f"P_s.grid.{t}")] for t in range(1, 25)) <= 1e-9


def test_buy_and_sell_exclusive(scenario2):
    m = build(scenario2)
    x = np.zeros(m.num_vars)
    x[m.var("P_b.grid.5")] = 1.0
    x[m.var("P_s.grid.5")] = 1.0
    for g in (0, 1):
        x[m.var("s_grid.grid.5")] = g
        bad = [v for v in check_assignment(m, x) if ".t=5" in v and v.startswith(("eq19", "eq20"))]
        assert bad


def test_objective_coefficients():
    m = MilpModel()
    grid = TimeGrid(2, 1.0)
    for t in grid.intervals:
        m.add_var(f"P_b.grid.{t}")
        m.add_var(f"P_s.grid.{t}")
    dev = _battery(availability=(1, 2), degradation_cost=0.03)
    add_storage(m, grid, dev)
    set_objective(m, grid, GridContract(sell_price=0.04),
                  Profile(ProfileKind.BUY_PRICE, (0.10, 0.20)), [dev])
    x = np.zeros(m.num_vars)
    x[m.var("P_b.grid.1")] = 1.0
    assert m.objective_value(x) == pytest.approx(0.10)
    x[:] = 0
    x[m.var("P_ch.b.1")] = 2.0
    assert m.objective_value(x) == pytest.approx(0.06)
    x[:] = 0
    x[m.var("P_s.grid.2")] = 1.0
    assert m.objective_value(x) == pytest.approx(-0.04)


def test_half_hour_grid_scales_energy():
    m = MilpModel()
    grid = TimeGrid(1, 0.5)
    m.add_var("P_b.grid.1")
    m.add_var("P_s.grid.1")
    set_objective(m, grid, GridContract(), Profile(ProfileKind.BUY_PRICE, (0.2,)), [])
    x = np.zeros(m.num_vars)
    x[0] = 2.0
    assert m.objective_value(x) == pytest.approx(0.2)


def test_objective_missing_variables():
    with pytest.raises(FormulationError, match="missing variable"):
        set_objective(MilpModel(), TimeGrid(1), GridContract(),
                      Profile(ProfileKind.BUY_PRICE, (0.1,)), [])


# -- whole model -------------------------------------------------------------------


def test_scenario2_binary_census(scenario2):
    m = build(scenario2)
    names = Counter(m.variables[j].name.split(".")[0] + "." + m.variables[j].name.split(".")[1]
                    for j in m.binaries)
    assert names == {
        "s_ac.hvac": 24, "s_ht.hvac": 24, "s_fr.fridge": 24,
        "s.washer": 24, "u.washer": 24, "v.washer": 24,
        "s.dryer": 24, "u.dryer": 24, "v.dryer": 24,
        "s.desd": 24, "s.phev": 6, "s_grid.grid": 24,
    }


def test_build_is_deterministic(scenario2):
    a, b = build(scenario2), build(scenario2)
    assert [v.name for v in a.variables] == [v.name for v in b.variables]
    assert a.tags == b.tags
    assert export_mps(a) == export_mps(b)


def test_build_rejects_invalid_config(scenario2):
    bad = dataclasses.replace(scenario2, contract=GridContract(max_buy_kw=0.0))
    with pytest.raises(FormulationError, match="max_buy_kw"):
        build(bad)


def test_removing_options_never_lowers_cost(scenario2):
    # LP relaxations are enough to see the monotone direction on the full day
    base = solve_lp(build(scenario2)).objective
    no_sell = solve_lp(build(dataclasses.replace(scenario2, contract=GridContract(0.04, 12.0, 0.0))))
    no_desd = solve_lp(build(dataclasses.replace(scenario2, storages=scenario2.storages[1:])))
    assert no_sell.objective >= base - 1e-9
    assert no_desd.objective >= base - 1e-9


def test_native_bnb_on_short_fridge_horizon():
    m = MilpModel()
    add_fridge(m, TimeGrid(5), FridgeDevice(), _flat(ProfileKind.ACTIVITY_LEVEL, 0.5, 5))
    for t in range(1, 6):
        m.set_objective_coeff(m.var(f"s_fr.fridge.{t}"), 1.0)
    sol = branch_and_bound(m, BnbParams())
    # +1.0 per interval from activity and alpha; 6 - 4 = 2 degrees of room
    assert sol.objective == pytest.approx(2.0)
