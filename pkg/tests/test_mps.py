import math

import highspy
import pytest

from conftest import solved

from hems.formulation import MilpModel, Sense
from hems.solver import export_mps
from hems.solver.mps import format_number, short_names


def _read(tmp_path, text):
    path = tmp_path / "m.mps"
    path.write_text(text)
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    assert h.readModel(str(path)) == highspy.HighsStatus.kOk
    return h


def test_empty_model_is_parseable(tmp_path):
    text = export_mps(MilpModel(name="empty"))
    for section in ("NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA"):
        assert any(line.startswith(section) for line in text.splitlines())
    h = _read(tmp_path, text)
    assert h.getNumCol() == 0


def test_single_binary_wrapped_in_markers(tmp_path):
    m = MilpModel(name="one")
    y = m.add_binary("y", obj=-1.0)
    m.add_constraint([(y, 1.0)], Sense.LE, 1.0, "cap")
    lines = export_mps(m).splitlines()
    cols = lines[lines.index("COLUMNS") + 1: lines.index("RHS")]
    assert "'INTORG'" in cols[0] and "'INTEND'" in cols[-1]
    assert " UP BND       y                    1" in lines
    h = _read(tmp_path, "\n".join(lines) + "\n")
    h.run()
    assert h.getInfo().objective_function_value == pytest.approx(-1.0)
    assert h.getLp().integrality_[0] == highspy.HighsVarType.kInteger


def test_bound_kinds():
    m = MilpModel()
    m.add_var("fixed", 2.0, 2.0)
    m.add_var("free", -math.inf, math.inf)
    m.add_var("boxed", -1.0, 3.0)
    m.add_var("plain")
    text = export_mps(m)
    assert " FX BND       fixed                2" in text
    assert " MI BND       free" in text
    assert " LO BND       boxed               -1" in text and " UP BND       boxed                3" in text
    assert "plain" not in text.split("BOUNDS")[1]


def test_short_names_are_unique_and_fit():
    names = ["theta_in.hvac.1", "theta_in.hvac.2", "x", "x_", "abcdefgh", "abcdefghi"]
    short = short_names(names)
    assert len(set(short)) == len(short) and all(len(s) <= 8 for s in short)
    assert short[2] == "x" and short[4] == "abcdefgh"
    assert short_names(names) == short


def test_reserved_name_is_avoided():
    assert short_names(["COST"], reserved={"COST"})[0] != "COST"


def test_comment_map_restores_long_names():
    m = MilpModel()
    x = m.add_var("P_used.desd.12")
    m.add_constraint([(x, 1.0)], Sense.LE, 1.0, "eq15a.desd.t=12")
    text = export_mps(m)
    assert "* col P_u~0000 = P_used.desd.12" in text
    assert "* row eq1~0000 = eq15a.desd.t=12" in text


@pytest.mark.parametrize("value", [0.95, -3.3, 1 / 3, 1e-12, 123456789.123, -2.5e20])
def test_numbers_fit_field(value):
    text = format_number(value)
    assert len(text) <= 12
    assert float(text) == pytest.approx(value, rel=1e-9)


def test_scenario_export_is_deterministic_and_round_trips(tmp_path):
    config, model, sol, _ = solved("scenario2")
    text = export_mps(model)
    assert text == export_mps(model)
    h = _read(tmp_path, text)
    h.setOptionValue("mip_rel_gap", 0.0)
    h.setOptionValue("threads", 1)
    h.run()
    assert h.getInfo().objective_function_value == pytest.approx(sol.objective, abs=1e-6)
