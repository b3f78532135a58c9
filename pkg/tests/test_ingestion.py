import textwrap

import pytest
import yaml

from hems.cli import shipped_scenario
from hems.domain import ProfileKind, StorageKind, TimeGrid
from hems.ingestion import (
    ProfileParseError,
    ScenarioError,
    ValidationError,
    config_to_dict,
    format_profile,
    load_profile,
    load_scenario,
    parse_profile,
    save_scenario,
)

GRID = TimeGrid()


def _csv(values, header="interval,value"):
    return header + "\n" + "".join(f"{t},{v}\n" for t, v in enumerate(values, start=1))


def test_temperature_profile_in_range():
    vals = [23 + 6 * abs(12 - t) / 12 for t in range(24)]
    p = parse_profile(_csv(vals), ProfileKind.OUTSIDE_TEMPERATURE, GRID)
    assert len(p) == 24 and min(p.values) >= 23 and max(p.values) <= 29


def test_23_rows_names_missing_interval():
    with pytest.raises(ProfileParseError, match=r"missing interval\(s\) \[24\]"):
        parse_profile(_csv([0.1] * 23), ProfileKind.BUY_PRICE, GRID)


def test_activity_out_of_range():
    vals = [0.2] * 24
    vals[10] = 1.7
    with pytest.raises(ValidationError, match="1.7 outside"):
        parse_profile(_csv(vals), ProfileKind.ACTIVITY_LEVEL, GRID)


def test_duplicate_interval_reports_line():
    text = _csv([0.1] * 24) + "5,0.2\n"
    with pytest.raises(ProfileParseError, match=r":26: duplicate interval 5"):
        parse_profile(text, ProfileKind.BUY_PRICE, GRID)


def test_header_and_comments():
    text = "# reconstructed\n" + _csv([0.0] * 24)
    assert parse_profile(text, ProfileKind.PV_OUTPUT, GRID).values == (0.0,) * 24
    with pytest.raises(ProfileParseError, match="header"):
        parse_profile(_csv([0.0] * 24, header="t,v"), ProfileKind.PV_OUTPUT, GRID)


def test_non_numeric_value():
    text = _csv([0.1] * 24).replace("3,0.1", "3,1,000")
    with pytest.raises(ProfileParseError, match=":4:"):
        parse_profile(text, ProfileKind.BUY_PRICE, GRID)


def test_format_then_parse(tmp_path):
    p = parse_profile(_csv([0.1 * t for t in range(24)]), ProfileKind.BUY_PRICE, GRID)
    path = tmp_path / "p.csv"
    path.write_text(format_profile(p, "synthetic"))
    assert load_profile(path, ProfileKind.BUY_PRICE, GRID) == p


def test_shipped_profiles_match_described_shape(scenario2):
    temp = scenario2.profile(ProfileKind.OUTSIDE_TEMPERATURE).values
    assert 23 <= min(temp) and max(temp) <= 29
    pv = scenario2.profile(ProfileKind.PV_OUTPUT)
    # interval 14 covers 13:00-14:00
    assert pv.at(14) == 0.82 == max(pv.values)
    price = scenario2.profile(ProfileKind.BUY_PRICE).values
    assert max(price) - min(price) >= 0.05


def test_shipped_profiles_carry_reconstruction_note():
    folder = shipped_scenario("scenario2").parent / "profiles"
    for kind in ProfileKind:
        assert (folder / f"{kind.value}.csv").read_text().startswith("#")


def test_scenario1_vehicle_is_one_way(scenario1):
    assert not scenario1.pv_enabled
    kinds = [s.kind for s in scenario1.storages]
    assert kinds == [StorageKind.PHEV]
    phev = scenario1.storages[0]
    assert not phev.can_sell_to_grid and phev.discharge_rate_kw == 0
    # arrival at 6 pm is the start of interval 19
    assert min(phev.availability) == 19 and phev.full_charge_deadline == 24


def test_scenario2_is_bidirectional(scenario2):
    assert scenario2.pv_enabled
    assert {s.kind for s in scenario2.storages} == {StorageKind.DESD, StorageKind.PHEV}
    assert all(s.can_sell_to_grid and s.can_charge_from_grid for s in scenario2.storages)


def _doc():
    return yaml.safe_load(shipped_scenario("scenario2").read_text())


def _write(tmp_path, doc):
    folder = shipped_scenario("scenario2").parent
    for kind, rel in doc["profiles"].items():
        doc["profiles"][kind] = str(folder / rel)
    path = tmp_path / "s.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path


def test_missing_contract_section(tmp_path):
    doc = _doc()
    del doc["contract"]
    with pytest.raises(ScenarioError, match="'contract'"):
        load_scenario(_write(tmp_path, doc))


def test_unresolved_profile_path(tmp_path):
    doc = _doc()
    doc["profiles"]["buy_price"] = "nowhere.csv"
    with pytest.raises(ScenarioError, match="nowhere.csv"):
        load_scenario(_write(tmp_path, doc))


def test_validation_violations_surface(tmp_path):
    doc = _doc()
    doc["storages"][1]["soe_init"] = 20.0
    with pytest.raises(ValidationError) as err:
        load_scenario(_write(tmp_path, doc))
    assert "storages[1].soe_init: 20.0 above soe_max 16.0" in err.value.violations


def test_unknown_field_rejected(tmp_path):
    doc = _doc()
    doc["hvac"]["colour"] = "red"
    with pytest.raises(ScenarioError, match="colour"):
        load_scenario(_write(tmp_path, doc))


def test_defaults_fill_but_never_override(scenario2):
    assert scenario2.hvac.ac_rated_kw == 1.9
    assert scenario2.provenance["hvac.ac_rated_kw"] == "document"
    assert scenario2.provenance["hvac.u_ac"].startswith("default")


def test_explicit_value_recorded_as_document(tmp_path):
    doc = _doc()
    doc["hvac"]["u_ac"] = 1.25
    config = load_scenario(_write(tmp_path, doc))
    assert config.hvac.u_ac == 1.25
    assert config.provenance["hvac.u_ac"] == "document"


def test_optional_sections_may_be_absent(tmp_path):
    doc = _doc()
    for key in ("hvac", "fridge", "appliances", "precedences", "storages"):
        del doc[key]
    config = load_scenario(_write(tmp_path, doc))
    assert config.appliances == () and config.storages == ()
    assert config.provenance["fridge.rated_kw"].startswith("default")


def test_interval_list_form(tmp_path):
    doc = _doc()
    doc["storages"][1]["availability"] = [19, 20, 21, 22, 23, 24]
    config = load_scenario(_write(tmp_path, doc))
    assert config.storages[1].availability == tuple(range(19, 25))


def test_round_trip(tmp_path, scenario1, scenario2):
    for config in (scenario1, scenario2):
        path = save_scenario(config, tmp_path / f"{config.name}.yaml")
        again = load_scenario(path)
        assert again == config
        assert config_to_dict(again) == config_to_dict(config)


def test_not_a_mapping(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text(textwrap.dedent("- 1\n- 2\n"))
    with pytest.raises(ScenarioError, match="mapping"):
        load_scenario(path)
