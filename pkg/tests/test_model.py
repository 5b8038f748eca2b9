import dataclasses

import numpy as np
import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import make_scenario, pair, server
from spjeso import model
from spjeso.model import (ScenarioError, default_scenario, dump_scenario, load_scenario,
                          scenario_from_dict, scenario_to_dict)


def test_frequency_half_is_accepted():
    sc = make_scenario(pairs=[pair(f=0.5)])
    assert sc.pairs[0].frequency == 0.5


def test_power_ordering_violation_is_reported():
    with pytest.raises(ScenarioError) as err:
        make_scenario(servers=[server(idle_power=150.0, max_power=100.0)])
    assert any("power ordering violated" in m for _, m in err.value.problems)


def test_zero_local_load_is_accepted():
    sc = make_scenario()
    assert all(s.local_load == 0 for s in sc.services)


def test_every_violation_is_listed():
    raw = dict(services=[dict(storage_size=-1, core_load=0, local_data=1, remote_data=1)],
               servers=[dict(position=[0, 0], idle_power=10, max_power=5)],
               pairs=[dict(service=3, src=[0, 0], dst=[5000, 0], frequency=2.0)],
               channel={"path_loss": 5}, time={"slots": 0})
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(raw)
    paths = {p for p, _ in err.value.problems}
    assert {"services[0].storage_size", "services[0].core_load", "servers[0].max_power",
            "pairs[0].service", "pairs[0].frequency", "pairs[0].dst", "channel.path_loss",
            "time.slots"} <= paths


def test_unknown_keys_are_reported():
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict({"servers": {"count": 2, "colour": "red"}, "extra": 1})
    paths = {p for p, _ in err.value.problems}
    assert {"servers[0].colour", "extra"} <= paths


def test_default_scenario_shape():
    sc = default_scenario()
    assert (sc.n_servers, sc.n_services, sc.n_pairs) == (9, 4, 10)
    assert sc.cloud_delay > 0
    assert np.all(sc.arrays.deploy_cost == 100.0)
    assert sc.energy_budget(np.ones(9)) == 1350.0


def test_default_file_matches_builtin_defaults(repo_root):
    assert load_scenario(repo_root / "scenarios" / "default.yaml") == default_scenario()


def test_round_trip_through_file(tmp_path):
    sc = default_scenario(seed=7, servers={"count": 4})
    dump_scenario(sc, tmp_path / "s.yaml")
    assert load_scenario(tmp_path / "s.yaml") == sc


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), m=st.integers(1, 9), s=st.integers(1, 5),
       n=st.integers(0, 12), f=st.floats(0.0, 1.0))
def test_round_trip_of_generated_scenarios(seed, m, s, n, f):
    sc = default_scenario(seed=seed, servers={"count": m}, services={"count": s},
                          pairs={"count": n, "frequency": f})
    text = yaml.safe_dump(scenario_to_dict(sc))
    assert scenario_from_dict(yaml.safe_load(text)) == sc


def test_server_sites_are_nested():
    small = model.grid_sites(3, 1000.0)
    assert model.grid_sites(9, 1000.0)[:3] == small
    assert small[0] == (500.0, 500.0)


def test_deployment_bits():
    d = model.DeploymentDecision.from_bits("0110")
    assert d.bits == "0110"
    assert d.z.tolist() == [0, 1, 1, 0]


def test_assignment_round_trip():
    d = model.TacticalDecision.from_assignment(np.zeros((3, 1)), [2, -1], [-1, 0], 3)
    src, dst = d.assignment()
    assert src.tolist() == [2, -1] and dst.tolist() == [-1, 0]


def test_symbol_table_points_at_real_fields():
    # each model symbol is carried by exactly one field of exactly one type
    targets = list(model.SYMBOLS.values())
    assert len(set(targets)) == len(targets)
    for symbol, (type_name, field_name) in model.SYMBOLS.items():
        cls = getattr(model, type_name)
        names = {f.name for f in dataclasses.fields(cls)}
        assert field_name in names, symbol


def test_cloud_delay_is_resolved_once():
    sc = default_scenario()
    assert sc.weights.cloud_delay == pytest.approx(model.default_cloud_delay(sc))
    fixed = default_scenario(weights={"cloud_delay": 12.0})
    assert fixed.cloud_delay == 12.0
