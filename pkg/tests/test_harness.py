import math

import numpy as np
import pytest

from spjeso import harness, maied, spco
from spjeso.model import default_scenario

SMALL = {"servers": {"count": 3}, "time": {"slots": 10, "periods": 8}}


def test_sweep_cardinality_and_schema(tmp_path):
    spec = harness.SweepSpec("esCount", (1, 3, 5, 7, 9), repetitions=2,
                             scenario={"time": {"slots": 5, "periods": 3}})
    rows, summary = harness.run_sweep(spec, tmp_path)
    assert len(rows) == 4 * 5 * 2
    assert summary["failed"] == 0
    header = (tmp_path / "results.csv").read_text().splitlines()[0]
    assert header.split(",") == harness.CSV_HEADER
    assert {(r.method, r.value, r.seed) for r in rows} == {
        (m, float(v), s) for m in harness.METHODS for v in (1, 3, 5, 7, 9) for s in (0, 1)}


def test_results_round_trip_through_files(tmp_path):
    spec = harness.SweepSpec("V", (1, 100), scenario=SMALL, methods=("spjeso", "dae"))
    rows, summary = harness.run_sweep(spec, tmp_path)
    back = harness.read_results_csv(tmp_path / "results.csv")
    assert [r.csv_fields() for r in back] == [r.csv_fields() for r in rows]
    assert harness.summarize(back) == summary
    on_disk = harness.read_summary(tmp_path / "summary.json")
    assert set(on_disk["runtime_seconds"]) == {"spjeso", "dae"}
    on_disk.pop("runtime_seconds")
    assert on_disk == summary


def test_identical_runs_write_identical_bytes(tmp_path):
    spec = harness.SweepSpec("cpuMean", (150, 250), scenario=SMALL)
    harness.run_sweep(spec, tmp_path / "a")
    harness.run_sweep(spec, tmp_path / "b", workers=2)
    assert (tmp_path / "a" / "results.csv").read_bytes() == \
        (tmp_path / "b" / "results.csv").read_bytes()


def test_deploy_all_on_defaults_reports_costs():
    (row,) = harness.run_experiment({"time": {"slots": 20}}, "dae")
    assert row.deployment == "1" * 9 and row.status == "ok"
    c = row.costs
    assert c.deploy == 900.0
    assert c.total == pytest.approx(c.deploy + c.tactical)
    assert c.operation == pytest.approx(c.maintain + c.place)
    assert c.tactical == pytest.approx(c.operation + c.ue_delay)


def test_repetitions_give_distinct_rows():
    rows = harness.run_experiment(SMALL, "dae", seeds=(0, 1))
    assert [r.seed for r in rows] == [0, 1]
    assert rows[0].costs != rows[1].costs


def test_single_configuration_single_period_is_one_controller_run():
    raw = {"servers": {"count": 3, "deploy_cost": 100.0}, "budget": {"deploy_budget": 50.0},
           "time": {"slots": 15, "periods": 1}}
    (row,) = harness.run_experiment(raw, "spjeso", seeds=(4,))
    sc = harness.scenario_for(raw, 4)
    assert len(maied.feasible_deployments(sc)) == 1
    expected = harness.evaluate_deployment(np.zeros(3), sc, 4, spco.SpcoParams())
    assert row.deployment == "000" and row.costs == expected


def test_failures_are_recorded_and_the_sweep_continues():
    raw = {"servers": [{"position": [100, 100]}, {"position": [900, 900]}],
           "time": {"slots": 5, "periods": 2}}
    spec = harness.SweepSpec("esCount", (1, 5), scenario=raw, methods=("dae",))
    rows, summary = harness.run_sweep(spec)
    assert [r.status == "ok" for r in rows] == [True, False]
    assert "cannot sweep" in rows[1].status and math.isnan(rows[1].costs.total)
    assert summary["failed"] == 1


def test_overrides_reach_the_scenario():
    raw = {}
    sc = harness.scenario_for(raw, 0, [("esCount", 4), ("dataVolume", 3.0),
                                       ("interactionFrequency", 0.2)])
    assert sc.n_servers == 4
    assert sc.arrays.frequency.tolist() == [0.2] * 10
    # the cloud delay is that of the un-swept scenario
    assert sc.cloud_delay == default_scenario().cloud_delay
    sp, mp = harness._solver_params(sc, [("V", 3.0), ("mapBeta", 50.0)], None, None)
    assert sp.V == 3.0 and mp.beta == 50.0


def test_unknown_names_are_rejected():
    with pytest.raises(ValueError):
        harness.SweepSpec("colour", (1,))
    with pytest.raises(ValueError):
        harness.SweepSpec("V", ())
    with pytest.raises(ValueError):
        harness.SweepSpec("V", (1,), repetitions=0)
    with pytest.raises(ValueError):
        harness.run_experiment({}, "random")
    with pytest.raises(ValueError):
        harness.run_experiment({}, "dae", {"colour": 1})


def test_trace_files(tmp_path):
    spec = harness.SweepSpec("mapBeta", (0.5, 50), scenario=SMALL, methods=("spjeso",))
    harness.run_sweep(spec, tmp_path, traces=True)
    names = sorted(p.name for p in (tmp_path / "traces").iterdir())
    assert names == ["mapBeta-0.5-spjeso-seed0-chain.csv", "mapBeta-0.5-spjeso-seed0-spco.csv",
                     "mapBeta-50-spjeso-seed0-chain.csv", "mapBeta-50-spjeso-seed0-spco.csv"]


def test_summary_reduction_is_the_largest_relative_gap():
    def row(method, value, total):
        c = harness._NAN_COSTS.__class__(*[0.0] * 7, total)
        return harness.ResultRow("esCount", value, method, 0, "1", c)

    rows = [row("spjeso", 1, 80.0), row("dae", 1, 100.0),
            row("spjeso", 3, 50.0), row("dae", 3, 100.0)]
    s = harness.summarize(rows)
    assert s["max_reduction_vs"]["dae"] == pytest.approx(0.5)
    assert s["mean_total"]["dae"] == {"1": 100.0, "3": 100.0}
