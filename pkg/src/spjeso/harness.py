"""Experiments and parameter sweeps comparing the deployment methods.

Every run is keyed by (scenario, swept value, method, seed) and is fully
deterministic.  The repetition seed drives both the scenario generators and
all information streams.  Results go to a CSV with a fixed header and a JSON
summary; wall-clock runtimes only appear in the summary so the CSV bytes
depend on the inputs alone.
"""

from __future__ import annotations

import copy
import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import costs, maied, spco, streams
from .model import (CostBreakdown, DeploymentDecision, Scenario, load_scenario_dict,
                    scenario_from_dict)

METHODS = ("spjeso", "dae", "soed", "uoed")
BASELINES = ("dae", "soed", "uoed")

# swept name -> (section, key) in the scenario file, or a solver parameter
SWEEPABLE = {
    "esCount": ("servers", "count"),
    "cpuMean": ("distributions", "compute_mean"),
    "unitDeployCost": ("servers", "deploy_cost"),
    "serviceCount": ("services", "count"),
    "serviceSize": ("services", "storage_size"),
    "ueCount": ("pairs", "count"),
    "interactionFrequency": ("pairs", "frequency"),
    "dataVolume": ("services", "local_data"),
    "V": None,
    "mapBeta": None,
}
_COUNTS = {"esCount", "serviceCount", "ueCount"}

CSV_HEADER = ["param", "value", "method", "seed", "deployment", "total", "deploy",
              "maintain", "place", "operation", "ue_delay", "energy", "tactical", "status"]


@dataclass(frozen=True)
class ResultRow:
    param: str
    value: float
    method: str
    seed: int
    deployment: str
    costs: CostBreakdown
    status: str = "ok"
    runtime: float = 0.0

    def key(self):
        value = -math.inf if math.isnan(self.value) else self.value
        return (self.param, value, METHODS.index(self.method), self.seed)

    def csv_fields(self):
        c = self.costs
        nums = [c.total, c.deploy, c.maintain, c.place, c.operation, c.ue_delay,
                c.energy, c.tactical]
        return [self.param, _fmt(self.value), self.method, str(self.seed), self.deployment,
                *[_fmt(v) for v in nums], self.status]


def _fmt(v):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.9g}"


_NAN_COSTS = CostBreakdown(*[math.nan] * len(fields(CostBreakdown)))


# -------------------------------------------------------------- scenarios


def apply_override(raw: dict, name: str, value) -> dict:
    """Copy of the scenario file contents with one swept parameter set."""
    if name not in SWEEPABLE:
        raise ValueError(f"unknown sweep parameter {name!r}; choose from {sorted(SWEEPABLE)}")
    raw = copy.deepcopy(raw)
    target = SWEEPABLE[name]
    if target is None:
        return raw
    section, key = target
    if name in _COUNTS:
        value = int(value)
    cur = raw.get(section)
    if section == "distributions" or isinstance(cur, dict) or cur is None:
        raw[section] = {**(cur or {}), key: value}
    elif key == "count":
        if value > len(cur):
            raise ValueError(f"{section} lists {len(cur)} entries, cannot sweep count {value}")
        raw[section] = cur[:value]
    else:
        raw[section] = [{**item, key: value} for item in cur]
    return raw


def scenario_for(raw: dict, seed: int, overrides=(), source=None) -> Scenario:
    """Scenario of one run with ``overrides`` ((name, value) pairs) applied.

    The cloud delay is resolved on the un-swept scenario of the same seed so
    that it stays fixed across the points of a sweep.
    """
    raw = {**raw, "seed": int(seed)}
    if (raw.get("weights") or {}).get("cloud_delay") is None:
        base = scenario_from_dict(raw, source)
        raw["weights"] = {**(raw.get("weights") or {}), "cloud_delay": base.cloud_delay}
    for name, value in overrides:
        raw = apply_override(raw, name, value)
    return scenario_from_dict(raw, source)


def _solver_params(sc: Scenario, overrides, spco_params, maied_params):
    spco_params = spco_params or spco.SpcoParams()
    maied_params = maied_params or maied.MaiedParams(periods=sc.time.periods)
    for name, value in overrides:
        if name == "V":
            spco_params = spco.SpcoParams(V=float(value), backend=spco_params.backend,
                                          max_candidates=spco_params.max_candidates)
        if name == "mapBeta":
            maied_params = maied.MaiedParams(beta=float(value), map_alpha=maied_params.map_alpha,
                                             periods=maied_params.periods,
                                             freeze_info=maied_params.freeze_info)
    return spco_params, maied_params


# ----------------------------------------------------------------- runs


def evaluate_deployment(z, sc: Scenario, seed, spco_params: spco.SpcoParams,
                        T=None, trace_path=None) -> CostBreakdown:
    """Full cost of a deployment on the seed's evaluation stream."""
    T = sc.time.slots if T is None else T
    info = streams.InfoStream(sc, streams.stream_seed(seed, maied.TAG_EVAL))
    run = spco.run_spco(z, info, T, spco_params, sc, keep_decisions=False,
                        trace_path=trace_path)
    w = sc.weights
    deploy = costs.deployment_cost(z, sc)
    maintain = float(run.maintenance.mean())
    operation = float(run.operation.mean())
    tactical = run.estimate
    return CostBreakdown(deploy=deploy, maintain=maintain, place=operation - maintain,
                         operation=operation, ue_delay=float(run.ue_delay.mean()),
                         energy=float(run.energy.mean()), tactical=tactical,
                         total=w.eta1 * deploy + tactical)


def choose_deployment(method, sc: Scenario, seed, spco_params, maied_params,
                      chain_trace=None) -> np.ndarray:
    if method == "dae":
        return maied.baseline_dae(sc)
    objective = {"spjeso": "total", "soed": "operation", "uoed": "delay"}.get(method)
    if objective is None:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    res = maied.run_maied(sc, maied_params, spco_params, seed=seed, objective=objective,
                          trace_path=chain_trace)
    return res.best


def _trace_name(param, value, method, seed):
    tag = f"{param}-{_fmt(value)}-" if param else ""
    return f"{tag}{method}-seed{seed}"


@dataclass(frozen=True)
class _Job:
    raw: dict
    source: str | None
    overrides: tuple
    method: str
    seed: int
    spco_params: spco.SpcoParams | None
    maied_params: maied.MaiedParams | None
    trace_dir: str | None


def _run_job(job: _Job) -> ResultRow:
    t0 = time.perf_counter()
    param, value = job.overrides[0] if len(job.overrides) == 1 else ("", math.nan)
    value = float(value)
    try:
        sc = scenario_for(job.raw, job.seed, job.overrides, job.source)
        sp, mp = _solver_params(sc, job.overrides, job.spco_params, job.maied_params)
        chain = spco_trace = None
        if job.trace_dir is not None:
            stem = Path(job.trace_dir) / _trace_name(param, value, job.method, job.seed)
            stem.parent.mkdir(parents=True, exist_ok=True)
            spco_trace = f"{stem}-spco.csv"
            chain = None if job.method == "dae" else f"{stem}-chain.csv"
        z = choose_deployment(job.method, sc, job.seed, sp, mp, chain)
        breakdown = evaluate_deployment(z, sc, job.seed, sp, trace_path=spco_trace)
        row = ResultRow(param, value, job.method, job.seed, DeploymentDecision(z).bits,
                        breakdown)
    except Exception as exc:  # recorded per row; the sweep goes on
        row = ResultRow(param, value, job.method, job.seed, "", _NAN_COSTS,
                        status=f"error: {type(exc).__name__}: {exc}".replace("\n", " "))
    return ResultRow(**{**row.__dict__, "runtime": time.perf_counter() - t0})


def _run_jobs(jobs, workers=1):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_job, jobs))
    else:
        rows = [_run_job(j) for j in jobs]
    return sorted(rows, key=ResultRow.key)


def _load_raw(scenario):
    if isinstance(scenario, (str, Path)):
        return load_scenario_dict(scenario), str(scenario)
    if isinstance(scenario, dict):
        return scenario, None
    raise TypeError("scenario must be a file path or a scenario mapping")


def run_experiment(scenario, method, overrides=None, seeds=(0,), spco_params=None,
                   maied_params=None, out_dir=None, traces=False, workers=1):
    """Rows of one method on one scenario, one per seed.

    ``overrides`` maps swept parameter names to values and is applied before
    the run.  With ``out_dir`` the rows are written to ``results.csv`` and
    ``summary.json`` there, and per-run traces go to ``traces/``.
    """
    raw, source = _load_raw(scenario)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    overrides = tuple((overrides or {}).items())
    for name, _ in overrides:
        if name not in SWEEPABLE:
            raise ValueError(f"unknown override {name!r}; choose from {sorted(SWEEPABLE)}")
    trace_dir = str(Path(out_dir) / "traces") if (out_dir and traces) else None
    jobs = [_Job(raw, source, overrides, method, int(s), spco_params, maied_params, trace_dir)
            for s in seeds]
    rows = _run_jobs(jobs, workers)
    if out_dir is not None:
        write_outputs(rows, out_dir)
    return rows


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple
    repetitions: int = 1
    scenario: object = None   # file path or mapping; None means the built-in defaults
    methods: tuple = METHODS
    seed: int = 0

    def __post_init__(self):
        if self.param not in SWEEPABLE:
            raise ValueError(f"unknown sweep parameter {self.param!r}")
        if len(self.values) == 0:
            raise ValueError("sweep needs at least one value")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ValueError(f"unknown methods {bad}; choose from {METHODS}")

    @property
    def seeds(self):
        return [self.seed + r for r in range(self.repetitions)]


def run_sweep(sweep: SweepSpec, out_dir=None, spco_params=None, maied_params=None,
              traces=False, workers=1):
    """All (value, method, repetition) runs of a sweep; returns (rows, summary)."""
    raw, source = _load_raw(sweep.scenario if sweep.scenario is not None else {})
    trace_dir = str(Path(out_dir) / "traces") if (out_dir and traces) else None
    jobs = [_Job(raw, source, ((sweep.param, v),), m, s, spco_params, maied_params, trace_dir)
            for v in sweep.values for m in sweep.methods for s in sweep.seeds]
    rows = _run_jobs(jobs, workers)
    summary = summarize(rows)
    if out_dir is not None:
        write_outputs(rows, out_dir)
    return rows, summary


# --------------------------------------------------------------- outputs


def write_results_csv(rows, path):
    rows = sorted(rows, key=ResultRow.key)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(CSV_HEADER)
        for r in rows:
            out.writerow(r.csv_fields())


def read_results_csv(path) -> list[ResultRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected results header {header}")
        rows = []
        for rec in reader:
            d = dict(zip(header, rec))
            num = {k: float(d[k]) if d[k] else math.nan
                   for k in CSV_HEADER[5:13]}
            rows.append(ResultRow(
                param=d["param"], value=float(d["value"]) if d["value"] else math.nan,
                method=d["method"], seed=int(d["seed"]), deployment=d["deployment"],
                costs=CostBreakdown(**num), status=d["status"]))
    return rows


def summarize(rows) -> dict:
    """Per-method mean total cost at each swept value and the largest relative
    reduction of SP-JESO against each baseline over the swept values.

    Costs enter at the precision written to the CSV, so the summary of rows
    read back from a results file is identical.
    """
    ok = [r for r in rows if r.status == "ok"]
    groups: dict = {}
    for r in ok:
        total = float(_fmt(r.costs.total))
        groups.setdefault(r.method, {}).setdefault(_fmt(r.value) or "-", []).append(total)
    means = {m: {v: float(np.mean(c)) for v, c in sorted(g.items())}
             for m, g in sorted(groups.items())}
    reduction = {}
    ours = means.get("spjeso", {})
    for b in BASELINES:
        theirs = means.get(b, {})
        shared = [v for v in ours if v in theirs and theirs[v] != 0]
        if shared:
            reduction[b] = max((theirs[v] - ours[v]) / theirs[v] for v in shared)
    return {
        "rows": len(rows),
        "failed": len(rows) - len(ok),
        "params": sorted({r.param for r in rows}),
        "mean_total": means,
        "max_reduction_vs": reduction,
    }


def write_outputs(rows, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_results_csv(rows, out / "results.csv")
    summary = summarize(rows)
    summary["runtime_seconds"] = {m: float(sum(r.runtime for r in rows if r.method == m))
                                  for m in METHODS if any(r.method == m for r in rows)}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def read_summary(path) -> dict:
    return json.loads(Path(path).read_text())
