"""Command line entry point.

Every subcommand prints JSON.  Failures print a single JSON object with an
``error`` field to stderr and exit with a nonzero code.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import harness, maied, oracle, spco, streams
from .model import ScenarioError, load_scenario, yaml_line_index

EXIT_INVALID = 2
EXIT_FAILED = 1


def _locate(path: str, index: dict) -> int | None:
    """Line of ``path`` or of its closest ancestor present in the file.

    Entries expanded from a generator block (``servers[3].max_power``) map
    to the generator's key (``servers.max_power``) when there is one.
    """
    for cand in (path, re.sub(r"\[\d+\]", "", path)):
        while cand:
            if cand in index:
                return index[cand]
            cut = max(cand.rfind("."), cand.rfind("["))
            cand = cand[:cut] if cut > 0 else ""
            if cand and cand.count(".") == 0 and "[" not in cand:
                break  # section level: let the index-free form try first
    top = path.split(".")[0].split("[")[0]
    return index.get(top)


def scenario_error_record(exc: ScenarioError) -> dict:
    index = {}
    if exc.source and Path(exc.source).is_file():
        index = yaml_line_index(Path(exc.source).read_text())
    return {
        "error": "invalid scenario",
        "file": exc.source,
        "problems": [{"path": p, "line": _locate(p, index), "message": m}
                     for p, m in exc.problems],
    }


def _emit(obj, stream=None):
    print(json.dumps(obj, indent=2, sort_keys=True, default=float), file=stream or sys.stdout)


def _overrides(items):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"override {item!r} must look like name=value")
        out[key] = float(value)
    return out


def _solver_args(args, sc):
    sp = spco.SpcoParams(V=args.V, backend=args.backend)
    mp = maied.MaiedParams(beta=args.beta, map_alpha=args.map_alpha,
                           periods=args.periods or sc.time.periods,
                           freeze_info=args.freeze_info)
    return sp, mp


# ------------------------------------------------------------ subcommands


def cmd_validate(args):
    sc = load_scenario(args.scenario)
    _emit({"status": "ok", "file": args.scenario, "servers": sc.n_servers,
           "services": sc.n_services, "pairs": sc.n_pairs, "cloud_delay": sc.cloud_delay,
           "feasible_deployments": int(len(maied.feasible_deployments(sc)))})
    return 0


def cmd_run(args):
    sp, mp = _solver_args(args, load_scenario(args.scenario))
    seeds = [args.seed + r for r in range(args.repetitions)]
    rows = harness.run_experiment(args.scenario, args.method, _overrides(args.set), seeds,
                                  sp, mp, out_dir=args.out, traces=args.traces,
                                  workers=args.workers)
    _emit({"rows": [dict(zip(harness.CSV_HEADER, r.csv_fields())) for r in rows],
           "out": args.out})
    return 0 if all(r.status == "ok" for r in rows) else EXIT_FAILED


def cmd_sweep(args):
    sp, mp = _solver_args(args, load_scenario(args.scenario))
    spec = harness.SweepSpec(param=args.param,
                             values=tuple(float(v) for v in args.values.split(",")),
                             repetitions=args.repetitions, scenario=args.scenario,
                             methods=tuple(args.methods.split(",")), seed=args.seed)
    rows, summary = harness.run_sweep(spec, args.out, sp, mp, traces=args.traces,
                                      workers=args.workers)
    _emit({"summary": summary, "out": args.out})
    return 0 if summary["failed"] == 0 else EXIT_FAILED


def cmd_verify_theorems(args):
    rng = np.random.default_rng(args.seed)
    reports = []
    for i in range(args.instances):
        inst = oracle.tiny_instance(args.seed * 1000 + i, 2, 1, 1,
                                    slots=int(rng.integers(1, oracle.HORIZON_MAX_SLOTS - 1)))
        reports += oracle.check_theorem1(inst, (10, 100))
        reports += oracle.check_theorem2(inst, (10, 100))
    for n in (2, 8, 32):
        for beta in (0.5, 5, 50):
            for k in range(args.samples):
                reports.append(oracle.check_theorem3(rng.normal(size=n), beta,
                                                     f"n={n} beta={beta} #{k}"))
    lines = [r.to_record() for r in reports]
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    hard = [r for r in reports if r.theorem != "queue bound"]
    counts = {}
    for r in reports:
        c = counts.setdefault(r.theorem, {"checked": 0, "passed": 0})
        c["checked"] += 1
        c["passed"] += r.passed
    _emit({"theorems": counts, "out": args.out})
    return 0 if all(r.passed for r in hard) else EXIT_FAILED


def cmd_dump_snapshots(args):
    sc = load_scenario(args.scenario)
    stream = streams.InfoStream(sc, args.seed)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        for snap in stream.take(args.slots):
            rec = {"slot": snap.slot, "storage": snap.storage.tolist(),
                   "compute": snap.compute.tolist(),
                   "src_positions": snap.src_positions.tolist(),
                   "dst_positions": snap.dst_positions.tolist()}
            out.write(json.dumps(rec) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


# ----------------------------------------------------------------- parser


def _solver_flags(p):
    p.add_argument("--V", type=float, default=100.0, help="Lyapunov control parameter")
    p.add_argument("--backend", choices=("greedy", "exhaustive"), default="greedy")
    p.add_argument("--periods", type=int, default=None,
                   help="deployment search periods (default: scenario time.periods)")
    p.add_argument("--beta", type=float, default=5.0, help="inverse temperature")
    p.add_argument("--map-alpha", type=float, default=1.0)
    p.add_argument("--freeze-info", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--traces", action="store_true", help="write per-run trace files")
    p.add_argument("--workers", type=int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(prog="spjeso", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run one method on a scenario")
    p.add_argument("scenario")
    p.add_argument("--method", choices=harness.METHODS, default="spjeso")
    p.add_argument("--set", action="append", metavar="NAME=VALUE",
                   help=f"override a sweepable parameter ({', '.join(harness.SWEEPABLE)})")
    _solver_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep one parameter over several methods")
    p.add_argument("scenario")
    p.add_argument("--param", required=True, choices=sorted(harness.SWEEPABLE))
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--methods", default=",".join(harness.METHODS))
    _solver_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify-theorems", help="numerical checks of the guarantees")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--samples", type=int, default=100, help="random cost vectors per case")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="JSON-lines file for the reports")
    p.set_defaults(func=cmd_verify_theorems)

    p = sub.add_parser("dump-snapshots", help="write the realized per-slot information")
    p.add_argument("scenario")
    p.add_argument("--slots", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="JSON-lines file (default stdout)")
    p.set_defaults(func=cmd_dump_snapshots)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        _emit(scenario_error_record(exc), sys.stderr)
        return EXIT_INVALID
    except (ValueError, OSError, RuntimeError) as exc:
        _emit({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
