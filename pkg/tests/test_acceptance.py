"""Acceptance criteria 1-9.

Each test prints one PASS/FAIL line; the lines are repeated in the pytest
terminal summary.  Tolerances and sizes are the stated ones.
"""

import time

import numpy as np
import pytest

from cost_examples import EXAMPLES
from helpers import random_tiny
from reference_values import GAP_BOUND_8_5
from spjeso import harness, maied, oracle, spco, streams
from spjeso.model import default_scenario


def _close(a, b, rel=1e-9):
    return abs(a - b) <= rel * max(abs(a), abs(b)) or abs(a - b) <= 1e-12


def test_criterion_1_cost_formula_examples(report):
    t0 = time.perf_counter()
    wrong = [name for name, thunk, expected in EXAMPLES if not _close(thunk(), expected)]
    elapsed = time.perf_counter() - t0
    ok = not wrong and elapsed < 1.0
    report(1, ok, f"{len(EXAMPLES) - len(wrong)}/{len(EXAMPLES)} worked examples within "
                  f"1e-9 relative in {elapsed:.3f}s (limit 1s); wrong: {wrong or 'none'}")
    assert ok


def test_criterion_2_exact_search_matches_oracle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    diffs, gaps = [], []
    for _ in range(200):
        sc, snap, z, x_prev, backlog, V = random_tiny(rng, 3, 2, 2)
        ex = spco.solve_p3_exhaustive(snap, x_prev, backlog, z, V, sc)
        orc = oracle.oracle_p3(snap, x_prev, backlog, z, V, sc)
        gr = spco.solve_p3_greedy(snap, x_prev, backlog, z, V, sc)
        diffs.append(abs(ex.objective - orc.objective))
        gaps.append(gr.objective - ex.objective)
    elapsed = time.perf_counter() - t0
    gaps = np.array(gaps)
    edges = [-np.inf, -1e-9, 1e-9, 1e-3, 1e-1, 1e1, 1e3, np.inf]
    hist, _ = np.histogram(gaps, bins=edges)
    labels = ["<0", "0", "(0,1e-3]", "(1e-3,0.1]", "(0.1,10]", "(10,1e3]", ">1e3"]
    print("greedy minus exact objective, histogram over 200 instances:")
    for lab, c in zip(labels, hist):
        print(f"  {lab:>12}: {c}")
    ok = max(diffs) <= 1e-9 and gaps.min() >= -1e-9 and elapsed < 120
    report(2, ok, f"max |exhaustive - oracle| = {max(diffs):.2e} (limit 1e-9); "
                  f"greedy never below exact: {gaps.min() >= -1e-9}; "
                  f"greedy exact on {int(hist[1])}/200, max gap {gaps.max():.3g}; "
                  f"{elapsed:.1f}s (limit 120s)")
    assert ok


def test_criterion_3_cost_bound(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    reports = []
    for i in range(24):
        inst = oracle.tiny_instance(100 + i, 2, 1, 1, slots=int(rng.integers(1, 5)))
        reports += oracle.check_theorem1(inst, (10, 100))
    elapsed = time.perf_counter() - t0
    failed = [r.instance for r in reports if not r.passed]
    slack = min(r.slack for r in reports)
    ok = not failed and elapsed < 300
    report(3, ok, f"{len(reports) - len(failed)}/{len(reports)} checks of average cost <= "
                  f"horizon optimum + B/V on 24 instances, V in (10, 100); min slack "
                  f"{slack:.3g}; {elapsed:.1f}s (limit 300s)")
    assert ok


def test_criterion_4_long_run_energy(report):
    t0 = time.perf_counter()
    sc = default_scenario()
    T = 10_000
    lines, ok = [], True
    for z in (np.ones(9, dtype=np.int8), np.array([1, 1, 1, 1, 0, 0, 0, 0, 0], dtype=np.int8)):
        res = spco.run_spco(z, streams.InfoStream(sc, streams.stream_seed(0, maied.TAG_EVAL)),
                            T, spco.SpcoParams(), sc, keep_decisions=False)
        ratio = res.energy.mean() / res.budget
        per_slot = res.queue.backlog / T
        good = ratio <= 1.05 and per_slot < 1e-2
        ok &= good
        lines.append(f"z={''.join(map(str, z))}: energy/budget {ratio:.4f} (limit 1.05), "
                     f"backlog/t {per_slot:.2e} (limit 1e-2)")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120
    report(4, ok, "; ".join(lines) + f"; {elapsed:.1f}s (limit 120s)")
    assert ok


def test_criterion_5_gibbs_gap_bound(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    checked = failed = 0
    for n in (2, 8, 32):
        for beta in (0.5, 5.0, 50.0):
            for _ in range(1000):
                u = rng.normal(scale=rng.choice([0.01, 1.0, 100.0]), size=n)
                rep = oracle.check_theorem3(u, beta)
                checked += 1
                failed += (not rep.passed) or (not rep.details["lower_ok"])
    bound = maied.stationary_gap_bound(8, 5.0)
    elapsed = time.perf_counter() - t0
    ok = failed == 0 and abs(bound - GAP_BOUND_8_5) <= 1e-12 and elapsed < 10
    report(5, ok, f"{checked - failed}/{checked} gap checks within 0 <= gap <= ln|Z|/beta; "
                  f"bound(8, 5) = {bound:.5f} vs 0.41589; {elapsed:.1f}s (limit 10s)")
    assert ok


def test_criterion_6_detailed_balance_and_sampling(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        n = int(rng.choice([2, 8, 32]))
        beta = float(rng.choice([0.5, 5.0, 50.0]))
        u = rng.uniform(0, 1, n)
        p = maied.gibbs_distribution(u, beta)
        flow = p[:, None] * oracle.transition_matrix(u, 1.0, beta)
        worst = max(worst, float(np.max(np.abs(flow - flow.T))))

    # frozen costs of the 8 deployments of a 3-server scenario, searched by
    # the chain itself with memoized evaluations
    sc = default_scenario(servers={"count": 3}, budget={"deploy_budget": 300.0},
                          time={"slots": 50})
    params = maied.MaiedParams(beta=5.0, periods=100_000, freeze_info=True)
    res = maied.run_maied(sc, params, spco.SpcoParams(), seed=6)
    u = np.array([maied.system_cost(z, [streams.stream_seed(6, maied.TAG_INFO, 0)], sc,
                                    spco.SpcoParams()).value for z in res.configs])
    freq = np.bincount(res.trace.states, minlength=len(u)) / params.periods
    tv_real = oracle.total_variation(freq, maied.gibbs_distribution(u, 5.0))
    exact = oracle.total_variation(oracle.oracle_stationary(u, 1.0, 5.0),
                                   maied.gibbs_distribution(u, 5.0))

    # the same with costs on the scale of 1/beta, where the law is spread out
    u2 = rng.uniform(0, 1, 8)
    tr = maied.run_markov_chain(8, lambda k, l: u2[k], maied.MaiedParams(beta=5.0,
                                periods=100_000), np.random.default_rng(7))
    tv_spread = oracle.total_variation(np.bincount(tr.states, minlength=8) / 100_000,
                                       maied.gibbs_distribution(u2, 5.0))
    elapsed = time.perf_counter() - t0
    ok = (len(u) == 8 and worst <= 1e-12 and tv_real < 0.05 and tv_spread < 0.05
          and exact < 1e-9 and elapsed < 180)
    report(6, ok, f"max detailed-balance residual {worst:.1e} over 100 vectors (limit 1e-12); "
                  f"visit-frequency TV {tv_real:.4f} (scenario costs) and {tv_spread:.4f} "
                  f"(spread costs), limit 0.05; exact chain vs Gibbs TV {exact:.1e}; "
                  f"{elapsed:.1f}s (limit 180s)")
    assert ok


def _v_table(sc, z, seed=0, T=200):
    rows = []
    for V in (1.0, 10.0, 100.0):
        info = streams.InfoStream(sc, streams.stream_seed(seed, maied.TAG_EVAL))
        r = spco.run_spco(z, info, T, spco.SpcoParams(V=V), sc, keep_decisions=False)
        rows.append((V, r.estimate, float(r.operation.mean()), float(r.ue_delay.mean()),
                     float(r.backlog.mean())))
    return rows


def _v_directions(rows):
    tol = 1e-9
    q = [r[1] for r in rows]
    sop = [r[2] for r in rows]
    ue = [r[3] for r in rows]
    return (q[2] <= q[0] + tol
            and all(b >= a - tol for a, b in zip(sop, sop[1:]))
            and all(b <= a + tol for a, b in zip(ue, ue[1:])))


def test_criterion_7_tradeoff_in_V(report):
    t0 = time.perf_counter()
    z = np.ones(9, dtype=np.int8)
    cases = {
        "default budget": default_scenario(),
        "budget at idle power": default_scenario(budget={"energy_per_es": 100.0}),
    }
    ok, parts = True, []
    for name, sc in cases.items():
        rows = _v_table(sc, z)
        print(f"{name}:   V   tactical  operation  ue_delay  mean backlog")
        for r in rows:
            print(f"  {r[0]:>6g} {r[1]:10.3f} {r[2]:10.4f} {r[3]:9.3f} {r[4]:12.1f}")
        good = _v_directions(rows)
        ok &= good
        parts.append(f"{name}: tactical {rows[0][1]:.2f} -> {rows[2][1]:.2f}, operation "
                     f"{rows[0][2]:.3f} -> {rows[2][2]:.3f}, ue {rows[0][3]:.2f} -> "
                     f"{rows[2][3]:.2f} ({'ok' if good else 'wrong direction'})")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    report(7, ok, "; ".join(parts) + f"; {elapsed:.1f}s (limit 300s)")
    assert ok


def test_criterion_8_method_ordering_and_server_count_curve(report, tmp_path):
    t0 = time.perf_counter()
    seeds = 20
    params = dict(spco_params=spco.SpcoParams(), maied_params=maied.MaiedParams(periods=200))
    at_nine = harness.SweepSpec("esCount", (9,), repetitions=seeds, methods=harness.METHODS)
    rows9, summary9 = harness.run_sweep(at_nine, tmp_path / "nine", **params)
    fewer = harness.SweepSpec("esCount", (1, 3, 5, 7), repetitions=seeds, methods=("spjeso",))
    rows_c, _ = harness.run_sweep(fewer, tmp_path / "curve", **params)
    elapsed = time.perf_counter() - t0

    means = {m: summary9["mean_total"][m]["9"] for m in harness.METHODS}
    ordering = all(means["spjeso"] <= means[b] for b in harness.BASELINES)
    curve = {}
    for r in rows_c + [r for r in rows9 if r.method == "spjeso"]:
        curve.setdefault(int(r.value), []).append(r.costs.total)
    counts = sorted(curve)
    ys = np.array([np.mean(curve[m]) for m in counts])
    k = int(np.argmin(ys))
    falling = all(ys[i + 1] <= ys[i] for i in range(k))
    flat = all(ys[i] <= 1.05 * ys[k] for i in range(k, len(ys)))
    failed = sum(r.status != "ok" for r in rows9 + rows_c)
    ok = ordering and falling and flat and failed == 0 and elapsed < 1800
    curve_txt = ", ".join(f"M={m}: {y:.1f}" for m, y in zip(counts, ys))
    report(8, ok, f"mean total over {seeds} seeds at M=9: "
                  + ", ".join(f"{m} {v:.1f}" for m, v in means.items())
                  + f" (spjeso lowest: {ordering}); spjeso vs server count: {curve_txt} "
                  f"(falls to M={counts[k]}: {falling}, then within 5%: {flat}); "
                  f"{failed} failed runs; {elapsed:.0f}s (limit 1800s)")
    assert ok


def test_criterion_9_byte_identical_results(report, tmp_path):
    t0 = time.perf_counter()
    spec = harness.SweepSpec("esCount", (1, 3), repetitions=2,
                             scenario={"time": {"slots": 50, "periods": 20}})
    harness.run_sweep(spec, tmp_path / "first")
    harness.run_sweep(spec, tmp_path / "second", workers=2)
    a = (tmp_path / "first" / "results.csv").read_bytes()
    b = (tmp_path / "second" / "results.csv").read_bytes()
    elapsed = time.perf_counter() - t0
    ok = a == b and len(a.splitlines()) == 1 + 2 * 4 * 2 and elapsed < 300
    report(9, ok, f"two runs (serial, then 2 workers) gave {'identical' if a == b else 'different'}"
                  f" results.csv bytes ({len(a)} bytes, {len(a.splitlines()) - 1} rows); "
                  f"{elapsed:.1f}s (limit 300s)")
    assert ok
