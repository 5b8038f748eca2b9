"""Brute-force references for the tactical and strategic solvers.

These enumerate everything and share nothing with the solvers except the
cost formulas, so agreement between the two is a meaningful check.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import costs, maied, spco, streams
from .model import NetworkSnapshot, Scenario, TacticalDecision, default_scenario, validate_scenario

ORACLE_MAX_CANDIDATES = 10**6
HORIZON_MAX_SLOTS = 6
HORIZON_MAX_DECISIONS = 64
STATIONARY_MAX_CONFIGS = 256
_TOL = 1e-9


class OracleTooLarge(RuntimeError):
    pass


# ------------------------------------------------------------ enumeration


def _placements(z, sc: Scenario):
    """All placement matrices allowed by ``z``, in reversed lexicographic order."""
    M, S = sc.n_servers, sc.n_services
    dep = np.flatnonzero(np.asarray(z) > 0)
    bits = np.array(list(itertools.product((1, 0), repeat=len(dep) * S)), dtype=np.int8)
    xs = np.zeros((len(bits), M, S), dtype=np.int8)
    xs[:, dep, :] = bits.reshape(len(bits), len(dep), S)
    return xs


def _assignments(z, sc: Scenario):
    """All (src, dst) server index vectors, -1 = cloud, in reversed order."""
    N = sc.n_pairs
    choices = [-1] + np.flatnonzero(np.asarray(z) > 0).tolist()
    combos = np.array(list(itertools.product(choices[::-1], repeat=2 * N)), dtype=np.int64)
    return combos.reshape(-1, 2 * N)[:, :N], combos.reshape(-1, 2 * N)[:, N:]


def _one_hot(idx, M):
    return (idx[..., None, :] == np.arange(M)[:, None]).astype(np.int8)


@dataclass
class _SlotTables:
    """Cost and feasibility of every placement and assignment for one slot."""

    xs: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    x_ok: np.ndarray        # placement-only constraints
    energy: np.ndarray      # per placement
    maintain: np.ndarray    # per placement
    ue: np.ndarray          # per assignment
    y_ok: np.ndarray        # assignment-only constraints
    needs: np.ndarray       # (assignment, M, S) placements each assignment requires


def _slot_tables(z, snap: NetworkSnapshot, sc: Scenario, xs=None, assign=None) -> _SlotTables:
    a = sc.arrays
    M, S = sc.n_servers, sc.n_services
    xs = _placements(z, sc) if xs is None else xs
    src, dst = _assignments(z, sc) if assign is None else assign
    zf = np.asarray(z, dtype=float)
    # storage and full-utilization limits on deployed servers
    x_ok = (np.all(xs @ a.storage_size <= snap.storage + _TOL, axis=1)
            & np.all((xs @ a.core_load) * zf <= snap.compute + _TOL, axis=1))
    energy = np.full(len(xs), np.inf)
    energy[x_ok] = costs.energy(xs[x_ok], z, snap, sc)
    maintain = costs.maintenance_cost(xs, sc)
    ys, yd = _one_hot(src, M), _one_hot(dst, M)
    dec = TacticalDecision(np.zeros((len(src), M, S), dtype=np.int8), ys, yd)
    ue = costs.ue_delay_cost(dec, costs.slot_terms(sc, snap))
    load = (ys + yd) @ (a.frequency * a.pair_core_load)
    y_ok = np.all(load <= snap.compute + _TOL, axis=1)
    svc_hot = np.eye(S, dtype=np.int8)[a.service_of_pair]  # N x S
    needs = ((ys + yd) @ svc_hot) > 0
    return _SlotTables(xs, src, dst, x_ok, np.asarray(energy), np.atleast_1d(maintain),
                       np.atleast_1d(ue), y_ok, needs)


def _compatible(tab: _SlotTables):
    """(placement, assignment) pairs where every used service is placed."""
    missing = tab.needs[None, :, :, :] & (tab.xs[:, None, :, :] == 0)
    return ~missing.any(axis=(2, 3))


# --------------------------------------------------------------------- P3


@dataclass(frozen=True)
class OracleSolution:
    decision: TacticalDecision
    objective: float


def oracle_p3(snap, x_prev, backlog, z, V, sc: Scenario,
              max_candidates=ORACLE_MAX_CANDIDATES) -> OracleSolution:
    """Exact single-slot minimizer by enumerating every decision."""
    dep = int(np.sum(np.asarray(z) > 0))
    count = 2 ** (dep * sc.n_services) * (dep + 1) ** (2 * sc.n_pairs)
    if count > max_candidates:
        raise OracleTooLarge(f"{count} candidates exceed the oracle ceiling {max_candidates}")
    w = sc.weights
    tab = _slot_tables(z, snap, sc)
    place = costs.placement_cost(tab.xs, x_prev, sc)
    x_part = np.full(len(tab.xs), np.inf)
    ok_x = tab.x_ok
    x_part[ok_x] = (backlog * (tab.energy[ok_x] - sc.energy_budget(z))
                    + V * w.eta2 * (tab.maintain[ok_x] + place[ok_x]))
    obj = x_part[:, None] + V * w.eta3 * tab.ue[None, :]
    ok = tab.x_ok[:, None] & tab.y_ok[None, :] & _compatible(tab)
    obj = np.where(ok, obj, np.inf)
    i, j = np.unravel_index(int(np.argmin(obj)), obj.shape)
    decision = TacticalDecision.from_assignment(tab.xs[i], tab.src[j], tab.dst[j], sc.n_servers)
    return OracleSolution(decision, float(obj[i, j]))


# ------------------------------------------------------------- horizon P2


@dataclass(frozen=True)
class HorizonOptimum:
    value: float             # time-average tactical cost
    placements: np.ndarray   # chosen placement index per slot
    energy: float            # time-average energy of the optimum


def oracle_horizon_p2(z, snapshots, sc: Scenario, energy_budget=None,
                      cross_check=False) -> HorizonOptimum:
    """Best time-average tactical cost over a known horizon.

    The time-average energy must stay within the budget over the horizon.
    Energy depends only on placements, so for each placement sequence the
    offloading of every slot is chosen independently.  With ``cross_check``
    the whole decision sequence is also enumerated jointly, in the opposite
    order, and both optima must agree.
    """
    T = len(snapshots)
    if not 1 <= T <= HORIZON_MAX_SLOTS:
        raise OracleTooLarge(f"horizon of {T} slots outside 1..{HORIZON_MAX_SLOTS}")
    w = sc.weights
    budget = sc.energy_budget(z) if energy_budget is None else energy_budget
    tabs = [_slot_tables(z, s, sc) for s in snapshots]
    per_slot = int(np.max([_compatible(t).sum() for t in tabs]))
    if per_slot > HORIZON_MAX_DECISIONS:
        raise OracleTooLarge(f"{per_slot} decisions per slot exceed {HORIZON_MAX_DECISIONS}")
    K = len(tabs[0].xs)
    # best offloading cost for each placement in each slot
    best_ue = []
    for tab in tabs:
        ok = tab.y_ok[None, :] & _compatible(tab)
        best_ue.append(np.where(ok, tab.ue[None, :], np.inf).min(axis=1))
    x_prev0 = np.zeros((sc.n_servers, sc.n_services), dtype=np.int8)
    first_place = costs.placement_cost(tabs[0].xs, x_prev0, sc)
    trans = costs.placement_cost(tabs[0].xs[None, :], tabs[0].xs[:, None], sc)  # [prev, cur]
    best = (np.inf, None, np.inf)
    for seq in itertools.product(range(K), repeat=T):
        seq = np.array(seq)
        feasible = all(tabs[t].x_ok[k] for t, k in enumerate(seq))
        if not feasible:
            continue
        energy = float(np.mean([tabs[t].energy[k] for t, k in enumerate(seq)]))
        if energy > budget + _TOL:
            continue
        total = 0.0
        for t, k in enumerate(seq):
            place = first_place[k] if t == 0 else trans[seq[t - 1], k]
            total += w.eta2 * (tabs[t].maintain[k] + place) + w.eta3 * best_ue[t][k]
        value = total / T
        if value < best[0]:
            best = (value, seq, energy)
    result = HorizonOptimum(*best)
    if cross_check:
        joint = _horizon_joint(z, snapshots, sc, budget, tabs)
        if not np.isclose(joint, result.value, rtol=0, atol=1e-9 * max(1.0, abs(joint))):
            raise AssertionError(f"horizon enumerations disagree: {joint} vs {result.value}")
    return result


def _horizon_joint(z, snapshots, sc, budget, tabs) -> float:
    """Joint enumeration of full per-slot decisions, last candidate first."""
    w = sc.weights
    per_slot = []
    for tab in tabs:
        ok = tab.x_ok[:, None] & tab.y_ok[None, :] & _compatible(tab)
        pairs = np.argwhere(ok)[::-1]
        per_slot.append([(int(i), int(j)) for i, j in pairs])
    best = np.inf
    x0 = np.zeros((sc.n_servers, sc.n_services), dtype=np.int8)
    terms = [costs.slot_terms(sc, s) for s in snapshots]
    for seq in itertools.product(*per_slot):
        energy = np.mean([tabs[t].energy[i] for t, (i, _) in enumerate(seq)])
        if energy > budget + _TOL:
            continue
        total, prev = 0.0, x0
        for t, (i, j) in enumerate(seq):
            tab = tabs[t]
            dec = TacticalDecision.from_assignment(tab.xs[i], tab.src[j], tab.dst[j],
                                                   sc.n_servers)
            total += costs.tactical_cost(dec, prev, terms[t], sc)
            prev = tab.xs[i]
        best = min(best, total / len(seq))
    return float(best)


# ------------------------------------------------------------ stationarity


def transition_matrix(u, map_alpha=1.0, beta=1.0) -> np.ndarray:
    """Chain transition matrix under uniform proposals over the other states."""
    u = np.asarray(u, dtype=float)
    n = len(u)
    if n == 1:
        return np.ones((1, 1))
    accept = np.vectorize(maied.transition_probability)(u[:, None], u[None, :], map_alpha, beta)
    P = accept / (n - 1)
    np.fill_diagonal(P, 0.0)
    np.fill_diagonal(P, 1.0 - P.sum(axis=1))
    return P


def oracle_stationary(u, map_alpha=1.0, beta=1.0, tol=1e-12, max_squarings=200) -> np.ndarray:
    """Stationary distribution of the chain by repeated squaring of its matrix."""
    n = len(u)
    if n > STATIONARY_MAX_CONFIGS:
        raise OracleTooLarge(f"{n} configurations exceed {STATIONARY_MAX_CONFIGS}")
    P = transition_matrix(u, map_alpha, beta)
    # every acceptance probability is positive for finite costs, so the chain
    # can move along every proposal; the check runs on that support because
    # tiny probabilities may underflow to 0 in P
    proposals = ~np.eye(n, dtype=bool) if n > 1 else np.ones((1, 1), dtype=bool)
    n_comp, _ = connected_components(proposals, directed=True, connection="strong")
    if n_comp != 1:
        raise ValueError("transition matrix is reducible")
    for _ in range(max_squarings):
        Q = P @ P
        if np.max(np.abs(Q - P)) < tol:
            P = Q
            break
        P = Q
    pi = P.mean(axis=0)
    return pi / pi.sum()


def total_variation(p, q) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


# ---------------------------------------------------------------- theorems


@dataclass
class TheoremReport:
    theorem: str
    instance: str
    measured: float
    bound: float
    passed: bool = field(init=False)
    slack: float = field(init=False)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.passed = bool(self.measured <= self.bound + _TOL)
        self.slack = float(self.bound - self.measured)

    def to_record(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=float)


@dataclass
class TinyInstance:
    name: str
    scenario: Scenario
    z: np.ndarray
    snapshots: list


def tiny_instance(seed, servers=2, services=1, pairs=1, slots=3, z=None) -> TinyInstance:
    sc = validate_scenario(default_scenario(
        seed=int(seed), servers={"count": servers}, services={"count": services},
        pairs={"count": pairs}), f"tiny-{seed}")
    z = np.ones(servers, dtype=np.int8) if z is None else np.asarray(z, dtype=np.int8)
    snaps = streams.InfoStream(sc, streams.stream_seed(seed, maied.TAG_INFO)).take(slots)
    return TinyInstance(f"tiny-{seed}-M{servers}S{services}N{pairs}T{slots}", sc, z, snaps)


def check_theorem1(inst: TinyInstance, Vs) -> list[TheoremReport]:
    """Controller average cost against the horizon optimum plus B / V."""
    sc, z = inst.scenario, inst.z
    opt = oracle_horizon_p2(z, inst.snapshots, sc)
    B = spco.drift_bound(z, sc)
    out = []
    for V in Vs:
        params = spco.SpcoParams(V=V, backend="exhaustive", max_candidates=ORACLE_MAX_CANDIDATES)
        run = spco.run_spco(z, iter(inst.snapshots), len(inst.snapshots), params, sc,
                            keep_decisions=False)
        out.append(TheoremReport("cost bound", f"{inst.name} V={V}", run.estimate,
                                 opt.value + B / V,
                                 details={"optimum": opt.value, "B": B, "V": V}))
    return out


def check_theorem2(inst: TinyInstance, Vs) -> list[TheoremReport]:
    """Average backlog against (B + V (gamma_u - gamma_l)) / epsilon.

    The constants are estimates: gamma_u and gamma_l are the largest and
    smallest tactical costs seen in the run, and epsilon is the budget minus
    the all-cloud average energy.
    """
    sc, z = inst.scenario, inst.z
    B = spco.drift_bound(z, sc)
    budget = sc.energy_budget(z)
    cloud = TacticalDecision.cloud(sc.n_servers, sc.n_services, sc.n_pairs)
    eps = budget - float(np.mean([costs.energy(cloud.x, z, s, sc) for s in inst.snapshots]))
    out = []
    for V in Vs:
        params = spco.SpcoParams(V=V, backend="exhaustive", max_candidates=ORACLE_MAX_CANDIDATES)
        run = spco.run_spco(z, iter(inst.snapshots), len(inst.snapshots), params, sc,
                            keep_decisions=False)
        spread = float(run.tactical.max() - run.tactical.min())
        bound = (B + V * spread) / eps if eps > 0 else np.inf
        out.append(TheoremReport("queue bound", f"{inst.name} V={V}",
                                 float(np.mean(run.backlog)), bound,
                                 details={"B": B, "epsilon": eps, "V": V,
                                          "estimated_constants": True}))
    return out


def check_theorem3(u, beta, name="") -> TheoremReport:
    """Gibbs expected cost minus the minimum against ln(|configs|) / beta."""
    u = np.asarray(u, dtype=float)
    p = maied.gibbs_distribution(u, beta)
    gap = float(p @ u - u.min())
    return TheoremReport("gibbs gap", name or f"n={len(u)} beta={beta}", gap,
                         maied.stationary_gap_bound(len(u), beta),
                         details={"lower_ok": gap >= -_TOL})
