"""Online service placement and offloading under a long-term energy budget.

An energy virtual queue turns the time-average budget into a per-slot
penalty.  Every slot the controller observes the new snapshot, minimizes

    backlog * (energy - budget) + V * tactical_cost

over placements and offloading decisions, and pushes the realized energy
through the queue.  The time average of the realized tactical costs is the
estimate of the expected tactical cost for the deployment.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import costs
from .model import NetworkSnapshot, Scenario, TacticalDecision

DEFAULT_MAX_CANDIDATES = 10**7


class SearchTooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class SpcoParams:
    V: float = 100.0
    backend: str = "greedy"  # or "exhaustive"
    max_candidates: int = DEFAULT_MAX_CANDIDATES

    def __post_init__(self):
        if self.V < 0:
            raise ValueError("V must be >= 0")
        if self.backend not in ("greedy", "exhaustive"):
            raise ValueError(f"unknown P3 backend {self.backend!r}")


@dataclass
class QueueState:
    backlog: float = 0.0
    history: list = field(default_factory=list)  # (backlog, energy) per slot


def next_backlog(backlog, energy, budget):
    return max(backlog + energy - budget, 0.0)


def update_queue(state: QueueState, energy, budget) -> QueueState:
    if state.backlog < 0:
        raise ValueError("queue backlog must be >= 0")
    return QueueState(next_backlog(state.backlog, energy, budget),
                      state.history + [(state.backlog, energy)])


def drift_bound(z, sc: Scenario):
    """Smallest B of the form 0.5*max(P_avg, zeta_max - P_avg)**2.

    Covers every reachable energy level, since energy lies between zero and
    the full-load power of the deployed servers.
    """
    budget = sc.energy_budget(z)
    zeta_max = float(np.dot(np.asarray(z, dtype=float), sc.arrays.max_power))
    return 0.5 * max(budget, zeta_max - budget) ** 2


@dataclass(frozen=True)
class P3Solution:
    decision: TacticalDecision
    objective: float
    operation: float
    ue_delay: float
    energy: float
    tactical: float


def evaluate_p3(decision: TacticalDecision, x_prev, terms: costs.SlotTerms,
                snap: NetworkSnapshot, backlog, V, z, sc: Scenario) -> P3Solution:
    w = sc.weights
    op = costs.operation_cost(decision.x, x_prev, sc)
    ue = costs.ue_delay_cost(decision, terms)
    zeta = costs.energy(decision.x, z, snap, sc)
    tact = w.eta2 * op + w.eta3 * ue
    obj = backlog * (zeta - sc.energy_budget(z)) + V * tact
    return P3Solution(decision, obj, op, ue, zeta, tact)


def p3_objective(decision, x_prev, terms, snap, backlog, V, z, sc) -> float:
    """Drift-plus-penalty objective of one slot."""
    return evaluate_p3(decision, x_prev, terms, snap, backlog, V, z, sc).objective


def _placement_costs(x_prev, snap, backlog, V, sc):
    """Objective contribution of each single placement (M x S)."""
    a, w = sc.arrays, sc.weights
    sop = (a.maintain_cost[:, None] + a.place_cost[:, None] * (1 - np.asarray(x_prev)))
    sop = sop * a.storage_size[None, :]
    power = (a.max_power - a.idle_power)[:, None] * a.core_load[None, :] / snap.compute[:, None]
    return V * w.eta2 * sop + backlog * power


def solve_p3_exhaustive(snap, x_prev, backlog, z, V, sc: Scenario,
                        terms=None, max_candidates=DEFAULT_MAX_CANDIDATES) -> P3Solution:
    """Exact P3 minimizer by enumeration.

    Candidates are visited in lexicographic order of the encoding
    (x row-major, then per-endpoint choices src_0..src_N-1, dst_0..dst_N-1
    with 0 = cloud and m + 1 = server m); the first minimum wins.
    """
    terms = slot_terms_or(terms, sc, snap)
    a, w = sc.arrays, sc.weights
    M, S, N = sc.n_servers, sc.n_services, sc.n_pairs
    dep = np.flatnonzero(np.asarray(z) > 0)
    D = len(dep)
    n_x = 2 ** (D * S)
    n_y = (D + 1) ** (2 * N)
    if n_x * n_y > max_candidates:
        raise SearchTooLarge(
            f"{n_x * n_y} candidates exceed the ceiling {max_candidates}; "
            "use the greedy backend")

    f = terms.frequency
    edge = terms.edge
    src_ext = np.empty((N, D + 1))
    dst_ext = np.empty((N, D + 1))
    src_ext[:, 0] = dst_ext[:, 0] = f * terms.cloud
    src_ext[:, 1:] = f[:, None] * edge[0][:, dep]
    dst_ext[:, 1:] = f[:, None] * edge[1][:, dep]
    exch_ext = np.zeros((N, D + 1, D + 1))
    exch_ext[:, 1:, 1:] = f[:, None, None] * terms.exchange[:, dep][:, :, dep]

    combos = np.array(list(itertools.product(range(D + 1), repeat=2 * N)), dtype=np.int64)
    combos = combos.reshape(n_y, 2 * N)
    cs, cd = combos[:, :N], combos[:, N:]
    rows = np.arange(N)
    ue = (src_ext[rows, cs].sum(axis=1) + dst_ext[rows, cd].sum(axis=1)
          + exch_ext[rows, cs, cd].sum(axis=1))
    weight = f * a.pair_core_load
    compute_ok = np.ones(n_y, dtype=bool)
    required = np.zeros(n_y, dtype=np.int64)
    svc = a.service_of_pair
    # placement bit j*S + s for deployed server index j; bit 0 is the last
    # character of the lexicographic x encoding
    nbits = D * S
    for j in range(D):
        on = (cs == j + 1).astype(float) + (cd == j + 1)
        compute_ok &= on @ weight <= snap.compute[dep[j]] + 1e-9
        for s in range(S):
            uses = np.any(((cs == j + 1) | (cd == j + 1)) & (svc == s)[None, :], axis=1)
            required |= uses.astype(np.int64) << (nbits - 1 - (j * S + s))

    pcost = _placement_costs(x_prev, snap, backlog, V, sc)[dep]  # D x S
    base = backlog * (float(np.dot(np.asarray(z, float), a.idle_power)) - sc.energy_budget(z))
    best = (np.inf, None, None)
    for mask in range(n_x):
        bits = np.array([(mask >> (nbits - 1 - b)) & 1 for b in range(nbits)], dtype=np.int8)
        xd = bits.reshape(D, S)
        if np.any(xd @ a.storage_size > snap.storage[dep] + 1e-9):
            continue
        if np.any(xd @ a.core_load > snap.compute[dep] + 1e-9):
            continue
        ok = compute_ok & ((required & ~mask) == 0)
        if not ok.any():
            continue
        k = int(np.argmin(np.where(ok, ue, np.inf)))
        obj = base + float(np.sum(xd * pcost)) + V * w.eta3 * ue[k]
        if obj < best[0]:
            best = (obj, xd, k)
    _, xd, k = best
    x = np.zeros((M, S), dtype=np.int8)
    x[dep] = xd
    server_of = np.concatenate([[-1], dep])  # choice index -> server (-1 = cloud)
    src, dst = server_of[cs[k]], server_of[cd[k]]
    decision = TacticalDecision.from_assignment(x, src, dst, M)
    return evaluate_p3(decision, x_prev, terms, snap, backlog, V, z, sc)


@dataclass(frozen=True)
class _GreedyInputs:
    """Slot-independent arrays handed to the compiled heuristic."""

    deployed: np.ndarray
    keep: np.ndarray
    new: np.ndarray
    power: np.ndarray
    weight: np.ndarray
    order: np.ndarray
    scale: float

    @classmethod
    def build(cls, z, V, sc: Scenario):
        a, w = sc.arrays, sc.weights
        unit = V * w.eta2 * a.storage_size[None, :]
        weight = a.frequency * a.pair_core_load
        return cls(
            deployed=(np.asarray(z) > 0).astype(np.int8),
            keep=np.ascontiguousarray(a.maintain_cost[:, None] * unit),
            new=np.ascontiguousarray(a.place_cost[:, None] * unit),
            power=np.ascontiguousarray((a.max_power - a.idle_power)[:, None]
                                       * a.core_load[None, :]),
            weight=weight,
            order=np.argsort(-weight, kind="stable"),
            scale=V * w.eta3,
        )


def _weighted(terms: costs.SlotTerms, scale):
    """Edge, cloud and exchange costs in objective units (broadcasts over slots)."""
    f = terms.frequency
    edge = scale * f[:, None] * terms.edge
    cloud = scale * f * terms.cloud
    exch = scale * f[:, None, None] * terms.exchange
    return edge, cloud, exch


def _greedy_call(g: _GreedyInputs, storage, compute, x_prev, backlog, edge, cloud, exch, sc):
    from ._kernels import greedy_p3

    a = sc.arrays
    return greedy_p3(g.deployed, storage, compute, a.storage_size, a.core_load,
                     g.keep, g.new, g.power, np.asarray(x_prev, dtype=np.int8), float(backlog),
                     edge, cloud, exch, a.service_of_pair, g.weight, g.order)


def solve_p3_greedy(snap, x_prev, backlog, z, V, sc: Scenario, terms=None) -> P3Solution:
    """Placement-then-assignment heuristic, never worse than all-cloud."""
    terms = slot_terms_or(terms, sc, snap)
    g = _GreedyInputs.build(z, V, sc)
    edge, cloud, exch = _weighted(terms, g.scale)
    x, src, dst = _greedy_call(g, snap.storage, snap.compute, x_prev, backlog,
                               edge, cloud, exch, sc)
    decision = TacticalDecision.from_assignment(x, src, dst, sc.n_servers)
    return evaluate_p3(decision, x_prev, terms, snap, backlog, V, z, sc)


def slot_terms_or(terms, sc, snap):
    return costs.slot_terms(sc, snap) if terms is None else terms


@dataclass
class SpcoResult:
    decisions: list
    tactical: np.ndarray  # Q*(t)
    operation: np.ndarray
    ue_delay: np.ndarray
    energy: np.ndarray
    backlog: np.ndarray  # backlog at the start of each slot
    maintenance: np.ndarray
    queue: QueueState
    budget: float
    drift_bound: float

    @property
    def estimate(self) -> float:
        """Time average of the realized tactical costs."""
        return float(np.mean(self.tactical))


TRACE_HEADER = ["t", "backlog", "energy", "operation_cost", "ue_delay_cost", "tactical_cost"]


def write_trace(result: SpcoResult, path):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(TRACE_HEADER)
        for t in range(len(result.tactical)):
            out.writerow([t] + [f"{v:.9g}" for v in (
                result.backlog[t], result.energy[t], result.operation[t],
                result.ue_delay[t], result.tactical[t])])


def _stacked_decisions(xs, srcs, dsts, M):
    """Stack per-slot assignments into decision arrays with a leading slot axis."""
    T, N = srcs.shape
    m_idx = np.arange(M)[None, :, None]
    y_src = (srcs[:, None, :] == m_idx).astype(np.int8)
    y_dst = (dsts[:, None, :] == m_idx).astype(np.int8)
    return TacticalDecision(x=xs, y_src=y_src, y_dst=y_dst)


BLOCK = 256


def run_spco(z, stream, T: int, params: SpcoParams, sc: Scenario,
             keep_decisions=True, trace_path=None) -> SpcoResult:
    """Run the online controller for ``T`` slots with the backlog starting at 0.

    The placement before slot 0 is empty, so slot 0 pays full placement cost.
    Snapshots are pulled from ``stream`` one at a time but their delay terms
    are evaluated in blocks; the decision of slot t only ever sees snapshot t.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    z = np.asarray(z)
    M, S, N = sc.n_servers, sc.n_services, sc.n_pairs
    budget = sc.energy_budget(z)
    w = sc.weights
    x_prev = np.zeros((M, S), dtype=np.int8)
    backlog = 0.0
    xs = np.empty((T, M, S), dtype=np.int8)
    srcs = np.empty((T, N), dtype=np.int64)
    dsts = np.empty((T, N), dtype=np.int64)
    backlogs = np.empty(T)
    energies = np.empty(T)
    tactical, operation, ue_delay = np.empty(T), np.empty(T), np.empty(T)
    maintenance = np.empty(T)
    g = _GreedyInputs.build(z, params.V, sc) if params.backend == "greedy" else None
    for start in range(0, T, BLOCK):
        stop = min(start + BLOCK, T)
        snaps = [next(stream) for _ in range(stop - start)]
        block = costs.stack_snapshots(snaps)
        terms = costs.slot_terms(sc, block)
        if g is not None:
            edge, cloud, exch = _weighted(terms, g.scale)
        for k, snap in enumerate(snaps):
            t = start + k
            backlogs[t] = backlog
            if g is not None:
                x, src, dst = _greedy_call(g, snap.storage, snap.compute, x_prev, backlog,
                                           edge[k], cloud, exch[k], sc)
            else:
                sol = solve_p3_exhaustive(snap, x_prev, backlog, z, params.V, sc,
                                          terms.at(k), params.max_candidates)
                x, (src, dst) = sol.decision.x, sol.decision.assignment()
            xs[t], srcs[t], dsts[t] = x, src, dst
            energies[t] = costs.energy(x, z, snap, sc)
            backlog = next_backlog(backlog, energies[t], budget)
            x_prev = xs[t]
        dec = _stacked_decisions(xs[start:stop], srcs[start:stop], dsts[start:stop], M)
        before = np.concatenate([xs[start - 1:start] if start else
                                 np.zeros((1, M, S), dtype=np.int8), xs[start:stop - 1]])
        maintenance[start:stop] = costs.maintenance_cost(dec.x, sc)
        operation[start:stop] = maintenance[start:stop] + costs.placement_cost(dec.x, before, sc)
        ue_delay[start:stop] = costs.ue_delay_cost(dec, terms)
    tactical[:] = w.eta2 * operation + w.eta3 * ue_delay
    decisions = []
    if keep_decisions:
        decisions = [TacticalDecision.from_assignment(xs[t], srcs[t], dsts[t], M)
                     for t in range(T)]
    history = list(zip(backlogs.tolist(), energies.tolist()))
    result = SpcoResult(decisions=decisions, queue=QueueState(backlog, history),
                        budget=budget, drift_bound=drift_bound(z, sc), tactical=tactical,
                        operation=operation, ue_delay=ue_delay, energy=energies,
                        backlog=backlogs, maintenance=maintenance)
    if trace_path is not None:
        write_trace(result, Path(trace_path))
    return result
