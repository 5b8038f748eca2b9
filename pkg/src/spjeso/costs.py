"""Delay, cost, energy and constraint evaluation.

The scalar functions take plain numbers (data volumes in MB, rates in bit/s,
capacities in GHz) and are the reference for every formula.  ``slot_terms``
evaluates them over a whole snapshot at once; solvers and oracles compose
costs from those terms so there is a single definition of each formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import MB_TO_BITS, ChannelParams, NetworkSnapshot, Scenario, TacticalDecision

_TOL = 1e-9


class InfeasibleDecision(ValueError):
    def __init__(self, report, message="infeasible decision"):
        self.report = report
        super().__init__(f"{message}: violated {', '.join(report.violated) or 'none'}")


# ---------------------------------------------------------------- formulas


def access_rate(distance, tx_power, channel: ChannelParams):
    """Shannon capacity of a UE-BS access link in bit/s.

    Channel gain is ``distance ** -path_loss``.
    """
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise ValueError("co-located UE/BS: distance must be > 0")
    snr = np.asarray(tx_power, dtype=float) * distance ** (-channel.path_loss) / channel.noise_power
    rate = channel.bandwidth * np.log2(1.0 + snr)
    return float(rate) if rate.ndim == 0 else rate


def compute_delay_cost(core_load, capacity, alpha=1.0):
    capacity = np.asarray(capacity, dtype=float)
    if np.any(capacity <= 0):
        raise ValueError("compute capacity must be > 0")
    out = np.asarray(core_load, dtype=float) * alpha / capacity
    return float(out) if out.ndim == 0 else out


def access_delay_cost(data_mb, rate, beta_tx=1.0):
    """Cost of pushing ``data_mb`` megabytes over a link of ``rate`` bit/s."""
    rate = np.asarray(rate, dtype=float)
    if np.any(rate <= 0):
        raise ValueError("unreachable BS: access rate is 0, route to the cloud instead")
    out = beta_tx * np.asarray(data_mb, dtype=float) * MB_TO_BITS / rate
    return float(out) if out.ndim == 0 else out


def exchange_delay_cost(data_mb, capacity, beta_tx=1.0, same_node=False):
    """Cost of the remote-data exchange between two servers (0 on one server)."""
    if same_node:
        return 0.0
    if capacity <= 0:
        raise ValueError("wired capacity must be > 0 between distinct servers")
    return beta_tx * data_mb * MB_TO_BITS / capacity


# ------------------------------------------------------- per-slot terms
#
# Everything below broadcasts over leading axes, so a stack of T snapshots
# (see ``stack_snapshots``) is evaluated in one call.


def _out(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


@dataclass(frozen=True)
class SlotTerms:
    """Per-slot delay-cost ingredients, all before the ``f_n`` weighting.

    ``access[..., i, n, m]`` is endpoint i (0 = source, 1 = destination) of
    pair n reaching server m, ``compute[..., n, m]`` the core task of pair n on
    server m, ``exchange[..., n, m1, m2]`` the remote-data exchange (zero
    diagonal) and ``edge`` the sum of access and compute.
    """

    access: np.ndarray
    compute: np.ndarray
    exchange: np.ndarray
    edge: np.ndarray
    frequency: np.ndarray
    cloud: float

    def at(self, t) -> "SlotTerms":
        return SlotTerms(self.access[t], self.compute[t], self.exchange[t], self.edge[t],
                         self.frequency, self.cloud)


def stack_snapshots(snaps) -> NetworkSnapshot:
    return NetworkSnapshot(
        slot=np.array([s.slot for s in snaps]),
        storage=np.stack([s.storage for s in snaps]),
        compute=np.stack([s.compute for s in snaps]),
        wired_capacity=np.stack([s.wired_capacity for s in snaps]),
        src_positions=np.stack([s.src_positions for s in snaps]),
        dst_positions=np.stack([s.dst_positions for s in snaps]),
    )


def distances(sc: Scenario, snap: NetworkSnapshot):
    """UE-BS distances, shape (..., 2, N, M)."""
    es = sc.arrays.es_position
    pos = np.stack([snap.src_positions, snap.dst_positions], axis=-3)  # (..., 2, N, 2)
    diff = pos[..., :, :, None, :] - es
    return np.sqrt(np.sum(diff * diff, axis=-1))


def inverse_wired(snap: NetworkSnapshot):
    """1 / R between distinct servers, exactly 0 on the same-node diagonal."""
    cap = snap.wired_capacity
    inv = np.zeros(np.shape(cap), dtype=float)
    off = np.broadcast_to(~np.eye(cap.shape[-1], dtype=bool), inv.shape)
    np.divide(1.0, cap, out=inv, where=off)
    return inv


def slot_terms(sc: Scenario, snap: NetworkSnapshot) -> SlotTerms:
    a, w = sc.arrays, sc.weights
    rates = np.asarray(access_rate(distances(sc, snap), a.tx_power[:, None], sc.channel))
    if np.any(rates <= 0):
        raise ValueError("unreachable BS: access rate is 0, route to the cloud instead")
    access = w.beta_tx * a.pair_local_bits[:, None] / rates
    compute = np.asarray(compute_delay_cost(a.pair_core_load[:, None],
                                            snap.compute[..., None, :], w.alpha))
    exchange = w.beta_tx * a.pair_remote_bits[:, None, None] * inverse_wired(snap)[..., None, :, :]
    edge = access + compute[..., None, :, :]
    return SlotTerms(access=access, compute=compute, exchange=exchange, edge=edge,
                     frequency=a.frequency, cloud=sc.cloud_delay)


# ------------------------------------------------------------------ costs


def ue_delay_cost(decision: TacticalDecision, terms: SlotTerms):
    """Total f_n-weighted UE delay cost, unserved endpoints paying the cloud delay."""
    ys = np.asarray(decision.y_src, dtype=float)
    yd = np.asarray(decision.y_dst, dtype=float)
    served_s, served_d = ys.sum(axis=-2), yd.sum(axis=-2)
    if np.any(served_s > 1) or np.any(served_d > 1):
        report = ConstraintReport(flags={"connection": False})
        raise InfeasibleDecision(report, "endpoint assigned to more than one server")
    edge = terms.edge
    src = np.einsum("...mn,...nm->...n", ys, edge[..., 0, :, :])
    dst = np.einsum("...mn,...nm->...n", yd, edge[..., 1, :, :])
    exch = np.einsum("...an,...bn,...nab->...n", ys, yd, terms.exchange)
    cloud = (2.0 - served_s - served_d) * terms.cloud
    return _out(np.sum(terms.frequency * (src + dst + exch + cloud), axis=-1))


def maintenance_cost(x, sc: Scenario):
    a = sc.arrays
    unit = a.maintain_cost[:, None] * a.storage_size[None, :]
    return _out(np.sum(unit * x, axis=(-2, -1)))


def placement_cost(x, x_prev, sc: Scenario):
    a = sc.arrays
    new = np.maximum(np.asarray(x, dtype=float) - np.asarray(x_prev, dtype=float), 0.0)
    unit = a.place_cost[:, None] * a.storage_size[None, :]
    return _out(np.sum(unit * new, axis=(-2, -1)))


def operation_cost(x, x_prev, sc: Scenario):
    return maintenance_cost(x, sc) + placement_cost(x, x_prev, sc)


def deployment_cost(z, sc: Scenario):
    return float(np.dot(sc.arrays.deploy_cost, np.asarray(z, dtype=float)))


def utilization(x, snap: NetworkSnapshot, sc: Scenario):
    """Placed core load over available compute, per server."""
    return (np.asarray(x, dtype=float) @ sc.arrays.core_load) / snap.compute


def energy(x, z, snap: NetworkSnapshot, sc: Scenario):
    """Power drawn by the deployed servers in watts.

    Undeployed servers draw nothing.  Raises if a deployed server would run
    above full utilization.
    """
    a = sc.arrays
    z = np.asarray(z, dtype=float)
    util = utilization(x, snap, sc)
    if np.any((z > 0) & (util > 1 + _TOL)):
        raise ValueError("compute overload: placed core load exceeds server capacity")
    return _out(np.sum(z * (a.idle_power + (a.max_power - a.idle_power) * util), axis=-1))


def tactical_cost(decision: TacticalDecision, x_prev, terms: SlotTerms, sc: Scenario):
    w = sc.weights
    return (w.eta2 * operation_cost(decision.x, x_prev, sc)
            + w.eta3 * ue_delay_cost(decision, terms))


def total_cost(z, tactical_costs, sc: Scenario):
    tactical_costs = list(np.ravel(tactical_costs))
    if not tactical_costs:
        raise ValueError("total cost needs at least one slot")
    return sc.weights.eta1 * deployment_cost(z, sc) + float(np.mean(tactical_costs))


# ------------------------------------------------------------ constraints


@dataclass
class ConstraintReport:
    flags: dict = field(default_factory=dict)
    storage_slack: np.ndarray | None = None
    compute_slack: np.ndarray | None = None
    utilization_slack: np.ndarray | None = None
    budget_slack: float | None = None

    @property
    def feasible(self):
        return all(self.flags.values())

    @property
    def violated(self):
        return [k for k, ok in self.flags.items() if not ok]


def check_constraints(z, decision: TacticalDecision, snap: NetworkSnapshot,
                      sc: Scenario) -> ConstraintReport:
    """Evaluate every per-slot and budget constraint.

    ``connection`` allows at most one server per endpoint (a missing server
    means the cloud).  ``utilization`` keeps the placed core load of each
    deployed server within its capacity so the power model stays in range.
    """
    a = sc.arrays
    z = np.asarray(z)
    x = np.asarray(decision.x)
    ys, yd = np.asarray(decision.y_src), np.asarray(decision.y_dst)
    storage_slack = snap.storage - x @ a.storage_size
    load = (ys + yd) @ (a.frequency * a.pair_core_load)
    compute_slack = snap.compute - load
    util_slack = np.where(z > 0, snap.compute - x @ a.core_load, np.inf)
    needed = x[:, a.service_of_pair]
    budget_slack = sc.budget.deploy_budget - deployment_cost(z, sc)
    flags = {
        "connection": bool(np.all(ys.sum(axis=0) <= 1) and np.all(yd.sum(axis=0) <= 1)),
        "storage": bool(np.all(storage_slack >= -_TOL)),
        "compute": bool(np.all(compute_slack >= -_TOL)),
        "service": bool(np.all(ys <= needed) and np.all(yd <= needed)),
        "server": bool(np.all(x <= z[:, None])),
        "budget": bool(budget_slack >= -_TOL),
        "utilization": bool(np.all(util_slack >= -_TOL)),
    }
    return ConstraintReport(flags=flags, storage_slack=storage_slack,
                            compute_slack=compute_slack, utilization_slack=util_slack,
                            budget_slack=budget_slack)
