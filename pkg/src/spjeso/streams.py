"""Seeded generation of per-slot network information.

Each slot draws fresh server storage and compute capacities from normal
distributions truncated below at 1% of their means, and moves every UE
endpoint by an isotropic Gaussian step reflected at the arena walls.  Server
sites and wired capacities are static.
"""

from __future__ import annotations

import numpy as np

from .model import NetworkSnapshot, Scenario, ScenarioDistributions

FLOOR_FRACTION = 0.01


def truncated_normal(rng, mean, std, size):
    """Normal draws resampled until all lie above ``FLOOR_FRACTION * mean``."""
    floor = FLOOR_FRACTION * mean
    out = mean + std * rng.standard_normal(size)
    low = out <= floor
    while np.any(low):
        out[low] = mean + std * rng.standard_normal(int(low.sum()))
        low = out <= floor
    return out


def reflect(pos, side):
    """Fold positions back into [0, side] (mirror at both walls)."""
    period = 2.0 * side
    pos = np.mod(pos, period)
    return np.where(pos > side, period - pos, pos)


def wired_matrix(n_servers, capacity):
    cap = np.full((n_servers, n_servers), float(capacity))
    np.fill_diagonal(cap, 0.0)  # same-node marker
    return cap


def _resample_low(rng, values, mean, std):
    floor = FLOOR_FRACTION * mean
    if values.min() > floor:
        return values
    low = values <= floor
    while np.any(low):
        values[low] = mean + std * rng.standard_normal(int(low.sum()))
        low = values <= floor
    return values


def generate_snapshot(sc: Scenario, prev_positions, t: int, rng, wired=None) -> NetworkSnapshot:
    """Draw the snapshot of slot ``t``.

    ``prev_positions`` is ``(src, dst)`` from slot ``t - 1``; at ``t == 0`` they
    are used as-is (the scenario's initial positions).  All normal draws of a
    slot come from a single call: storage, compute, then the UE steps.
    """
    if t < 0:
        raise ValueError("slot index must be >= 0")
    d: ScenarioDistributions = sc.distributions
    m = sc.n_servers
    src, dst = prev_positions
    moving = t > 0 and d.mobility_std > 0
    n_pos = 2 * np.size(src) if moving else 0
    draw = rng.standard_normal(2 * m + n_pos)
    storage = _resample_low(rng, d.storage_mean + d.storage_std * draw[:m],
                            d.storage_mean, d.storage_std)
    compute = _resample_low(rng, d.compute_mean + d.compute_std * draw[m:2 * m],
                            d.compute_mean, d.compute_std)
    if moving:
        steps = d.mobility_std * draw[2 * m:].reshape((2,) + np.shape(src))
        src, dst = reflect(np.stack([src, dst]) + steps, d.arena_side)
    if wired is None:
        wired = wired_matrix(m, d.wired_capacity)
    return NetworkSnapshot(
        slot=t,
        storage=storage,
        compute=compute,
        wired_capacity=wired,
        src_positions=np.asarray(src, dtype=float),
        dst_positions=np.asarray(dst, dtype=float),
    )


class InfoStream:
    """Iterator over the snapshots of one realization, slot by slot.

    Only the distribution parameters are exposed up front; slot ``t`` exists
    once slots ``0..t-1`` have been consumed.
    """

    def __init__(self, sc: Scenario, seed):
        self._sc = sc
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self._t = 0
        a = sc.arrays
        self._positions = (a.src_position.copy(), a.dst_position.copy())
        self._wired = wired_matrix(sc.n_servers, sc.distributions.wired_capacity)
        self._wired.flags.writeable = False

    @property
    def distributions(self) -> ScenarioDistributions:
        return self._sc.distributions

    @property
    def slot(self):
        """Index of the next snapshot to be realized."""
        return self._t

    def __iter__(self):
        return self

    def __next__(self) -> NetworkSnapshot:
        snap = generate_snapshot(self._sc, self._positions, self._t, self._rng,
                                 self._wired)
        self._positions = (snap.src_positions, snap.dst_positions)
        self._t += 1
        return snap

    def take(self, count):
        return [next(self) for _ in range(count)]


def sample_scenario_batch(sc: Scenario, count: int, seed=None) -> list[InfoStream]:
    """``count`` independent streams on child seeds of ``seed``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    root = np.random.SeedSequence(sc.seed if seed is None else seed)
    return [InfoStream(sc, child) for child in root.spawn(count)]


def stream_seed(*key):
    """Seed sequence for a tagged, deterministic sub-stream."""
    return np.random.SeedSequence([int(k) for k in key])
