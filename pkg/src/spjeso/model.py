"""Domain types and scenario files.

A :class:`Scenario` is the full static configuration of one experiment: the
service catalog, the UE pairs, the candidate edge servers, channel and cost
coefficients, budgets, the stochastic-information distributions and the time
structure.  Everything downstream (cost evaluation, snapshot streams, solvers)
reads from these immutable types.

Scenario files are YAML.  The ``servers``, ``services`` and ``pairs`` sections
accept either an explicit list of records or a generator mapping with a
``count`` key; generated sections are expanded deterministically from the
scenario ``seed`` so that a loaded scenario is always fully explicit.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np
import yaml

MB_TO_BITS = 8e6


class ScenarioError(ValueError):
    """Raised when a scenario violates one or more invariants.

    ``problems`` holds every violation as ``(path, message)`` so callers can
    report all of them at once.
    """

    def __init__(self, problems, source=None):
        self.problems = list(problems)
        self.source = source
        lines = [f"{path}: {msg}" if path else msg for path, msg in self.problems]
        head = f"invalid scenario{f' {source}' if source else ''}"
        super().__init__(head + "\n  " + "\n  ".join(lines))


@dataclass(frozen=True)
class ServiceSpec:
    """Storage, compute and data profile of one service."""

    storage_size: float  # GB
    core_load: float  # GHz-equivalent
    local_data: float  # MB, client <-> service module
    remote_data: float  # MB, service module <-> service module
    local_load: float = 0.0  # normalized to zero; the client task never offloads


@dataclass(frozen=True)
class UePair:
    service: int
    src: tuple[float, float]
    dst: tuple[float, float]
    frequency: float = 0.5
    tx_power: float = 0.1  # W, per endpoint


@dataclass(frozen=True)
class EsProfile:
    position: tuple[float, float]
    deploy_cost: float = 100.0
    maintain_cost: float = 0.1  # per GB per slot
    place_cost: float = 0.5  # per GB newly placed
    idle_power: float = 100.0
    max_power: float = 200.0


@dataclass(frozen=True)
class ChannelParams:
    bandwidth: float = 2e6  # Hz
    noise_power: float = 10 ** (-174 / 10) * 1e-3 * 2e6  # W over the band
    path_loss: float = 4.0

    @classmethod
    def from_density(cls, bandwidth, noise_dbm_per_hz, path_loss):
        noise = 10 ** (noise_dbm_per_hz / 10) * 1e-3 * bandwidth
        return cls(bandwidth=bandwidth, noise_power=noise, path_loss=path_loss)


@dataclass(frozen=True)
class CostWeights:
    alpha: float = 1.0  # compute-delay cost per second
    beta_tx: float = 1.0  # transmission-delay cost per second
    eta1: float = 1.0
    eta2: float = 1.0
    eta3: float = 1.0
    cloud_delay: float | None = None  # None: resolved from the scenario


@dataclass(frozen=True)
class BudgetConfig:
    deploy_budget: float = 400.0
    # None means energy_per_es watts for every deployed server
    energy_budget: float | None = None
    energy_per_es: float = 150.0


@dataclass(frozen=True)
class ScenarioDistributions:
    storage_mean: float = 200.0
    storage_std: float = 5.0
    compute_mean: float = 200.0
    compute_std: float = 5.0
    arena_side: float = 1000.0
    mobility_std: float = 20.0  # m per slot
    wired_capacity: float = 1e8  # bit/s between distinct servers


@dataclass(frozen=True)
class TimeStructure:
    slots: int = 200
    periods: int = 200


@dataclass(frozen=True)
class NetworkSnapshot:
    """Information realized at one slot.

    ``wired_capacity`` is in bit/s.  Its diagonal is a same-node marker (0.0)
    and is never divided by: exchange between co-located service modules is
    free by construction.
    """

    slot: int
    storage: np.ndarray  # GB per server
    compute: np.ndarray  # GHz per server
    wired_capacity: np.ndarray  # M x M
    src_positions: np.ndarray  # N x 2
    dst_positions: np.ndarray  # N x 2


@dataclass(frozen=True)
class DeploymentDecision:
    z: np.ndarray

    @classmethod
    def from_bits(cls, bits: str):
        return cls(np.array([int(c) for c in bits], dtype=np.int8))

    @property
    def bits(self) -> str:
        return "".join(str(int(v)) for v in self.z)


@dataclass(frozen=True)
class TacticalDecision:
    """Placement ``x`` (M x S) and offloading ``y_src``/``y_dst`` (M x N)."""

    x: np.ndarray
    y_src: np.ndarray
    y_dst: np.ndarray

    @classmethod
    def from_assignment(cls, x, src, dst, n_servers):
        """Build from per-endpoint server indices, ``-1`` meaning cloud."""
        src = np.asarray(src)
        dst = np.asarray(dst)
        y_src = np.zeros((n_servers, len(src)), dtype=np.int8)
        y_dst = np.zeros((n_servers, len(dst)), dtype=np.int8)
        cols = np.arange(len(src))
        y_src[src[src >= 0], cols[src >= 0]] = 1
        y_dst[dst[dst >= 0], cols[dst >= 0]] = 1
        return cls(np.asarray(x, dtype=np.int8), y_src, y_dst)

    @classmethod
    def cloud(cls, n_servers, n_services, n_pairs):
        return cls(
            np.zeros((n_servers, n_services), dtype=np.int8),
            np.zeros((n_servers, n_pairs), dtype=np.int8),
            np.zeros((n_servers, n_pairs), dtype=np.int8),
        )

    def assignment(self):
        """Per-endpoint server index for sources and destinations (-1 = cloud)."""

        def pick(y):
            idx = np.argmax(y, axis=0)
            return np.where(y.sum(axis=0) > 0, idx, -1)

        return pick(self.y_src), pick(self.y_dst)


@dataclass(frozen=True)
class CostBreakdown:
    deploy: float
    maintain: float
    place: float
    operation: float
    ue_delay: float
    energy: float
    tactical: float
    total: float


@dataclass(frozen=True)
class Scenario:
    services: tuple[ServiceSpec, ...]
    pairs: tuple[UePair, ...]
    servers: tuple[EsProfile, ...]
    channel: ChannelParams = ChannelParams()
    weights: CostWeights = CostWeights()
    budget: BudgetConfig = BudgetConfig()
    distributions: ScenarioDistributions = ScenarioDistributions()
    time: TimeStructure = TimeStructure()
    seed: int = 0

    @property
    def n_servers(self):
        return len(self.servers)

    @property
    def n_services(self):
        return len(self.services)

    @property
    def n_pairs(self):
        return len(self.pairs)

    @cached_property
    def arrays(self) -> "ScenarioArrays":
        return ScenarioArrays.build(self)

    @property
    def cloud_delay(self) -> float:
        if self.weights.cloud_delay is None:
            return default_cloud_delay(self)
        return self.weights.cloud_delay

    def energy_budget(self, z) -> float:
        if self.budget.energy_budget is not None:
            return self.budget.energy_budget
        return self.budget.energy_per_es * float(np.sum(z))


@dataclass(frozen=True)
class ScenarioArrays:
    """Numpy views of a scenario, indexed by server m, service s, pair n."""

    service_of_pair: np.ndarray
    frequency: np.ndarray
    tx_power: np.ndarray
    pair_core_load: np.ndarray
    pair_local_bits: np.ndarray
    pair_remote_bits: np.ndarray
    storage_size: np.ndarray
    core_load: np.ndarray
    es_position: np.ndarray
    deploy_cost: np.ndarray
    maintain_cost: np.ndarray
    place_cost: np.ndarray
    idle_power: np.ndarray
    max_power: np.ndarray
    src_position: np.ndarray
    dst_position: np.ndarray

    @classmethod
    def build(cls, sc: Scenario):
        svc = np.array([p.service for p in sc.pairs], dtype=np.int64)
        storage = np.array([s.storage_size for s in sc.services], dtype=float)
        core = np.array([s.core_load for s in sc.services], dtype=float)
        local = np.array([s.local_data for s in sc.services], dtype=float) * MB_TO_BITS
        remote = np.array([s.remote_data for s in sc.services], dtype=float) * MB_TO_BITS
        arrs = cls(
            service_of_pair=svc,
            frequency=np.array([p.frequency for p in sc.pairs], dtype=float),
            tx_power=np.array([p.tx_power for p in sc.pairs], dtype=float),
            pair_core_load=core[svc],
            pair_local_bits=local[svc],
            pair_remote_bits=remote[svc],
            storage_size=storage,
            core_load=core,
            es_position=np.array([e.position for e in sc.servers], dtype=float).reshape(-1, 2),
            deploy_cost=np.array([e.deploy_cost for e in sc.servers], dtype=float),
            maintain_cost=np.array([e.maintain_cost for e in sc.servers], dtype=float),
            place_cost=np.array([e.place_cost for e in sc.servers], dtype=float),
            idle_power=np.array([e.idle_power for e in sc.servers], dtype=float),
            max_power=np.array([e.max_power for e in sc.servers], dtype=float),
            src_position=np.array([p.src for p in sc.pairs], dtype=float).reshape(-1, 2),
            dst_position=np.array([p.dst for p in sc.pairs], dtype=float).reshape(-1, 2),
        )
        for f in fields(arrs):
            getattr(arrs, f.name).setflags(write=False)
        return arrs


# Every model symbol and the one (type, field) that carries it.
SYMBOLS = {
    "u_s": ("ServiceSpec", "storage_size"),
    "b_s": ("ServiceSpec", "local_load"),
    "c_s": ("ServiceSpec", "core_load"),
    "d_s": ("ServiceSpec", "local_data"),
    "e_s": ("ServiceSpec", "remote_data"),
    "s_n": ("UePair", "service"),
    "f_n": ("UePair", "frequency"),
    "p": ("UePair", "tx_power"),
    "q_m": ("EsProfile", "deploy_cost"),
    "rho_m": ("EsProfile", "maintain_cost"),
    "theta_m (placement)": ("EsProfile", "place_cost"),
    "P_idle_m": ("EsProfile", "idle_power"),
    "P_max_m": ("EsProfile", "max_power"),
    "W": ("ChannelParams", "bandwidth"),
    "N_0": ("ChannelParams", "noise_power"),
    "theta (path loss)": ("ChannelParams", "path_loss"),
    "alpha": ("CostWeights", "alpha"),
    "beta (transmission)": ("CostWeights", "beta_tx"),
    "eta_1": ("CostWeights", "eta1"),
    "eta_2": ("CostWeights", "eta2"),
    "eta_3": ("CostWeights", "eta3"),
    "T_cld": ("CostWeights", "cloud_delay"),
    "C_tot": ("BudgetConfig", "deploy_budget"),
    "P_avg": ("BudgetConfig", "energy_budget"),
    "Phi_m(t)": ("NetworkSnapshot", "storage"),
    "C_m(t)": ("NetworkSnapshot", "compute"),
    "R_m1,m2(t)": ("NetworkSnapshot", "wired_capacity"),
    "z_m": ("DeploymentDecision", "z"),
    "x_m,s(t)": ("TacticalDecision", "x"),
    "y^(s)_m,n(t)": ("TacticalDecision", "y_src"),
    "y^(d)_m,n(t)": ("TacticalDecision", "y_dst"),
    "Gamma^D": ("CostBreakdown", "deploy"),
    "Gamma^sm": ("CostBreakdown", "maintain"),
    "Gamma^sp": ("CostBreakdown", "place"),
    "Gamma^sop": ("CostBreakdown", "operation"),
    "Gamma^ue": ("CostBreakdown", "ue_delay"),
    "zeta(t)": ("CostBreakdown", "energy"),
    "Gamma^Q": ("CostBreakdown", "tactical"),
    "Gamma^ToT": ("CostBreakdown", "total"),
    "|T|": ("TimeStructure", "slots"),
    "|L|": ("TimeStructure", "periods"),
}


# ---------------------------------------------------------------- validation


def _check_scenario(sc: Scenario):
    problems = []

    def bad(path, msg):
        problems.append((path, msg))

    if not sc.services:
        bad("services", "at least one service is required")
    if not sc.servers:
        bad("servers", "at least one server is required")
    for i, s in enumerate(sc.services):
        p = f"services[{i}]"
        if not s.storage_size > 0:
            bad(f"{p}.storage_size", "must be > 0")
        if not s.core_load > 0:
            bad(f"{p}.core_load", "must be > 0")
        if not s.local_data >= 0:
            bad(f"{p}.local_data", "must be >= 0")
        if not s.remote_data >= 0:
            bad(f"{p}.remote_data", "must be >= 0")
        if s.local_load != 0:
            bad(f"{p}.local_load", "local load is normalized to 0")
    side = sc.distributions.arena_side
    for i, u in enumerate(sc.pairs):
        p = f"pairs[{i}]"
        if not (0 <= u.service < len(sc.services)):
            bad(f"{p}.service", f"unknown service {u.service}")
        if not (0 <= u.frequency <= 1):
            bad(f"{p}.frequency", "must lie in [0, 1]")
        if not u.tx_power >= 0:
            bad(f"{p}.tx_power", "must be >= 0")
        for end in ("src", "dst"):
            pos = getattr(u, end)
            if len(pos) != 2 or not all(0 <= c <= side for c in pos):
                bad(f"{p}.{end}", f"position outside the arena [0, {side}]^2")
    for i, e in enumerate(sc.servers):
        p = f"servers[{i}]"
        if not e.deploy_cost > 0:
            bad(f"{p}.deploy_cost", "must be > 0")
        if not (e.maintain_cost >= 0 and e.place_cost >= 0):
            bad(p, "unit maintenance/placement costs must be >= 0")
        if not e.idle_power >= 0:
            bad(f"{p}.idle_power", "must be >= 0")
        if not e.max_power >= e.idle_power:
            bad(f"{p}.max_power", "power ordering violated (max_power < idle_power)")
    ch = sc.channel
    if not ch.bandwidth > 0:
        bad("channel.bandwidth", "must be > 0")
    if not ch.noise_power > 0:
        bad("channel.noise_power", "must be > 0")
    if not 2 <= ch.path_loss <= 4:
        bad("channel.path_loss", "must lie in [2, 4]")
    for f in fields(sc.weights):
        v = getattr(sc.weights, f.name)
        if v is not None and not v >= 0:
            bad(f"weights.{f.name}", "must be >= 0")
    if not sc.budget.deploy_budget > 0:
        bad("budget.deploy_budget", "must be > 0")
    if sc.budget.energy_budget is not None and not sc.budget.energy_budget > 0:
        bad("budget.energy_budget", "must be > 0")
    if not sc.budget.energy_per_es > 0:
        bad("budget.energy_per_es", "must be > 0")
    d = sc.distributions
    for name in ("storage_mean", "compute_mean", "arena_side", "wired_capacity"):
        if not getattr(d, name) > 0:
            bad(f"distributions.{name}", "must be > 0")
    for name in ("storage_std", "compute_std", "mobility_std"):
        if not getattr(d, name) >= 0:
            bad(f"distributions.{name}", "must be >= 0")
    if sc.time.slots < 1:
        bad("time.slots", "must be >= 1")
    if sc.time.periods < 1:
        bad("time.periods", "must be >= 1")
    return problems


def validate_scenario(sc: Scenario, source=None) -> Scenario:
    """Check every invariant and return the scenario with defaults resolved.

    All violations are collected before raising :class:`ScenarioError`.  The
    returned scenario has a concrete cloud delay.
    """
    problems = _check_scenario(sc)
    if problems:
        raise ScenarioError(problems, source)
    if sc.weights.cloud_delay is None:
        sc = replace(sc, weights=replace(sc.weights, cloud_delay=default_cloud_delay(sc)))
    return sc


def default_cloud_delay(sc: Scenario) -> float:
    """Ten times the median single-hop edge delay cost over services.

    The single hop is an access link at half the arena side to a server with
    mean compute capacity.  It depends only on services, channel and
    distribution means, not on the server layout.
    """
    ch, w = sc.channel, sc.weights
    dist = sc.distributions.arena_side / 2
    tx_power = float(np.median([p.tx_power for p in sc.pairs])) if sc.pairs else 0.1
    rate = ch.bandwidth * math.log2(1 + tx_power * dist ** (-ch.path_loss) / ch.noise_power)
    hops = [
        w.beta_tx * s.local_data * MB_TO_BITS / rate
        + w.alpha * s.core_load / sc.distributions.compute_mean
        for s in sc.services
    ]
    return 10.0 * float(np.median(hops))


# ------------------------------------------------------------------ layout


def grid_sites(count: int, side: float) -> list[tuple[float, float]]:
    """Evenly spread server sites, nested in ``count``.

    Sites are cell centres of a k x k grid (k >= 3) visited in farthest-point
    order from the centre, so the first ``m`` sites for a small ``m`` are also
    the first sites of any larger layout on the same grid.
    """
    k = max(3, math.ceil(math.sqrt(count)))
    ticks = (np.arange(k) + 0.5) * side / k
    cells = np.array([(x, y) for y in ticks for x in ticks])
    centre = np.array([side / 2, side / 2])
    order = [int(np.argmin(np.linalg.norm(cells - centre, axis=1)))]
    dmin = np.linalg.norm(cells - cells[order[0]], axis=1)
    while len(order) < count:
        nxt = int(np.argmax(dmin))
        order.append(nxt)
        dmin = np.minimum(dmin, np.linalg.norm(cells - cells[nxt], axis=1))
    return [(float(cells[i, 0]), float(cells[i, 1])) for i in order]


# ------------------------------------------------------------ file handling

_SERVICE_GEN = dict(count=4, storage_size=20.0, core_load=40.0, local_data=10.0,
                    remote_data=4.0, spread=0.5)
_PAIR_GEN = dict(count=10, frequency=0.5, tx_power=0.1)
_SERVER_GEN = dict(count=9)


def _rng_for(seed, tag):
    return np.random.default_rng([int(seed), tag])


def _expand_services(spec, seed):
    spec = {**_SERVICE_GEN, **spec}
    rng = _rng_for(seed, 1)
    n = int(spec["count"])
    lo, hi = 1 - spec["spread"], 1 + spec["spread"]
    mult = rng.uniform(lo, hi, size=(n, 4))
    return [
        dict(storage_size=float(spec["storage_size"] * m[0]),
             core_load=float(spec["core_load"] * m[1]),
             local_data=float(spec["local_data"] * m[2]),
             remote_data=float(spec["remote_data"] * m[3]))
        for m in mult
    ]


def _expand_pairs(spec, seed, n_services, side):
    spec = {**_PAIR_GEN, **spec}
    rng = _rng_for(seed, 2)
    n = int(spec["count"])
    svc = rng.integers(0, max(n_services, 1), size=n)
    pos = rng.uniform(0, side, size=(n, 2, 2))
    return [
        dict(service=int(svc[i]), src=[float(v) for v in pos[i, 0]],
             dst=[float(v) for v in pos[i, 1]],
             frequency=float(spec["frequency"]), tx_power=float(spec["tx_power"]))
        for i in range(n)
    ]


def _expand_servers(spec, side):
    spec = {**_SERVER_GEN, **spec}
    extra = {k: v for k, v in spec.items() if k != "count"}
    return [dict(position=list(p), **extra) for p in grid_sites(int(spec["count"]), side)]


def _build(cls, raw, path, problems):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        problems.append((path, "expected a mapping"))
        return None
    known = {f.name for f in fields(cls)}
    for key in raw:
        if key not in known:
            problems.append((f"{path}.{key}" if path else key, "unknown field"))
    try:
        kwargs = {k: v for k, v in raw.items() if k in known}
        for k, v in kwargs.items():
            if isinstance(v, list):
                kwargs[k] = tuple(v)
        return cls(**kwargs)
    except TypeError as exc:
        problems.append((path, str(exc)))
        return None


def _records(cls, raw, path, problems):
    out = []
    for i, item in enumerate(raw):
        obj = _build(cls, item, f"{path}[{i}]", problems)
        if obj is not None:
            out.append(obj)
    return tuple(out)


def scenario_from_dict(raw: dict, source=None) -> Scenario:
    """Build and validate a scenario from its file representation."""
    raw = dict(raw or {})
    problems = []
    known = {"seed", "services", "pairs", "servers", "channel", "weights", "budget",
             "distributions", "time"}
    for key in raw:
        if key not in known:
            problems.append((key, "unknown section"))
    seed = int(raw.get("seed", 0))
    dist = _build(ScenarioDistributions, raw.get("distributions"), "distributions", problems)
    side = dist.arena_side if dist else ScenarioDistributions().arena_side

    ch_raw = dict(raw.get("channel") or {})
    if "noise_dbm_per_hz" in ch_raw:
        dens = ch_raw.pop("noise_dbm_per_hz")
        bw = ch_raw.get("bandwidth", ChannelParams.bandwidth)
        ch_raw["noise_power"] = 10 ** (dens / 10) * 1e-3 * bw
    channel = _build(ChannelParams, ch_raw, "channel", problems)

    services_raw = raw.get("services", {})
    if isinstance(services_raw, dict):
        services_raw = _expand_services(services_raw, seed)
    services = _records(ServiceSpec, services_raw, "services", problems)

    pairs_raw = raw.get("pairs", {})
    if isinstance(pairs_raw, dict):
        pairs_raw = _expand_pairs(pairs_raw, seed, len(services), side)
    pairs = _records(UePair, pairs_raw, "pairs", problems)

    servers_raw = raw.get("servers", {})
    if isinstance(servers_raw, dict):
        servers_raw = _expand_servers(servers_raw, side)
    servers = _records(EsProfile, servers_raw, "servers", problems)

    weights = _build(CostWeights, raw.get("weights"), "weights", problems)
    budget = _build(BudgetConfig, raw.get("budget"), "budget", problems)
    time = _build(TimeStructure, raw.get("time"), "time", problems)
    if problems:
        raise ScenarioError(problems, source)
    sc = Scenario(services=services, pairs=pairs, servers=servers, channel=channel,
                  weights=weights, budget=budget, distributions=dist, time=time, seed=seed)
    return validate_scenario(sc, source)


def _plain(obj):
    if isinstance(obj, tuple):
        return [_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def scenario_to_dict(sc: Scenario) -> dict:
    """Explicit (fully expanded) file representation of a scenario."""
    return {
        "seed": sc.seed,
        "time": _plain(asdict(sc.time)),
        "distributions": _plain(asdict(sc.distributions)),
        "channel": _plain(asdict(sc.channel)),
        "weights": _plain(asdict(sc.weights)),
        "budget": _plain(asdict(sc.budget)),
        "services": [_plain(asdict(s)) for s in sc.services],
        "servers": [_plain(asdict(e)) for e in sc.servers],
        "pairs": [_plain(asdict(p)) for p in sc.pairs],
    }


def yaml_line_index(text: str) -> dict[str, int]:
    """Map dotted/indexed key paths of a YAML document to 1-based line numbers."""
    index: dict[str, int] = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return index

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for key, val in node.value:
                sub = f"{path}.{key.value}" if path else str(key.value)
                index[sub] = key.start_mark.line + 1
                walk(val, sub)
        elif isinstance(node, yaml.SequenceNode):
            for i, val in enumerate(node.value):
                sub = f"{path}[{i}]"
                index[sub] = val.start_mark.line + 1
                walk(val, sub)

    if root is not None:
        walk(root, "")
    return index


def load_scenario_dict(path) -> dict:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioError([("", f"YAML parse error: {exc}")], str(path)) from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ScenarioError([("", "top level must be a mapping")], str(path))
    return raw


def load_scenario(path) -> Scenario:
    return scenario_from_dict(load_scenario_dict(path), source=str(path))


def dump_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(yaml.safe_dump(scenario_to_dict(sc), sort_keys=False))


def default_scenario(**sections) -> Scenario:
    """Table-III style scenario: 9 servers, 4 services, 10 UE pairs."""
    raw: dict[str, Any] = {"seed": 0}
    raw.update(sections)
    return scenario_from_dict(raw)
