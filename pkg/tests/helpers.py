"""Small hand-built scenarios and snapshots shared by the tests."""

import numpy as np

from spjeso.model import NetworkSnapshot, scenario_from_dict
from spjeso.streams import wired_matrix


def service(storage=2.0, core=10.0, local=1.0, remote=0.5):
    return dict(storage_size=storage, core_load=core, local_data=local, remote_data=remote)


def server(x=250.0, y=500.0, **kw):
    return dict(position=[x, y], **kw)


def pair(svc=0, src=(200.0, 500.0), dst=(300.0, 500.0), f=0.5, p=0.1):
    return dict(service=svc, src=list(src), dst=list(dst), frequency=f, tx_power=p)


def make_scenario(services=None, servers=None, pairs=None, **sections):
    raw = dict(
        seed=0,
        services=services if services is not None else [service()],
        servers=servers if servers is not None else [server()],
        pairs=pairs if pairs is not None else [pair()],
    )
    raw.setdefault("weights", {"cloud_delay": 50.0})
    raw.update(sections)
    return scenario_from_dict(raw)


def snapshot(sc, storage=200.0, compute=200.0, wired=1e8, slot=0):
    M = sc.n_servers
    a = sc.arrays
    return NetworkSnapshot(
        slot=slot,
        storage=np.full(M, float(storage)),
        compute=np.full(M, float(compute)),
        wired_capacity=wired_matrix(M, wired),
        src_positions=a.src_position.copy(),
        dst_positions=a.dst_position.copy(),
    )


def random_tiny(rng, max_servers=3, max_services=2, max_pairs=2):
    """Random small scenario, snapshot, previous placement, backlog and deployment."""
    M = int(rng.integers(1, max_servers + 1))
    S = int(rng.integers(1, max_services + 1))
    N = int(rng.integers(1, max_pairs + 1))
    side = 1000.0
    services = [service(storage=float(rng.uniform(10, 120)), core=float(rng.uniform(20, 150)),
                        local=float(rng.uniform(1, 15)), remote=float(rng.uniform(0, 8)))
                for _ in range(S)]
    servers = [server(*map(float, rng.uniform(50, side - 50, 2)),
                      place_cost=float(rng.uniform(0, 1)), maintain_cost=float(rng.uniform(0, 0.3)))
               for _ in range(M)]
    pairs = [pair(int(rng.integers(S)), tuple(map(float, rng.uniform(0, side, 2))),
                  tuple(map(float, rng.uniform(0, side, 2))), f=float(rng.uniform(0.1, 1)))
             for _ in range(N)]
    sc = make_scenario(services, servers, pairs,
                       weights={"cloud_delay": float(rng.uniform(5, 60))})
    snap = NetworkSnapshot(
        slot=0,
        storage=rng.uniform(50, 250, M),
        compute=rng.uniform(60, 250, M),
        wired_capacity=wired_matrix(M, float(rng.uniform(1e7, 1e8))),
        src_positions=sc.arrays.src_position.copy(),
        dst_positions=sc.arrays.dst_position.copy(),
    )
    z = rng.integers(0, 2, M).astype(np.int8)
    x_prev = (rng.random((M, S)) < 0.3).astype(np.int8) * z[:, None]
    backlog = float(rng.choice([0.0, rng.uniform(0, 200)]))
    V = float(rng.choice([0.0, 1.0, 10.0, 100.0]))
    return sc, snap, z, x_prev, backlog, V
