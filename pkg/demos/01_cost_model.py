# One slot of the default scenario, priced by hand.
#
# Nine candidate servers sit on a grid in a 1 km square, four services and
# ten UE pairs are drawn from the scenario seed.  We realize the first slot,
# try a few offloading choices for pair 0 and compare with the all-cloud cost.

import numpy as np

from spjeso import costs, streams
from spjeso.model import TacticalDecision, default_scenario

sc = default_scenario()
a = sc.arrays
print(f"{sc.n_servers} servers, {sc.n_services} services, {sc.n_pairs} pairs")
print(f"cloud delay cost per endpoint: {sc.cloud_delay:.2f}")

snap = next(streams.InfoStream(sc, seed=0))
print("storage (GB):", np.round(snap.storage, 1))
print("compute (GHz):", np.round(snap.compute, 1))

terms = costs.slot_terms(sc, snap)
n = 0
s = a.service_of_pair[n]
near_src = int(np.argmin(terms.edge[0, n]))
near_dst = int(np.argmin(terms.edge[1, n]))
print(f"pair {n} uses service {s}; nearest servers: source {near_src}, destination {near_dst}")
print("source edge delay per server:", np.round(terms.edge[0, n], 3))

# place service s where the endpoints are served, everyone else stays in the cloud
x = np.zeros((sc.n_servers, sc.n_services), dtype=np.int8)
x[[near_src, near_dst], s] = 1
src = -np.ones(sc.n_pairs, dtype=int)
dst = -np.ones(sc.n_pairs, dtype=int)
src[n], dst[n] = near_src, near_dst
split = TacticalDecision.from_assignment(x, src, dst, sc.n_servers)

# the same, but both endpoints share the source's server (no exchange cost)
x_one = np.zeros_like(x)
x_one[near_src, s] = 1
dst_one = dst.copy()
dst_one[n] = near_src
shared = TacticalDecision.from_assignment(x_one, src, dst_one, sc.n_servers)

cloud = TacticalDecision.cloud(sc.n_servers, sc.n_services, sc.n_pairs)
x0 = np.zeros_like(x)
z = np.zeros(sc.n_servers, dtype=np.int8)
z[[near_src, near_dst]] = 1  # deploy just the two servers we use
for name, d in [("all cloud", cloud), ("split", split), ("shared server", shared)]:
    ue = costs.ue_delay_cost(d, terms)
    op = costs.operation_cost(d.x, x0, sc)
    zeta = costs.energy(d.x, z, snap, sc)
    ok = costs.check_constraints(z, d, snap, sc)
    print(f"{name:>14}: ue {ue:8.3f}  operation {op:6.2f}  tactical "
          f"{costs.tactical_cost(d, x0, terms, sc):8.3f}  energy {zeta:7.1f} W  "
          f"violations {ok.violated}")
