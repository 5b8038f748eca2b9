# The online controller and its V knob.
#
# With the energy budget at the servers' idle power, every placed service
# pushes the energy over budget and the virtual queue has to push back.  A
# larger V weighs cost over the queue: more services get placed, the UE delay
# drops and the backlog grows.  At the default budget the queue never binds
# and V changes nothing.

import numpy as np

from spjeso import spco, streams
from spjeso.model import default_scenario

z = np.ones(9, dtype=np.int8)
T = 500

for label, per_es in [("default budget", 150.0), ("budget at idle power", 100.0)]:
    sc = default_scenario(budget={"energy_per_es": per_es})
    print(f"\n{label}: {sc.energy_budget(z):.0f} W for {z.sum()} servers")
    print("     V   tactical  operation   ue_delay  energy/budget  mean backlog")
    for V in (1.0, 10.0, 100.0, 1000.0):
        res = spco.run_spco(z, streams.InfoStream(sc, 0), T, spco.SpcoParams(V=V), sc,
                            keep_decisions=False)
        print(f"{V:6g} {res.estimate:10.3f} {res.operation.mean():10.4f} "
              f"{res.ue_delay.mean():10.3f} {res.energy.mean() / res.budget:14.4f} "
              f"{res.backlog.mean():13.1f}")

# how the backlog evolves over a longer run at the tight budget
sc = default_scenario(budget={"energy_per_es": 100.0})
res = spco.run_spco(z, streams.InfoStream(sc, 0), 5000, spco.SpcoParams(V=100.0), sc,
                    keep_decisions=False)
for t in (10, 100, 1000, 4999):
    print(f"t={t:5d}  backlog={res.backlog[t]:9.1f}  backlog/t={res.backlog[t] / t:7.3f}  "
          f"running energy/budget={res.energy[:t + 1].mean() / res.budget:.4f}")
