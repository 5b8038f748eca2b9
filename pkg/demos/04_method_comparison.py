# SP-JESO against the three baselines while the number of servers grows.
#
# A small version of the server-count sweep: fewer seeds and shorter runs so
# it finishes in a couple of minutes.  The same sweep is available on the
# command line:
#
#   spjeso sweep scenarios/default.yaml --param esCount --values 1,3,5,7,9 \
#       --repetitions 3 --periods 60 --out out/escount

import sys

from spjeso import harness, maied, spco

out = sys.argv[1] if len(sys.argv) > 1 else None
spec = harness.SweepSpec("esCount", (1, 3, 5, 7, 9), repetitions=3,
                         scenario={"time": {"slots": 100, "periods": 60}})
rows, summary = harness.run_sweep(spec, out, spco.SpcoParams(), maied.MaiedParams(periods=60))

print("mean total cost")
print("servers " + "".join(f"{m:>10}" for m in harness.METHODS))
for v in ("1", "3", "5", "7", "9"):
    print(f"{v:>7} " + "".join(f"{summary['mean_total'][m][v]:10.1f}" for m in harness.METHODS))
for b, r in summary["max_reduction_vs"].items():
    print(f"largest reduction against {b}: {100 * r:.1f}%")

print("\ndeployments chosen for seed 0")
for r in rows:
    if r.seed == 0:
        print(f"  M={int(r.value)} {r.method:>6}: {r.deployment}")
