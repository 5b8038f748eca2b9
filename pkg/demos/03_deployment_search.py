# The deployment search as a Markov chain.
#
# A three-server scenario has eight deployments.  With the information frozen
# each deployment has one cost, and the chain's visit frequencies approach
# the Gibbs law exp(-beta U) / sum exp(-beta U).  We print both, plus the
# expected-cost gap against its ln(8) / beta bound for a few temperatures.

import numpy as np

from spjeso import maied, oracle, spco, streams
from spjeso.model import DeploymentDecision, default_scenario

sc = default_scenario(servers={"count": 3}, budget={"deploy_budget": 300.0},
                      time={"slots": 100})
configs = maied.feasible_deployments(sc)
info = streams.stream_seed(1, maied.TAG_INFO, 0)
u = np.array([maied.system_cost(z, [info], sc, spco.SpcoParams()).value for z in configs])

# scale the temperature to the cost spread so the law is not a single spike
beta = 3.0 / np.ptp(u)
params = maied.MaiedParams(beta=beta, periods=50_000, freeze_info=True)
res = maied.run_maied(sc, params, spco.SpcoParams(), seed=1, T=100)
visits = np.bincount(res.trace.states, minlength=len(configs)) / params.periods
gibbs = maied.gibbs_distribution(u, beta)

print(f"beta = {beta:.4f}")
print("deployment      cost    visits    gibbs")
for z, cost, v, g in zip(configs, u, visits, gibbs):
    print(f"{DeploymentDecision(z).bits:>10} {cost:9.2f} {v:9.4f} {g:8.4f}")
print(f"total variation: {oracle.total_variation(visits, gibbs):.4f}")
print(f"best deployment found: {DeploymentDecision(res.best).bits} at {res.best_cost:.2f}")

for b in (0.5 * beta, beta, 10 * beta):
    rep = oracle.check_theorem3(u, b)
    print(f"beta={b:8.4f}: expected cost - min = {rep.measured:8.3f}, "
          f"bound ln(8)/beta = {rep.bound:8.3f}")
