"""Edge server deployment by Markov approximation.

The deployment vector is the state of a Markov chain over the feasible
deployments.  Each period a different feasible deployment is proposed
uniformly at random, its system cost is measured by running the online
controller, and the move is accepted with probability

    1 / (1 + alpha * exp(beta * (U_new - U_cur)))

With ``alpha = 1`` the chain is reversible with respect to the Gibbs law
``exp(-beta U) / sum exp(-beta U)``, whose expected cost is within
``ln(|configs|) / beta`` of the minimum.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit, softmax

from . import costs, spco, streams
from .model import DeploymentDecision, Scenario

OBJECTIVES = ("total", "operation", "delay")

# sub-stream tags; all methods share the information and proposal streams of
# a seed so that their comparison uses common random numbers
TAG_INFO = 1
TAG_CHAIN = 2
TAG_EVAL = 3


@dataclass(frozen=True)
class MaiedParams:
    beta: float = 5.0
    map_alpha: float = 1.0
    periods: int = 200
    freeze_info: bool = False

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be > 0")
        if not self.map_alpha > 0:
            raise ValueError("map_alpha must be > 0")
        if self.periods < 1:
            raise ValueError("periods must be >= 1")


def feasible_deployments(sc: Scenario) -> np.ndarray:
    """Every deployment within the deployment budget, in lexicographic order.

    Row k is a 0/1 vector over servers; the all-zero deployment comes first.
    """
    M = sc.n_servers
    allz = np.array(list(itertools.product((0, 1), repeat=M)), dtype=np.int8).reshape(-1, M)
    cost = allz @ sc.arrays.deploy_cost
    return allz[cost <= sc.budget.deploy_budget + 1e-9]


def gibbs_distribution(costs_, beta) -> np.ndarray:
    """Gibbs law over configurations with costs ``costs_`` at inverse temperature beta."""
    u = np.asarray(costs_, dtype=float)
    if u.size == 0:
        raise ValueError("configuration set is empty")
    if not np.all(np.isfinite(u)):
        raise ValueError("costs must be finite")
    return softmax(-beta * u)


def transition_probability(u_cur, u_target, map_alpha=1.0, beta=1.0) -> float:
    """Acceptance probability of a move from cost ``u_cur`` to ``u_target``."""
    # 1 / (1 + a e^x) == expit(-(x + ln a)), which saturates instead of overflowing
    return float(expit(-(beta * (u_target - u_cur) + np.log(map_alpha))))


def stationary_gap_bound(n_configs, beta) -> float:
    return float(np.log(n_configs) / beta)


# ------------------------------------------------------------- system cost


@dataclass(frozen=True)
class CostSample:
    value: float
    deploy: float
    operation: float
    ue_delay: float
    tactical: float
    energy: float


def system_cost(z, seeds: Sequence, sc: Scenario, spco_params: spco.SpcoParams,
                T: int | None = None, objective="total") -> CostSample:
    """Deployment cost plus the controller's average tactical cost.

    One controller run of ``T`` slots is made per seed in ``seeds``.  The
    ``operation`` and ``delay`` objectives keep only the service operation or
    UE delay part of the tactical cost (the controller itself is unchanged).
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}")
    if len(seeds) == 0:
        raise ValueError("system cost needs at least one information stream")
    T = sc.time.slots if T is None else T
    w = sc.weights
    runs = [spco.run_spco(z, streams.InfoStream(sc, s), T, spco_params, sc,
                          keep_decisions=False) for s in seeds]
    op = float(np.mean([r.operation.mean() for r in runs]))
    ue = float(np.mean([r.ue_delay.mean() for r in runs]))
    tact = float(np.mean([r.estimate for r in runs]))
    deploy = costs.deployment_cost(z, sc)
    part = {"total": tact, "operation": w.eta2 * op, "delay": w.eta3 * ue}[objective]
    return CostSample(value=w.eta1 * deploy + part, deploy=deploy, operation=op,
                      ue_delay=ue, tactical=tact,
                      energy=float(np.mean([r.energy.mean() for r in runs])))


# ------------------------------------------------------------------- chain


@dataclass
class ChainTrace:
    states: np.ndarray      # configuration index per period
    costs: np.ndarray       # recorded cost of the state per period
    accepted: np.ndarray    # whether the period's proposal was accepted
    proposed: np.ndarray    # proposed configuration index (-1 when none)


def run_markov_chain(n_configs: int, evaluate: Callable[[int, int], float],
                     params: MaiedParams, rng, start: int = 0) -> ChainTrace:
    """Run the chain for ``params.periods`` periods.

    ``evaluate(k, l)`` returns the cost of configuration k measured in period l.
    The state's cost is the value recorded when it was entered; it is not
    measured again while the chain stays.
    """
    L = params.periods
    states = np.empty(L, dtype=np.int64)
    values = np.empty(L)
    accepted = np.zeros(L, dtype=bool)
    proposed = -np.ones(L, dtype=np.int64)
    cur, u_cur = start, evaluate(start, 0)
    states[0], values[0] = cur, u_cur
    for l in range(1, L):
        if n_configs > 1:
            k = int(rng.integers(n_configs - 1))
            k += k >= cur  # uniform over the others
            u_new = evaluate(k, l)
            p = transition_probability(u_cur, u_new, params.map_alpha, params.beta)
            proposed[l] = k
            if rng.random() < p:
                cur, u_cur = k, u_new
                accepted[l] = True
        states[l], values[l] = cur, u_cur
    return ChainTrace(states, values, accepted, proposed)


@dataclass
class MaiedResult:
    configs: np.ndarray
    trace: ChainTrace
    average_cost: float
    best: np.ndarray
    best_cost: float

    @property
    def deployments(self):
        return self.configs[self.trace.states]


TRACE_HEADER = ["period", "deployment", "cost", "accepted"]


def write_chain_trace(result: MaiedResult, path):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(TRACE_HEADER)
        tr = result.trace
        for l, (k, u, acc) in enumerate(zip(tr.states, tr.costs, tr.accepted)):
            out.writerow([l, DeploymentDecision(result.configs[k]).bits, f"{u:.9g}", int(acc)])


def run_maied(sc: Scenario, params: MaiedParams, spco_params: spco.SpcoParams,
              seed=None, objective="total", T: int | None = None,
              configs=None, trace_path=None) -> MaiedResult:
    """Search the deployment with the Markov chain, starting from no servers.

    Each period draws a fresh information stream (or reuses the period-0
    stream when ``freeze_info`` is set, in which case costs are memoized).
    """
    seed = sc.seed if seed is None else seed
    configs = feasible_deployments(sc) if configs is None else np.asarray(configs)
    zero = np.flatnonzero(~configs.any(axis=1))
    start = int(zero[0]) if zero.size else 0
    memo = {}

    def evaluate(k, l):
        period = 0 if params.freeze_info else l
        key = (k, period)
        if key not in memo or not params.freeze_info:
            info = streams.stream_seed(seed, TAG_INFO, period)
            memo[key] = system_cost(configs[k], [info], sc, spco_params, T, objective).value
        return memo[key]

    rng = np.random.default_rng(streams.stream_seed(seed, TAG_CHAIN))
    trace = run_markov_chain(len(configs), evaluate, params, rng, start)
    b = int(np.argmin(trace.costs))
    result = MaiedResult(configs=configs, trace=trace, average_cost=float(trace.costs.mean()),
                         best=configs[trace.states[b]].copy(), best_cost=float(trace.costs[b]))
    if trace_path is not None:
        write_chain_trace(result, Path(trace_path))
    return result


# --------------------------------------------------------------- baselines


def baseline_dae(sc: Scenario) -> np.ndarray:
    """Deploy every server, whatever the budget."""
    return np.ones(sc.n_servers, dtype=np.int8)


def baseline_soed(sc: Scenario, params: MaiedParams, spco_params: spco.SpcoParams,
                  seed=None, **kw) -> np.ndarray:
    """Chain search driven by deployment plus service operation cost."""
    return run_maied(sc, params, spco_params, seed, objective="operation", **kw).best


def baseline_uoed(sc: Scenario, params: MaiedParams, spco_params: spco.SpcoParams,
                  seed=None, **kw) -> np.ndarray:
    """Chain search driven by deployment plus UE delay cost."""
    return run_maied(sc, params, spco_params, seed, objective="delay", **kw).best
