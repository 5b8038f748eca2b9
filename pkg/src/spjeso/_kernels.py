"""Compiled inner loop of the greedy single-slot heuristic.

Costs arrive pre-scaled into objective units.  ``edge[i, n, m]`` and
``cloud[n]`` are the weighted delay of endpoint (i, n), ``exch[n, m1, m2]``
the weighted exchange cost of pair n.  The objective contribution of placing
service s on server m is ``keep + new * (1 - x_prev) + backlog * power / C_m``.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _pair_cost(n, a, b, edge, cloud, exch):
    c = cloud[n] if a < 0 else edge[0, n, a]
    c += cloud[n] if b < 0 else edge[1, n, b]
    if a >= 0 and b >= 0:
        c += exch[n, a, b]
    return c


@njit(cache=True)
def _best_pair(n, x, svc, w, load, cap, deployed, edge, cloud, exch):
    m_count = x.shape[0]
    best_a, best_b = -1, -1
    best = _pair_cost(n, -1, -1, edge, cloud, exch)
    s = svc[n]
    for a in range(-1, m_count):
        if a >= 0 and (deployed[a] == 0 or x[a, s] == 0 or load[a] + w[n] > cap[a]):
            continue
        for b in range(-1, m_count):
            if b >= 0:
                if deployed[b] == 0 or x[b, s] == 0:
                    continue
                extra = w[n] * (2.0 if a == b else 1.0)
                if load[b] + extra > cap[b]:
                    continue
            c = _pair_cost(n, a, b, edge, cloud, exch)
            if c < best:
                best, best_a, best_b = c, a, b
    return best_a, best_b


@njit(cache=True)
def greedy_p3(deployed, storage_cap, compute_cap, size, core, keep, new, power,
              x_prev, backlog, edge, cloud, exch, svc, w, order):
    m_count = storage_cap.shape[0]
    s_count = size.shape[0]
    n_count = svc.shape[0]
    eps = 1e-9
    x_cost = np.empty((m_count, s_count))
    for m in range(m_count):
        for s in range(s_count):
            x_cost[m, s] = (keep[m, s] + new[m, s] * (1 - x_prev[m, s])
                            + backlog * power[m, s] / compute_cap[m])
    x = np.zeros((m_count, s_count), dtype=np.int8)
    used_storage = np.zeros(m_count)
    used_core = np.zeros(m_count)

    # phase 1: place by best estimated objective reduction per GB
    cur = np.empty((2, n_count))
    where = -np.ones((2, n_count), dtype=np.int64)
    for i in range(2):
        for n in range(n_count):
            cur[i, n] = cloud[n]
    load = np.zeros(m_count)
    savings = np.empty(2 * n_count)
    idx_i = np.empty(2 * n_count, dtype=np.int64)
    idx_n = np.empty(2 * n_count, dtype=np.int64)
    while True:
        best_score = 0.0
        best_m, best_s = -1, -1
        for m in range(m_count):
            if deployed[m] == 0:
                continue
            for s in range(s_count):
                if x[m, s] == 1:
                    continue
                if used_storage[m] + size[s] > storage_cap[m] + eps:
                    continue
                if used_core[m] + core[s] > compute_cap[m] + eps:
                    continue
                k = 0
                for i in range(2):
                    for n in range(n_count):
                        if svc[n] == s and where[i, n] != m:
                            gain = cur[i, n] - edge[i, n, m]
                            if gain > 0:
                                savings[k] = gain
                                idx_i[k] = i
                                idx_n[k] = n
                                k += 1
                if k == 0:
                    continue
                room = compute_cap[m] - load[m]
                benefit = 0.0
                total_need = 0.0
                for j in range(k):
                    benefit += savings[j]
                    total_need += w[idx_n[j]]
                if total_need > room + eps:
                    benefit = 0.0
                    perm = np.argsort(-savings[:k])
                    for j in perm:
                        need = w[idx_n[j]]
                        if need <= room + eps:
                            benefit += savings[j]
                            room -= need
                gain = benefit - x_cost[m, s]
                if gain > eps:
                    score = gain / size[s]
                    if score > best_score:
                        best_score, best_m, best_s = score, m, s
        if best_m < 0:
            break
        m, s = best_m, best_s
        x[m, s] = 1
        used_storage[m] += size[s]
        used_core[m] += core[s]
        k = 0
        for i in range(2):
            for n in range(n_count):
                if svc[n] == s and where[i, n] != m:
                    gain = cur[i, n] - edge[i, n, m]
                    if gain > 0:
                        savings[k] = gain
                        idx_i[k] = i
                        idx_n[k] = n
                        k += 1
        perm = np.argsort(-savings[:k])
        for j in perm:
            i, n = idx_i[j], idx_n[j]
            if load[m] + w[n] <= compute_cap[m] + eps:
                old = where[i, n]
                if old >= 0:
                    load[old] -= w[n]
                where[i, n] = m
                load[m] += w[n]
                cur[i, n] = edge[i, n, m]

    # phase 2: joint (source, destination) assignment per pair
    src = -np.ones(n_count, dtype=np.int64)
    dst = -np.ones(n_count, dtype=np.int64)
    load[:] = 0.0
    cap = compute_cap + eps
    for n in order:
        a, b = _best_pair(n, x, svc, w, load, cap, deployed, edge, cloud, exch)
        src[n], dst[n] = a, b
        if a >= 0:
            load[a] += w[n]
        if b >= 0:
            load[b] += w[n]

    # phase 3: one round of pairwise reassignment
    for n in order:
        if src[n] >= 0:
            load[src[n]] -= w[n]
        if dst[n] >= 0:
            load[dst[n]] -= w[n]
        a, b = _best_pair(n, x, svc, w, load, cap, deployed, edge, cloud, exch)
        src[n], dst[n] = a, b
        if a >= 0:
            load[a] += w[n]
        if b >= 0:
            load[b] += w[n]

    # phase 4: drop placements nobody uses
    used = np.zeros((m_count, s_count), dtype=np.int8)
    for n in range(n_count):
        if src[n] >= 0:
            used[src[n], svc[n]] = 1
        if dst[n] >= 0:
            used[dst[n], svc[n]] = 1
    for m in range(m_count):
        for s in range(s_count):
            if x[m, s] == 1 and used[m, s] == 0 and x_cost[m, s] >= 0:
                x[m, s] = 0

    # fall back to all-cloud when that is cheaper
    obj = 0.0
    cloud_obj = 0.0
    for m in range(m_count):
        for s in range(s_count):
            if x[m, s] == 1:
                obj += x_cost[m, s]
    for n in range(n_count):
        obj += _pair_cost(n, src[n], dst[n], edge, cloud, exch)
        cloud_obj += 2.0 * cloud[n]
    if cloud_obj < obj:
        x[:, :] = 0
        src[:] = -1
        dst[:] = -1
    return x, src, dst
