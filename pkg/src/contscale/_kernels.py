"""Compiled inner loops for the scaling curve.

Distances are ``sqrt(sum_k (a_k - b_k)**2)`` accumulated in ascending k.
Per-epsilon neighbour sums are accumulated in ascending tau and the time
average in ascending t, so results do not depend on thread count.
"""
import numpy as np
from numba import njit, prange

NO_BIN = 127  # int8 marker: distance not below any grid value


@njit(cache=True)
def point_distance(a, b):
    s = 0.0
    for k in range(a.shape[0]):
        diff = a[k] - b[k]
        s += diff * diff
    return np.sqrt(s)


@njit(parallel=True, cache=True)
def pairwise_distances(points):
    n = points.shape[0]
    out = np.empty((n, n))
    for i in prange(n):
        out[i, i] = 0.0
        for k in range(i + 1, n):
            out[i, k] = point_distance(points[i], points[k])
    # (a - b)**2 == (b - a)**2 exactly, so mirroring is bit-safe
    for i in prange(n):
        for k in range(i):
            out[i, k] = out[k, i]
    return out


@njit(parallel=True, cache=True)
def diameter(points):
    n = points.shape[0]
    row_max = np.zeros(n)
    for i in prange(n):
        m = 0.0
        for k in range(i + 1, n):
            d = point_distance(points[i], points[k])
            if d > m:
                m = d
        row_max[i] = m
    return row_max.max()


@njit(parallel=True, cache=True)
def bin_matrix(dist, eps):
    """First grid index whose epsilon exceeds each distance (``NO_BIN`` if none).

    The geometric grid gives a guess from the logarithm which is then
    corrected with exact comparisons against ``eps``.
    """
    n = dist.shape[0]
    n_eps = eps.shape[0]
    out = np.empty((n, n), dtype=np.int8)
    log_lo = np.log(eps[0])
    step = (np.log(eps[n_eps - 1]) - log_lo) / (n_eps - 1) if n_eps > 1 else 1.0
    for i in prange(n):
        for k in range(n):
            d = dist[i, k]
            if d < eps[0]:
                b = 0
            elif d >= eps[n_eps - 1]:
                b = n_eps
            else:
                b = int((np.log(d) - log_lo) / step) + 1
                if b < 1:
                    b = 1
                elif b > n_eps - 1:
                    b = n_eps - 1
                while b > 0 and d < eps[b - 1]:
                    b -= 1
                while b < n_eps and not d < eps[b]:
                    b += 1
            out[i, k] = b if b < n_eps else NO_BIN
    return out


@njit(parallel=True, cache=True)
def profile(bins_u, dist_v, perm_u, perm_v, n_eps, theiler, dd):
    """Average neighbour radius on the v side for every epsilon.

    ``bins_u[i, k]`` is the first grid index whose epsilon exceeds the u
    distance between original points i and k; ``dist_v`` holds v distances.
    Surrogate point i of u is original point ``perm_u[i]`` (likewise v).

    Returns (mean_delta, populated, n_used): the curve, the number of time
    indices with a non-empty neighbourhood at each epsilon, and the number
    of time indices entering the average.
    """
    n = perm_u.shape[0]
    n_t = n - 1
    delta = np.zeros((n_t, n_eps))
    nonempty = np.zeros((n_t, n_eps), dtype=np.bool_)
    keep = np.zeros(n_t, dtype=np.bool_)
    for t in prange(n_t):
        acc = np.zeros(n_eps)
        hist = np.zeros(n_eps + 1, dtype=np.int64)
        a1 = perm_u[t + 1]
        a0 = perm_u[t]
        c = perm_v[t]
        for tau in range(1, n):
            gap = t + 1 - tau
            if gap <= theiler and -gap <= theiler:
                continue
            b = bins_u[a1, perm_u[tau]]
            if dd:
                b2 = bins_u[a0, perm_u[tau - 1]]
                if b2 > b:
                    b = b2
            if b >= n_eps:
                continue
            val = dist_v[c, perm_v[tau - 1]]
            hist[b] += 1
            # full-width masked add vectorises; adding +0.0 to a sum of
            # non-negative terms leaves it bit-identical
            for j in range(n_eps):
                acc[j] += val if j >= b else 0.0
        count = 0
        for j in range(n_eps):
            count += hist[j]
            if count > 0:
                nonempty[t, j] = True
                delta[t, j] = acc[j] / count
        if count == 0:
            continue
        keep[t] = True
        # empty neighbourhoods inherit from the next larger epsilon
        for j in range(n_eps - 2, -1, -1):
            if not nonempty[t, j]:
                delta[t, j] = delta[t, j + 1]
    mean = np.zeros(n_eps)
    populated = np.zeros(n_eps, dtype=np.int64)
    used = 0
    for t in range(n_t):
        if keep[t]:
            used += 1
            for j in range(n_eps):
                mean[j] += delta[t, j]
                if nonempty[t, j]:
                    populated[j] += 1
    if used > 0:
        for j in range(n_eps):
            mean[j] = mean[j] / used
    return mean, populated, used
