"""Numba-jitted kernels; algorithmic twin of ``numpy_impl``.

Tree growth follows numpy_impl step for step (same node visit order, same
RNG, same float expressions on integer counts), so node arrays are
bit-identical across backends. The Pegasos margin uses an explicit loop
instead of BLAS, which may differ from the numpy backend by a few ULPs.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_SM64_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_SM64_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_SM64_MIX2 = np.uint64(0x94D049BB133111EB)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)


@njit(cache=True)
def _sm64_next(state):
    state = state + _SM64_GOLDEN
    z = state
    z = (z ^ (z >> _U30)) * _SM64_MIX1
    z = (z ^ (z >> _U27)) * _SM64_MIX2
    z = z ^ (z >> _U31)
    return state, z


@njit(cache=True)
def _splitmix64_stream(seed, count):
    out = np.empty(count, np.uint64)
    state = seed
    for i in range(count):
        state, z = _sm64_next(state)
        out[i] = z
    return out


def splitmix64_next(state: int) -> tuple[int, int]:
    """Python-int wrapper matching numpy_impl.splitmix64_next."""
    s, z = _sm64_next(np.uint64(state))
    return int(s), int(z)


@njit(cache=True)
def grow_tree(X, y, sample_idx, max_depth, min_leaf, mtry, rng_seed):
    n_total, d = X.shape
    m = sample_idx.shape[0]
    cap = 2 * m + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap, np.float64)

    idx = sample_idx.copy()
    buf = np.empty(m, np.int64)
    perm = np.arange(d)
    feats = np.empty(d, np.int64)
    vals = np.empty(m, np.float64)
    sv = np.empty(m, np.float64)
    labs = np.empty(m, np.int64)
    state = rng_seed

    stack_node = np.empty(cap, np.int64)
    stack_lo = np.empty(cap, np.int64)
    stack_hi = np.empty(cap, np.int64)
    stack_depth = np.empty(cap, np.int64)
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = m
    stack_depth[0] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        depth = stack_depth[top]
        n_seg = hi - lo
        pos = 0
        for i in range(lo, hi):
            pos += y[idx[i]]
        value[node] = pos / n_seg
        if pos == 0 or pos == n_seg or depth >= max_depth or n_seg < 2 * min_leaf:
            continue

        if mtry < d:
            q = mtry
            for i in range(mtry):
                state, z = _sm64_next(state)
                span = np.uint64(d - i)
                j = i + np.int64(z % span)
                t = perm[i]
                perm[i] = perm[j]
                perm[j] = t
                feats[i] = perm[i]
        else:
            q = d
            for i in range(d):
                feats[i] = i

        best_score = np.inf
        best_f = -1
        best_thr = 0.0
        for fi in range(q):
            f = feats[fi]
            for i in range(n_seg):
                vals[i] = X[idx[lo + i], f]
            order = np.argsort(vals[:n_seg])
            for i in range(n_seg):
                o = order[i]
                sv[i] = vals[o]
                labs[i] = y[idx[lo + o]]
            cum = 0
            for i in range(n_seg - 1):
                cum += labs[i]
                nl = i + 1
                nr = n_seg - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                if sv[i] == sv[i + 1]:
                    continue
                pos_l = cum
                neg_l = nl - pos_l
                pos_r = pos - pos_l
                neg_r = nr - pos_r
                score = (nl - (pos_l * pos_l + neg_l * neg_l) / nl) + (
                    nr - (pos_r * pos_r + neg_r * neg_r) / nr
                )
                if score < best_score:
                    best_score = score
                    best_f = f
                    thr = 0.5 * (sv[i] + sv[i + 1])
                    if thr >= sv[i + 1]:
                        thr = sv[i]
                    best_thr = thr
        if best_f < 0:
            continue

        n_left = 0
        for i in range(lo, hi):
            if X[idx[i], best_f] <= best_thr:
                buf[n_left] = idx[i]
                n_left += 1
        n_right = 0
        for i in range(lo, hi):
            if X[idx[i], best_f] > best_thr:
                buf[n_left + n_right] = idx[i]
                n_right += 1
        for i in range(n_left + n_right):
            idx[lo + i] = buf[i]

        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lid
        right[node] = rid
        stack_node[top] = rid
        stack_lo[top] = lo + n_left
        stack_hi[top] = hi
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = lid
        stack_lo[top] = lo
        stack_hi[top] = lo + n_left
        stack_depth[top] = depth + 1
        top += 1
    return feature, threshold, left, right, value, n_nodes


@njit(cache=True)
def tree_predict_value(feature, threshold, left, right, value, X):
    n = X.shape[0]
    out = np.empty(n, np.float64)
    for r in range(n):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out


@njit(cache=True)
def pegasos_train(X, y_signed, lam, order):
    n, d = X.shape
    w = np.zeros(d, np.float64)
    t = 0
    for k in range(order.shape[0]):
        t += 1
        i = order[k]
        eta = 1.0 / (lam * t)
        margin = 0.0
        for j in range(d):
            margin += w[j] * X[i, j]
        margin *= y_signed[i]
        scale = 1.0 - eta * lam
        if margin < 1.0:
            coef = eta * y_signed[i]
            for j in range(d):
                w[j] = w[j] * scale + coef * X[i, j]
        else:
            for j in range(d):
                w[j] = w[j] * scale
    return w
