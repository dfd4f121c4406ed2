"""Pure-numpy reference implementations of the hot kernels.

This module defines the ground-truth semantics; the numba twin in
``numba_impl`` follows the same algorithms step for step. Tree growth is
designed so both backends produce bit-identical node arrays:

* split scores are computed from integer class counts with one fixed float
  expression, so candidate scores are reproducible to the bit;
* candidate thresholds sit only at value-change boundaries, where cumulative
  counts do not depend on how the sort ordered tied values;
* ties are broken toward the first feature in draw order, then the lowest
  threshold (first minimal candidate);
* per-node feature subsets come from a SplitMix64 counter PRNG implemented
  identically in both backends.

The Pegasos kernel is allowed to differ across backends only in the dot
product (BLAS here, an explicit loop under numba), i.e. by a few ULPs.
"""

from __future__ import annotations

import numpy as np

_SM64_GOLDEN = 0x9E3779B97F4A7C15
_SM64_MIX1 = 0xBF58476D1CE4E5B9
_SM64_MIX2 = 0x94D049BB133111EB
_U64_MASK = (1 << 64) - 1


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state; returns (new_state, 64-bit output)."""
    state = (state + _SM64_GOLDEN) & _U64_MASK
    z = state
    z = ((z ^ (z >> 30)) * _SM64_MIX1) & _U64_MASK
    z = ((z ^ (z >> 27)) * _SM64_MIX2) & _U64_MASK
    z = z ^ (z >> 31)
    return state, z


def grow_tree(X, y, sample_idx, max_depth, min_leaf, mtry, rng_seed):
    """Grow a binary gini decision tree on X[sample_idx].

    Impure nodes are split as long as any value-distinct candidate respects
    min_leaf, even when the best gain is zero; this is what lets depth-2
    trees solve 4-point XOR, where every root split has zero gain.

    Args:
        X: (n, d) float64 feature matrix.
        y: (n,) int64 labels in {0, 1}.
        sample_idx: (m,) int64 training rows; duplicates allowed (bootstrap).
        max_depth: maximum split depth (root at 0); pass a large value for
            unlimited.
        min_leaf: minimum samples in each child.
        mtry: features examined per node; if mtry == d no RNG is consumed.
        rng_seed: uint64 SplitMix64 state for feature subsampling.

    Returns:
        (feature, threshold, left, right, value, n_nodes). Leaves have
        feature == -1; value is the class-1 fraction at the node. Arrays are
        over-allocated; slice with n_nodes.
    """
    n_total, d = X.shape
    m = sample_idx.shape[0]
    cap = 2 * m + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap, np.float64)

    idx = np.asarray(sample_idx, np.int64).copy()
    perm = np.arange(d, dtype=np.int64)  # persistent across nodes
    state = int(rng_seed)

    # explicit DFS stack: left child processed first
    stack = [(0, 0, m, 0)]
    n_nodes = 1
    while stack:
        node, lo, hi, depth = stack.pop()
        seg = idx[lo:hi]
        n_seg = hi - lo
        pos = int(np.sum(y[seg]))
        value[node] = pos / n_seg
        if pos == 0 or pos == n_seg or depth >= max_depth or n_seg < 2 * min_leaf:
            continue

        if mtry < d:
            feats = np.empty(mtry, np.int64)
            for i in range(mtry):
                state, z = splitmix64_next(state)
                j = i + z % (d - i)
                perm[i], perm[j] = perm[j], perm[i]
                feats[i] = perm[i]
        else:
            feats = np.arange(d, dtype=np.int64)

        sub = X[seg][:, feats]                      # (n_seg, q)
        order = np.argsort(sub, axis=0)
        sv = np.take_along_axis(sub, order, axis=0)
        sy = y[seg][order]                          # labels in sorted order
        cum_pos = np.cumsum(sy, axis=0)

        nl = np.arange(1, n_seg, dtype=np.int64)[:, None]
        pos_l = cum_pos[:-1]
        neg_l = nl - pos_l
        nr = n_seg - nl
        pos_r = pos - pos_l
        neg_r = nr - pos_r
        # weighted child impurity: n_l*gini_l + n_r*gini_r, ints cast to
        # float exactly as the numba loop does scalar by scalar
        score = (nl - (pos_l * pos_l + neg_l * neg_l) / nl) + (
            nr - (pos_r * pos_r + neg_r * neg_r) / nr
        )
        valid = (sv[:-1] != sv[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
        score = np.where(valid, score, np.inf)

        best_score = np.inf
        best_f = -1
        best_thr = 0.0
        for fi in range(feats.shape[0]):
            col = score[:, fi]
            i = int(np.argmin(col))                 # first minimum
            s = col[i]
            if s < best_score:
                best_score = s
                best_f = int(feats[fi])
                thr = 0.5 * (sv[i, fi] + sv[i + 1, fi])
                if thr >= sv[i + 1, fi]:            # midpoint rounded up to
                    thr = sv[i, fi]                 # the right value: clamp
                best_thr = thr
        if best_f < 0:
            continue

        go_left = X[seg, best_f] <= best_thr
        idx[lo:hi] = np.concatenate([seg[go_left], seg[~go_left]])  # stable
        n_left = int(np.sum(go_left))
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lid
        right[node] = rid
        stack.append((rid, lo + n_left, hi, depth + 1))
        stack.append((lid, lo, lo + n_left, depth + 1))
    return feature, threshold, left, right, value, n_nodes


def tree_predict_value(feature, threshold, left, right, value, X):
    """Route rows of X to leaves; returns each leaf's class-1 fraction."""
    n = X.shape[0]
    node = np.zeros(n, np.int64)
    active = feature[node] >= 0
    while np.any(active):
        idx = np.nonzero(active)[0]
        f = feature[node[idx]]
        thr = threshold[node[idx]]
        go_left = X[idx, f] <= thr
        node[idx] = np.where(go_left, left[node[idx]], right[node[idx]])
        active[idx] = feature[node[idx]] >= 0
    return value[node]


def pegasos_train(X, y_signed, lam, order):
    """Pegasos SVM weight vector after visiting rows in the given order.

    X must already carry the bias column; y_signed is +-1. Learning rate at
    global step t is 1/(lam*t); no projection step.
    """
    n, d = X.shape
    w = np.zeros(d, np.float64)
    for t, i in enumerate(order, start=1):
        eta = 1.0 / (lam * t)
        margin = y_signed[i] * float(X[i] @ w)
        scale = 1.0 - eta * lam
        w *= scale
        if margin < 1.0:
            w += (eta * y_signed[i]) * X[i]
    return w
