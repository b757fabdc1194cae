"""Compiled CART builder and tree traversal.

Trees are stored as flat arrays indexed by node id. A node with
``feature == -1`` is a leaf.
"""

import numpy as np
from numba import njit

# ties within this margin keep the earlier (feature, threshold) candidate
TIE_EPS = 1e-12


@njit(cache=True, nogil=True)
def build_tree(X, y, w, max_depth, min_samples_split, max_features, seed):
    """Grow one tree on rows ``X`` with class ``y`` (0/1) and integer weights ``w``.

    ``max_depth < 0`` means unbounded. When ``max_features < n_features`` the
    candidate features at each node are a fresh random subset drawn from a
    generator seeded with ``seed``; otherwise every feature is scanned in
    index order.
    """
    np.random.seed(seed)
    m, d = X.shape
    cap = 2 * m + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    counts = np.zeros((cap, 2), np.int64)
    decrease = np.zeros(cap, np.float64)
    importances = np.zeros(d, np.float64)

    idx = np.arange(m)
    buf = np.empty(m, np.int64)
    feats = np.arange(d)
    n_try = min(max_features, d)
    subsample = max_features < d

    total_w = 0
    for i in range(m):
        total_w += w[i]

    st_node = np.empty(cap, np.int64)
    st_lo = np.empty(cap, np.int64)
    st_hi = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    sp = 0
    st_node[0] = 0
    st_lo[0] = 0
    st_hi[0] = m
    st_depth[0] = 0
    sp = 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        node = st_node[sp]
        lo = st_lo[sp]
        hi = st_hi[sp]
        depth = st_depth[sp]

        n0 = 0
        n1 = 0
        for k in range(lo, hi):
            r = idx[k]
            if y[r] == 1:
                n1 += w[r]
            else:
                n0 += w[r]
        counts[node, 0] = n0
        counts[node, 1] = n1
        n = n0 + n1
        if n0 == 0 or n1 == 0:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue
        if n < min_samples_split:
            continue

        parent = 1.0 - (n0 / n) ** 2 - (n1 / n) ** 2
        if subsample:
            for k in range(n_try):
                j = k + np.random.randint(0, d - k)
                tmp = feats[k]
                feats[k] = feats[j]
                feats[j] = tmp

        best_dec = 0.0
        best_f = -1
        best_t = 0.0
        seg = idx[lo:hi]
        for kf in range(n_try):
            f = feats[kf] if subsample else kf
            vals = X[seg, f]
            order = np.argsort(vals, kind="mergesort")
            l0 = 0
            l1 = 0
            for k in range(hi - lo - 1):
                r = seg[order[k]]
                if y[r] == 1:
                    l1 += w[r]
                else:
                    l0 += w[r]
                a = vals[order[k]]
                b = vals[order[k + 1]]
                if not a < b:
                    continue
                nl = l0 + l1
                r0 = n0 - l0
                r1 = n1 - l1
                nr = r0 + r1
                child = (nl - (l0 * l0 + l1 * l1) / nl + nr - (r0 * r0 + r1 * r1) / nr) / n
                dec = parent - child
                if dec > best_dec + TIE_EPS:
                    best_dec = dec
                    best_f = f
                    t = (a + b) / 2.0
                    if not t < b:
                        t = a
                    best_t = t

        if best_f < 0:
            continue

        # stable partition of idx[lo:hi] around the threshold
        nl_rows = 0
        for k in range(lo, hi):
            if X[idx[k], best_f] <= best_t:
                buf[nl_rows] = idx[k]
                nl_rows += 1
        p = nl_rows
        for k in range(lo, hi):
            if not X[idx[k], best_f] <= best_t:
                buf[p] = idx[k]
                p += 1
        for k in range(hi - lo):
            idx[lo + k] = buf[k]

        feature[node] = best_f
        threshold[node] = best_t
        decrease[node] = best_dec
        importances[best_f] += (n / total_w) * best_dec
        li = n_nodes
        ri = n_nodes + 1
        n_nodes += 2
        left[node] = li
        right[node] = ri

        st_node[sp] = ri
        st_lo[sp] = lo + nl_rows
        st_hi[sp] = hi
        st_depth[sp] = depth + 1
        sp += 1
        st_node[sp] = li
        st_lo[sp] = lo
        st_hi[sp] = lo + nl_rows
        st_depth[sp] = depth + 1
        sp += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        counts[:n_nodes].copy(),
        decrease[:n_nodes].copy(),
        importances,
    )


@njit(cache=True, nogil=True)
def apply_tree(X, feature, threshold, left, right):
    """Leaf id reached by each row of ``X``."""
    out = np.empty(X.shape[0], np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out
