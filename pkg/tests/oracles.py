"""Independent reference implementations used only by the tests.

Each oracle is written as directly as possible (loops, closed forms) and
shares no code with the package.
"""
import math

import numpy as np


def split_oracle(X, y, features):
    """Exhaustive search over every (feature, midpoint threshold) pair.

    Every candidate partition is scored from scratch by masking.  Ties within
    ``1e-9`` of the node's total squared deviation go to the lowest feature
    index, then the lowest threshold.  Returns ``(feature, threshold, sse)``
    or None.
    """
    y = np.asarray(y, dtype=float)
    total = float(np.sum((y - y.mean()) ** 2))
    candidates = []
    for f in sorted(features):
        values = np.unique(X[:, f])
        for lo, hi in zip(values[:-1], values[1:]):
            thr = 0.5 * (lo + hi)
            if not lo <= thr < hi:
                thr = lo
            mask = X[:, f] <= thr
            left, right = y[mask], y[~mask]
            sse = float(np.sum((left - left.mean()) ** 2) + np.sum((right - right.mean()) ** 2))
            candidates.append((f, float(thr), sse))
    if not candidates:
        return None
    cutoff = min(c[2] for c in candidates) + 1e-9 * total
    return next(c for c in candidates if c[2] <= cutoff)


def tree_oracle(X, y, depth, max_depth, min_split):
    """Recursive exhaustive-search tree as nested tuples.

    Leaf: ``("leaf", value)``; node: ``("node", f, thr, left, right)``.
    """
    if len(y) < min_split or depth >= max_depth or max(y) == min(y):
        return ("leaf", float(np.mean(y)))
    split = split_oracle(X, y, range(X.shape[1]))
    if split is None:
        return ("leaf", float(np.mean(y)))
    f, thr, _ = split
    mask = X[:, f] <= thr
    return ("node", f, thr,
            tree_oracle(X[mask], y[mask], depth + 1, max_depth, min_split),
            tree_oracle(X[~mask], y[~mask], depth + 1, max_depth, min_split))


def kde_density_loop(train, query, sigma):
    n, d = len(train), len(train[0])
    total = 0.0
    for i in range(n):
        prod = 1.0
        for j in range(d):
            t = (query[j] - train[i][j]) / sigma
            prod *= math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)
        total += prod
    return total / (n * sigma**d)


def scott_sigma(train):
    n, d = len(train), len(train[0])
    stds = []
    for j in range(d):
        col = [row[j] for row in train]
        m = sum(col) / n
        stds.append(math.sqrt(sum((c - m) ** 2 for c in col) / n))
    return (sum(stds) / d) * n ** (-1.0 / (d + 4))


def bary_point(lam):
    """Barycentric coordinates by explicit weights and the fixed corners.

    Eigenvalues are those of ``a = tau/k - 2/3 I`` (range -2/3 .. 4/3).
    """
    l1, l2, l3 = lam
    c1, c2, c3 = 0.5 * (l1 - l2), l2 - l3, 1.5 * l3 + 1
    return (c1 * 1.0 + c2 * 0.0 + c3 * 0.5, c3 * math.sqrt(3) / 2)


def channel_exact(y, dpdx, mu, rho, amp, delta):
    """U for tau12 = amp * sin(pi y / delta): laminar part plus the integral of rho tau12 / mu."""
    lam = (-dpdx / mu) * (delta * y - 0.5 * y * y)
    return lam + (rho * amp / mu) * (delta / math.pi) * (1 - np.cos(math.pi * y / delta))
