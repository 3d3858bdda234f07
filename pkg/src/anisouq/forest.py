"""Random-forest regression written from scratch.

CART regression trees split on the (feature, threshold) pair with the
smallest summed squared deviation of the two children.  Each tree sees a
bootstrap resample of the training set and a fresh random feature subset at
every node.

Randomness
----------
Tree ``i`` of a forest with seed ``s`` draws from a PCG64 bit generator
seeded with ``SeedSequence([s, i])``.  Only the raw 64-bit output stream is
consumed (bootstrap indices are ``raw % n``, feature subsets come from a
partial Fisher-Yates shuffle), so a model is reproducible on any platform and
NumPy version and independent of how trees are scheduled across threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidInput, SchemaMismatch
from .features import ScalerStats, fit_scaler

FORMAT_VERSION = "anisouq-forest 1"
_TIE_RTOL = 1e-9


def worker_count(n_jobs=None) -> int:
    """Worker threads: ``n_jobs`` if given, else ``$ANISOUQ_THREADS``, else 1."""
    if n_jobs is None:
        n_jobs = int(os.environ.get("ANISOUQ_THREADS", "1") or 1)
    return max(1, int(n_jobs))


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 30
    max_depth: int | None = 15
    min_samples_split: int = 10
    max_features: int | None = 7

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvalidInput("n_trees must be at least 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise InvalidInput("max_depth must be non-negative")
        if self.min_samples_split < 2:
            raise InvalidInput("min_samples_split must be at least 2")
        if self.max_features is not None and self.max_features < 1:
            raise InvalidInput("max_features must be at least 1")


class SplitRng:
    """Portable random source built on the raw PCG64 output stream."""

    def __init__(self, seed: int, stream: int = 0):
        if seed < 0 or stream < 0:
            raise InvalidInput("seeds must be non-negative")
        self._bits = np.random.PCG64(np.random.SeedSequence([int(seed), int(stream)]))

    def integers(self, n: int, size: int) -> np.ndarray:
        """``size`` draws from ``0 .. n-1`` with replacement."""
        raw = self._bits.random_raw(size)
        return (raw % np.uint64(n)).astype(np.intp)

    def sample(self, n: int, k: int) -> np.ndarray:
        """``k`` distinct values from ``0 .. n-1`` (partial Fisher-Yates)."""
        pool = np.arange(n)
        raw = self._bits.random_raw(k)
        for i in range(k):
            j = i + int(raw[i] % np.uint64(n - i))
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def permutation(self, n: int) -> np.ndarray:
        return self.sample(n, n)


@dataclass
class TreeNode:
    """Node view: ``feature == -1`` marks a leaf."""

    feature: int
    threshold: float
    left: int
    right: int
    value: float
    count: int

    @property
    def is_leaf(self):
        return self.feature < 0


@dataclass
class Tree:
    """Regression tree stored as preorder node arrays."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray

    def __len__(self):
        return len(self.feature)

    def node(self, i) -> TreeNode:
        return TreeNode(int(self.feature[i]), float(self.threshold[i]), int(self.left[i]),
                        int(self.right[i]), float(self.value[i]), int(self.count[i]))

    @property
    def depth(self) -> int:
        depth = np.zeros(len(self), dtype=int)
        for i in range(len(self)):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            inner = feat >= 0
            if not inner.any():
                return node
            r = rows[inner]
            n = node[inner]
            go_left = X[r, feat[inner]] <= self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def used_features(self) -> set[int]:
        return {int(f) for f in self.feature if f >= 0}


def best_split(X, y, features):
    """Best variance-reducing split over ``features``.

    Ties (within a relative ``1e-9`` of the node's total squared deviation)
    go to the lowest feature index, then the lowest threshold.  Thresholds
    are midpoints between consecutive distinct values.

    Returns
    -------
    tuple or None
        ``(feature, threshold, children_sse)``, or None if every candidate
        feature is constant.
    """
    n = len(y)
    yc = y - y.mean()
    total = float(yc @ yc)
    nl = np.arange(1, n, dtype=float)
    candidates = []
    for f in sorted(int(f) for f in features):
        x = X[:, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        valid = xs[1:] > xs[:-1]
        if not valid.any():
            continue
        ys = yc[order]
        cs = np.cumsum(ys)
        cs2 = np.cumsum(ys * ys)
        sl, sl2 = cs[:-1], cs2[:-1]
        sr, sr2 = cs[-1] - sl, cs2[-1] - sl2
        sse = (sl2 - sl * sl / nl) + (sr2 - sr * sr / (n - nl))
        candidates.append((f, xs, np.where(valid, sse, np.inf)))
    if not candidates:
        return None
    lowest = min(float(c[2].min()) for c in candidates)
    cutoff = lowest + _TIE_RTOL * total
    for f, xs, sse in candidates:
        hit = np.flatnonzero(sse <= cutoff)
        if hit.size:
            i = int(hit[0])
            thr = 0.5 * (xs[i] + xs[i + 1])
            if not xs[i] <= thr < xs[i + 1]:
                thr = xs[i]
            return f, float(thr), float(max(sse[i], 0.0))
    return None  # pragma: no cover


def fit_tree(X, y, params: ForestParams, rng: SplitRng) -> Tree:
    """Grow one regression tree (no bootstrap; see :func:`fit_forest`).

    A node becomes a leaf when it reaches ``max_depth``, holds fewer than
    ``min_samples_split`` samples, has constant targets, or none of its
    drawn features can be split.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[0] != y.shape[0]:
        raise InvalidInput("fit_tree needs a non-empty 2-D X with one target per row")
    n_features = X.shape[1]
    m = n_features if params.max_features is None else min(params.max_features, n_features)

    feature, threshold, left, right, value, count = [], [], [], [], [], []
    # (sample indices, depth, parent index or -1)
    stack = [(np.arange(X.shape[0]), 0, -1)]
    while stack:
        idx, depth, parent = stack.pop()
        me = len(feature)
        if parent >= 0 and left[parent] != me:
            right[parent] = me
        yn = y[idx]
        constant = np.ptp(yn) == 0.0
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(yn[0]) if constant else float(yn.mean()))
        count.append(int(idx.size))
        if constant or idx.size < params.min_samples_split or (
            params.max_depth is not None and depth >= params.max_depth
        ):
            continue
        drawn = rng.sample(n_features, m)
        split = best_split(X[idx], yn, drawn)
        if split is None:
            continue
        f, thr, _ = split
        go_left = X[idx, f] <= thr
        feature[me] = f
        threshold[me] = thr
        left[me] = me + 1
        stack.append((idx[~go_left], depth + 1, me))
        stack.append((idx[go_left], depth + 1, me))
    return Tree(
        np.array(feature, dtype=np.intp), np.array(threshold), np.array(left, dtype=np.intp),
        np.array(right, dtype=np.intp), np.array(value), np.array(count, dtype=np.intp),
    )


@dataclass
class ForestModel:
    trees: list[Tree]
    params: ForestParams
    scaler: ScalerStats
    seed: int
    n_features: int
    feature_names: tuple[str, ...] = ()
    format_version: str = FORMAT_VERSION

    def __post_init__(self):
        if len(self.trees) != self.params.n_trees:
            raise InvalidInput("tree count does not match n_trees")

    def truncated(self, n_trees: int) -> "ForestModel":
        """The same forest restricted to its first ``n_trees`` trees."""
        return replace(self, trees=self.trees[:n_trees], params=replace(self.params, n_trees=n_trees))


def _fit_one(X, y, params, seed, i):
    rng = SplitRng(seed, i)
    boot = rng.integers(X.shape[0], X.shape[0])
    return fit_tree(X[boot], y[boot], params, rng)


def fit_forest(X, y, params: ForestParams = ForestParams(), seed: int = 0,
               feature_names: Sequence[str] = (), n_jobs=None) -> ForestModel:
    """Standardize ``X`` and grow ``params.n_trees`` bootstrapped trees."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[0] != y.shape[0]:
        raise InvalidInput("fit_forest needs a non-empty 2-D X with one target per row")
    scaler = fit_scaler(X)
    Z = scaler.transform(X)
    workers = worker_count(n_jobs)
    indices = range(params.n_trees)
    if workers > 1 and params.n_trees > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(lambda i: _fit_one(Z, y, params, seed, i), indices))
    else:
        trees = [_fit_one(Z, y, params, seed, i) for i in indices]
    return ForestModel(trees, params, scaler, int(seed), X.shape[1], tuple(feature_names))


def tree_predictions(model: ForestModel, X) -> np.ndarray:
    """Per-tree predictions, shape ``(n_trees, n_samples)``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise SchemaMismatch(f"model expects {model.n_features} features, got shape {X.shape}")
    Z = model.scaler.transform(X)
    return np.stack([t.predict(Z) for t in model.trees])


def predict(model: ForestModel, X, clip: bool = False) -> np.ndarray:
    """Mean of per-tree leaf values; ``clip`` bounds the result to ``[0, 1]``."""
    per_tree = tree_predictions(model, X)
    # exact when every tree agrees (e.g. a constant target)
    y = np.where(per_tree.min(axis=0) == per_tree.max(axis=0), per_tree[0], per_tree.mean(axis=0))
    return np.clip(y, 0.0, 1.0) if clip else y


def rmse(y_hat, y) -> float:
    y_hat = np.asarray(y_hat, dtype=float)
    y = np.asarray(y, dtype=float)
    if y_hat.shape != y.shape or y.size == 0:
        raise InvalidInput("rmse needs two non-empty arrays of equal shape")
    return float(np.sqrt(np.mean((y_hat - y) ** 2)))


def permutation_importance(model: ForestModel, X, y, n_repeats: int = 5, seed: int = 0) -> np.ndarray:
    """RMSE increase when one feature column is shuffled, averaged over repeats."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] < 2:
        raise InvalidInput("permutation importance needs at least two samples")
    base = rmse(predict(model, X), y)
    out = np.zeros(X.shape[1])
    for j in range(X.shape[1]):
        rng = SplitRng(seed, j)
        scores = []
        for _ in range(n_repeats):
            Xp = X.copy()
            Xp[:, j] = X[rng.permutation(X.shape[0]), j]
            scores.append(rmse(predict(model, Xp), y) - base)
        out[j] = np.mean(scores)
    return out


# model files

def _floats(values):
    return " ".join(map(repr, np.asarray(values, dtype=float).tolist()))


def save_model(path, model: ForestModel):
    p = model.params
    lines = [
        model.format_version,
        f"n_features {model.n_features}",
        f"seed {model.seed}",
        f"n_trees {p.n_trees}",
        f"max_depth {'none' if p.max_depth is None else p.max_depth}",
        f"min_samples_split {p.min_samples_split}",
        f"max_features {'none' if p.max_features is None else p.max_features}",
        "feature_names " + " ".join(model.feature_names),
        "scaler_mean " + _floats(model.scaler.mean),
        "scaler_std " + _floats(model.scaler.std),
        "scaler_constant " + " ".join("1" if c else "0" for c in model.scaler.constant),
    ]
    for i, tree in enumerate(model.trees):
        lines.append(f"tree {i} {len(tree)}")
        for j in range(len(tree)):
            if tree.feature[j] >= 0:
                lines.append(f"N {tree.feature[j]} {float(tree.threshold[j])!r} {tree.count[j]}")
            else:
                lines.append(f"L {float(tree.value[j])!r} {tree.count[j]}")
    lines.append("end")
    with open(os.fspath(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _rebuild(records):
    """Decode preorder ``N``/``L`` records into node arrays."""
    n = len(records)
    feature = np.full(n, -1, dtype=np.intp)
    threshold = np.zeros(n)
    left = np.full(n, -1, dtype=np.intp)
    right = np.full(n, -1, dtype=np.intp)
    value = np.zeros(n)
    count = np.zeros(n, dtype=np.intp)
    pending = []  # inner nodes still waiting for their right child
    for i, rec in enumerate(records):
        if pending:
            parent, seen_left = pending[-1]
            if not seen_left:
                left[parent] = i
                pending[-1] = (parent, True)
            else:
                right[parent] = i
                pending.pop()
        if rec[0] == "N":
            feature[i], threshold[i], count[i] = int(rec[1]), float(rec[2]), int(rec[3])
            pending.append((i, False))
        elif rec[0] == "L":
            value[i], count[i] = float(rec[1]), int(rec[2])
        else:
            raise SchemaMismatch(f"bad node record {' '.join(rec)!r}")
    if pending:
        raise SchemaMismatch("truncated tree encoding")
    # inner-node values are not stored; fill with the count-weighted child mean
    for i in range(n - 1, -1, -1):
        if feature[i] >= 0:
            nl, nr = count[left[i]], count[right[i]]
            value[i] = (value[left[i]] * nl + value[right[i]] * nr) / max(nl + nr, 1)
    return Tree(feature, threshold, left, right, value, count)


def load_model(path) -> ForestModel:
    with open(os.fspath(path), encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != FORMAT_VERSION:
        found = lines[0].strip() if lines else "<empty>"
        raise SchemaMismatch(f"model format {found!r}, expected {FORMAT_VERSION!r}")
    head = {}
    pos = 1
    while pos < len(lines) and not lines[pos].startswith("tree "):
        key, _, rest = lines[pos].partition(" ")
        head[key] = rest
        pos += 1

    def opt_int(text):
        return None if text == "none" else int(text)

    try:
        params = ForestParams(int(head["n_trees"]), opt_int(head["max_depth"]),
                              int(head["min_samples_split"]), opt_int(head["max_features"]))
        scaler = ScalerStats(
            np.array(head["scaler_mean"].split(), dtype=float),
            np.array(head["scaler_std"].split(), dtype=float),
            np.array([c == "1" for c in head["scaler_constant"].split()], dtype=bool),
        )
        n_features = int(head["n_features"])
        seed = int(head["seed"])
        names = tuple(head.get("feature_names", "").split())
    except (KeyError, ValueError) as exc:
        raise SchemaMismatch(f"corrupt model header: {exc}") from None

    trees = []
    while pos < len(lines) and lines[pos].startswith("tree "):
        n_nodes = int(lines[pos].split()[2])
        records = [lines[pos + 1 + j].split() for j in range(n_nodes)]
        trees.append(_rebuild(records))
        pos += 1 + n_nodes
    if pos >= len(lines) or lines[pos].strip() != "end":
        raise SchemaMismatch("model file truncated")
    return ForestModel(trees, params, scaler, seed, n_features, names)


# scenario studies

@dataclass
class ScenarioResult:
    held_out: str
    train_cases: tuple[str, ...]
    params: ForestParams
    n_trees: int
    train_rmse: float
    test_rmse: float
    n_train: int
    n_test: int


def _stack_cases(cases, names):
    X = np.vstack([cases[c][0] for c in names])
    y = np.concatenate([cases[c][1] for c in names])
    return X, y


def sweep(grid: Sequence[ForestParams], cases: Mapping[str, tuple], seed: int = 0,
          tree_counts: Sequence[int] | None = None, n_jobs=None) -> list[ScenarioResult]:
    """Leave-one-case-out RMSE for every grid point.

    ``cases`` maps a case id to its ``(X, y)``.  For each held-out case and
    grid point a forest is trained on the remaining cases.  With
    ``tree_counts`` the forest is additionally evaluated on its first ``n``
    trees for each count (trees are seeded independently, so a prefix is
    exactly the smaller forest), giving RMSE-versus-ensemble-size curves.
    """
    names = list(cases)
    if len(names) < 2:
        raise InvalidInput("a leave-one-out study needs at least two cases")
    rows = []
    for held in names:
        train_names = tuple(c for c in names if c != held)
        X_tr, y_tr = _stack_cases(cases, train_names)
        X_te, y_te = cases[held]
        for params in grid:
            model = fit_forest(X_tr, y_tr, params, seed, n_jobs=n_jobs)
            counts = sorted({n for n in (tree_counts or ()) if n <= params.n_trees} | {params.n_trees})
            tr_all = tree_predictions(model, X_tr)
            te_all = tree_predictions(model, X_te)
            for n in counts:
                rows.append(ScenarioResult(
                    held, train_names, params, n,
                    rmse(tr_all[:n].mean(axis=0), y_tr), rmse(te_all[:n].mean(axis=0), y_te),
                    len(y_tr), len(y_te),
                ))
    return rows


def leave_one_case_out(cases: Mapping[str, tuple], params: ForestParams = ForestParams(),
                       seed: int = 0, n_jobs=None) -> list[ScenarioResult]:
    """One scenario per case: train on all others, test on the held-out one."""
    return sweep([params], cases, seed=seed, n_jobs=n_jobs)
