"""Kernel-density extrapolation distance.

A product Gaussian kernel density of the training features is evaluated at
a query point and compared with the uniform density ``1/A`` over the
training bounding box::

    d = 1 - f / (f + 1/A)

``d`` near 0 means the query sits inside the training cloud; near 1 means the
model has to extrapolate.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientData, InvalidInput, UndefinedCorrelation
from .features import feature_index

DEFAULT_FEATURES = ("q8", "q3", "q7", "q2", "q1")
RANGE_FLOOR = 1e-12
_CHUNK = 2048


@dataclass(frozen=True)
class KdeModel:
    train: np.ndarray
    sigma: float
    volume: float
    feature_indices: tuple[int, ...]

    @property
    def n(self):
        return self.train.shape[0]

    @property
    def d(self):
        return self.train.shape[1]


def default_indices() -> tuple[int, ...]:
    return tuple(feature_index(name) for name in DEFAULT_FEATURES)


def fit_kde(train_features, feature_indices=None) -> KdeModel:
    """Fit the density model on the selected training feature columns.

    The bandwidth follows Scott's rule, ``sigma = s * n**(-1/(d+4))`` with
    ``s`` the mean population standard deviation of the selected features.
    ``A`` is the product of per-feature ranges, each floored at ``1e-12``.

    Parameters
    ----------
    train_features : array_like, shape (n, m)
    feature_indices : sequence of int, optional
        Columns to use.  Defaults to q8, q3, q7, q2, q1 when the input has the
        full 56 columns and to all columns otherwise.
    """
    X = np.asarray(train_features, dtype=float)
    if X.ndim != 2:
        raise InvalidInput("training features must be a 2-D array")
    if feature_indices is None:
        feature_indices = default_indices() if X.shape[1] == 56 else tuple(range(X.shape[1]))
    idx = tuple(int(i) for i in feature_indices)
    if not idx or any(i < 0 or i >= X.shape[1] for i in idx):
        raise InvalidInput(f"feature indices {idx} out of range for {X.shape[1]} columns")
    if X.shape[0] < 2:
        raise InsufficientData("the density model needs at least two training samples")
    M = X[:, idx]
    n, d = M.shape
    sigma = float(M.std(axis=0).mean()) * n ** (-1.0 / (d + 4))
    if not sigma > 0.0:
        raise InsufficientData("all selected features are constant; bandwidth would be zero")
    ranges = np.ptp(M, axis=0)
    if np.any(ranges < RANGE_FLOOR):
        warnings.warn("constant selected feature; its range is floored at 1e-12", RuntimeWarning, stacklevel=2)
    volume = float(np.prod(np.maximum(ranges, RANGE_FLOOR)))
    return KdeModel(M.copy(), sigma, volume, idx)


def _select(model: KdeModel, query):
    Q = np.asarray(query, dtype=float)
    single = Q.ndim == 1
    Q = np.atleast_2d(Q)
    if Q.shape[1] == model.d:
        pass
    elif Q.shape[1] > max(model.feature_indices):
        Q = Q[:, model.feature_indices]
    else:
        raise InvalidInput(f"query has {Q.shape[1]} columns; model uses {model.d}")
    return Q, single


def kde_density(model: KdeModel, query) -> np.ndarray | float:
    """Product Gaussian kernel density at each query point.

    ``query`` holds either the selected features or the full feature rows.
    """
    Q, single = _select(model, query)
    n, d = model.train.shape
    norm = 1.0 / (n * model.sigma**d * (2.0 * math.pi) ** (d / 2.0))
    out = np.empty(Q.shape[0])
    inv_two_s2 = 0.5 / model.sigma**2
    for start in range(0, Q.shape[0], _CHUNK):
        q = Q[start:start + _CHUNK]
        r2 = np.sum((q[:, None, :] - model.train[None, :, :]) ** 2, axis=-1)
        out[start:start + _CHUNK] = norm * np.exp(-r2 * inv_two_s2).sum(axis=1)
    return float(out[0]) if single else out


def kde_distance(model: KdeModel, query) -> np.ndarray | float:
    """Extrapolation distance in ``[0, 1]``."""
    f = np.asarray(kde_density(model, query))
    uniform = 1.0 / model.volume
    out = 1.0 - f / (f + uniform)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CorrelationReport:
    pearson_r: float
    n: int
    distance_mean: float
    distance_std: float
    error_mean: float
    error_std: float


def correlation_report(distances, abs_errors) -> CorrelationReport:
    """Pearson correlation between distances and absolute prediction errors."""
    x = np.asarray(distances, dtype=float).ravel()
    y = np.asarray(abs_errors, dtype=float).ravel()
    if x.shape != y.shape or x.size < 3:
        raise InvalidInput("correlation needs two equal-length vectors with at least 3 entries")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelation("zero variance input")
    r = float(xc @ yc) / math.sqrt(sxx * syy)
    return CorrelationReport(max(-1.0, min(1.0, r)), int(x.size), float(x.mean()), float(x.std()),
                             float(y.mean()), float(y.std()))
