"""Rotation-invariant input features for the perturbation-magnitude regressor.

The 56 features are, in this fixed order, the 47 trace invariants of the
normalized strain rate, rotation rate, pressure gradient and TKE gradient
(``inv00`` .. ``inv46``) followed by nine physical scalars (``q1`` .. ``q9``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dataset import FlowField
from .errors import DegenerateTurbulence, InvalidInput
from .tensor import rotation_rate, strain_rate

INVARIANT_NAMES = tuple(f"inv{i:02d}" for i in range(47))
PHYSICAL_NAMES = tuple(f"q{i}" for i in range(1, 10))
FEATURE_NAMES = INVARIANT_NAMES + PHYSICAL_NAMES
N_FEATURES = len(FEATURE_NAMES)


def feature_index(name: str) -> int:
    try:
        return FEATURE_NAMES.index(name)
    except ValueError:
        raise InvalidInput(f"unknown feature {name!r}") from None


def normalize(alpha, beta):
    """``alpha / (|alpha| + |beta|)``, with ``0/0`` taken as 0."""
    alpha = np.asarray(alpha, dtype=float)
    denom = np.abs(alpha) + np.abs(np.asarray(beta, dtype=float))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = alpha / denom
    return np.where(denom > 0.0, out, 0.0)


def _norm(t, ndim):
    axes = tuple(range(-ndim, 0))
    return np.sqrt(np.sum(np.square(t), axis=axes))


def normalize_tensor(t, beta, ndim: int):
    """Scale a vector (``ndim=1``) or tensor (``ndim=2``) by ``|t| + |beta|``.

    ``|t|`` is the Euclidean/Frobenius norm, which keeps the result
    frame-independent.
    """
    t = np.asarray(t, dtype=float)
    denom = _norm(t, ndim) + np.abs(np.asarray(beta, dtype=float))
    denom = denom.reshape(denom.shape + (1,) * ndim)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = t / denom
    return np.where(denom > 0.0, out, 0.0)


def antisymmetric_lift(v) -> np.ndarray:
    """``(A_v)_ij = -eps_ijk v_k`` for vectors ``v`` of shape ``(..., 3)``."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


class RawTensors(NamedTuple):
    s_hat: np.ndarray
    omega_hat: np.ndarray
    grad_p_hat: np.ndarray
    grad_k_hat: np.ndarray


def raw_tensors(field: FlowField) -> RawTensors:
    """Normalized strain rate, rotation rate, pressure gradient and TKE gradient."""
    omega = field.omega
    if np.any(~(omega > 0.0)):
        raise DegenerateTurbulence("specific dissipation rate must be positive")
    grad_u = field.grad_U
    s = strain_rate(grad_u)
    w = rotation_rate(grad_u)
    convection = np.einsum("nj,nij->ni", field.U, grad_u)
    k = np.clip(field.k, 0.0, None)
    return RawTensors(
        normalize_tensor(s, omega, 2),
        normalize_tensor(w, _norm(w, 2), 2),
        normalize_tensor(field.grad_p, field.rho * _norm(convection, 1), 1),
        normalize_tensor(field.grad_k, omega * np.sqrt(k), 1),
    )


def _tr(*mats):
    prod = mats[0]
    for m in mats[1:]:
        prod = prod @ m
    return np.trace(prod, axis1=-2, axis2=-1)


def invariant_basis(s_hat, omega_hat, grad_p_hat, grad_k_hat) -> np.ndarray:
    """The 47 trace invariants of one symmetric and three antisymmetric tensors.

    Vector inputs are lifted with :func:`antisymmetric_lift`.  Returns an
    array of shape ``(..., 47)`` in the order of :data:`INVARIANT_NAMES`.
    """
    S = np.asarray(s_hat, dtype=float)
    W = np.asarray(omega_hat, dtype=float)
    P = antisymmetric_lift(grad_p_hat)
    K = antisymmetric_lift(grad_k_hat)
    S2 = S @ S
    out = [_tr(S2), _tr(S2, S)]
    out += [_tr(W, W), _tr(P, P), _tr(K, K)]
    out += [_tr(W, P), _tr(W, K), _tr(P, K)]
    for A in (W, P, K):
        A2 = A @ A
        out += [_tr(A2, S), _tr(A2, S2), _tr(A2, S, A, S2)]
    for A, B in ((W, P), (W, K), (P, K)):
        A2 = A @ A
        B2 = B @ B
        out += [
            _tr(A, B, S), _tr(A, B, S2),
            _tr(A2, B, S), _tr(A2, B, S2), _tr(A2, S, B, S2),
            _tr(B2, A, S), _tr(B2, A, S2), _tr(B2, S, A, S2),
        ]
    out += [
        _tr(W, P, K), _tr(W, P, K, S), _tr(W, K, P, S),
        _tr(W, P, K, S2), _tr(W, K, P, S2), _tr(W, P, S, K, S2),
    ]
    return np.stack(out, axis=-1)


def physical_features(field: FlowField, tau=None) -> np.ndarray:
    """The nine physical scalars ``q1`` .. ``q9``, shape ``(n, 9)``.

    ``tau`` defaults to the field's ``tau_*`` columns when present and to the
    eddy-viscosity stress otherwise; it enters the production term (q6) and
    the stress norm (q9).
    """
    omega = field.omega
    if np.any(~(omega > 0.0)):
        raise DegenerateTurbulence("specific dissipation rate must be positive")
    d = field.d
    grad_u = field.grad_U
    if tau is None:
        tau = field.tau if field.has_tau else field.boussinesq_tau()
    U = field.U
    k = np.clip(field.k, 0.0, None)
    s_norm = _norm(strain_rate(grad_u), 2)
    w_norm = _norm(rotation_rate(grad_u), 2)
    nu = field.mu / field.rho
    uu = np.einsum("ni,ni->n", U, U)
    production = -np.einsum("nij,nij->n", tau, grad_u)

    q1 = normalize(0.5 * (w_norm**2 - s_norm**2), s_norm**2)
    q2 = normalize(k, 0.5 * uu)
    q3 = np.minimum(np.sqrt(k) * d / (50.0 * nu), 2.0)
    q4 = normalize(np.einsum("ni,ni->n", U, field.grad_p), _norm(field.grad_p, 1) * np.sqrt(uu))
    # (1/omega) / (1/omega + 1/|S|), written without the 1/|S| singularity
    q5 = s_norm / (s_norm + omega)
    q6 = normalize(production, k * omega)
    q7 = field.Ma
    q8 = normalize(field.mu_t, field.mu)
    q9 = normalize(_norm(tau, 2), k)
    return np.column_stack([q1, q2, q3, q4, q5, q6, q7, q8, q9])


def feature_matrix(field: FlowField) -> np.ndarray:
    """Full ``(n, 56)`` feature matrix of a RANS field."""
    if len(field) == 0:
        return np.empty((0, N_FEATURES))
    inv = invariant_basis(*raw_tensors(field))
    return np.hstack([inv, physical_features(field)])


@dataclass
class ScalerStats:
    """Per-feature mean and population standard deviation of training data."""

    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.mean.size:
            raise InvalidInput(f"expected {self.mean.size} features, got shape {X.shape}")
        return (X - self.mean) / self.std


def fit_scaler(X) -> ScalerStats:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InvalidInput("standardization needs a non-empty 2-D sample matrix")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    # spread at round-off level is treated as constant
    constant = np.ptp(X, axis=0) <= 1e-12 * np.maximum(1.0, np.max(np.abs(X), axis=0))
    mean = np.where(constant, X[0], mean)
    std = np.where(constant | (std == 0.0), 1.0, std)
    return ScalerStats(mean, std, constant)


def standardize(X, stats: ScalerStats | None = None):
    """Remove the mean and scale to unit variance.

    Without ``stats`` the statistics are fitted on ``X``; with ``stats`` they
    are only applied.  Constant features keep ``std = 1`` and are flagged in
    ``stats.constant``.

    Returns
    -------
    Z : numpy.ndarray
    stats : ScalerStats
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InvalidInput("standardization needs a non-empty 2-D sample matrix")
    if stats is None:
        stats = fit_scaler(X)
    return stats.transform(X), stats
