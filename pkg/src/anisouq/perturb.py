"""Eigenspace perturbation of the Reynolds stress tensor.

The eigenvalues are shifted in the barycentric plane toward a limiting
state, the eigenvectors are optionally re-paired with the strain-rate
eigenvectors to extremize turbulent production, and the result is blended
with the baseline stress through a moderation factor.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dataset import FlowField
from .errors import InvalidInput
from .tensor import (
    CORNERS,
    K_FLOOR,
    Corner,
    anisotropy,
    eig_sym,
    from_barycentric,
    is_realizable,
    strain_rate,
    to_barycentric,
)

_EYE = np.eye(3)


class ProductionMode(str, enum.Enum):
    MAX = "max"
    MIN = "min"
    KEEP = "keep"


def _unit_interval(value, name):
    arr = np.asarray(value, dtype=float)
    if not np.all((arr >= 0.0) & (arr <= 1.0)):
        raise InvalidInput(f"{name} must lie in [0, 1]")
    return arr


@dataclass(frozen=True)
class PerturbSpec:
    """One perturbed state: target corner, shift, eigenvector mode, moderation."""

    target: Corner
    delta_b: float = 1.0
    production_mode: ProductionMode = ProductionMode.KEEP
    moderation_f: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "target", Corner(self.target))
        object.__setattr__(self, "production_mode", ProductionMode(self.production_mode))
        _unit_interval(self.delta_b, "delta_b")
        _unit_interval(self.moderation_f, "moderation_f")

    @property
    def label(self):
        if self.production_mode is ProductionMode.KEEP:
            return self.target.value
        return f"{self.target.value}_{self.production_mode.value}"


def production(tau, grad_u) -> np.ndarray:
    """Turbulent production ``P_k = -tau_ij du_i/dx_j``."""
    return -np.einsum("...ij,...ij->...", np.asarray(tau, dtype=float), np.asarray(grad_u, dtype=float))


def perturb_barycentric(points, target, delta_b) -> np.ndarray:
    """Convex shift ``x + delta_b (x_t - x)`` of barycentric points toward a corner."""
    delta = _unit_interval(delta_b, "delta_b")[..., None]
    x = np.asarray(points, dtype=float)
    corner = CORNERS[Corner(target)]
    return (1.0 - delta) * x + delta * corner


def delta_from_distance(points, target, p) -> np.ndarray:
    """Relative shift that moves each point an absolute distance ``p`` toward the corner.

    Clipped at the corner; zero for points already sitting on it.
    """
    p = _unit_interval(p, "p")
    dist = np.linalg.norm(CORNERS[Corner(target)] - np.asarray(points, dtype=float), axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = np.minimum(p / dist, 1.0)
    return np.where(dist < 1e-12, 0.0, delta)


def stress_from_eigen(values_a, vectors, k) -> np.ndarray:
    """``k (V diag(lambda) V^T + 2/3 I)``."""
    values_a = np.asarray(values_a, dtype=float)
    vectors = np.asarray(vectors, dtype=float)
    a = (vectors * values_a[..., None, :]) @ np.swapaxes(vectors, -1, -2)
    return np.asarray(k, dtype=float)[..., None, None] * (a + (2.0 / 3.0) * _EYE)


def align_eigenvectors(strain, values_a, k, mode) -> np.ndarray:
    """Eigenvector matrix for the perturbed stress.

    ``KEEP`` returns the strain-rate eigenvectors in descending-eigenvalue
    column order.  ``MAX``/``MIN`` return whichever of that order or its
    reverse gives the larger/smaller production against ``strain``; these
    two pairings bound production over all orthonormal alignments.
    """
    mode = ProductionMode(mode)
    strain = np.asarray(strain, dtype=float)
    vec = eig_sym(strain).vectors
    if mode is ProductionMode.KEEP:
        return vec
    rev = vec[..., ::-1]
    p_fwd = production(stress_from_eigen(values_a, vec, k), strain)
    p_rev = production(stress_from_eigen(values_a, rev, k), strain)
    use_rev = p_rev > p_fwd if mode is ProductionMode.MAX else p_rev < p_fwd
    return np.where(use_rev[..., None, None], rev, vec)


def reconstruct(tau_rans, k, a_star, f) -> np.ndarray:
    """Moderated stress ``tau + f [k (a* + 2/3 I) - tau]``."""
    f = _unit_interval(f, "moderation factor")
    tau_rans = np.asarray(tau_rans, dtype=float)
    target = np.asarray(k, dtype=float)[..., None, None] * (np.asarray(a_star, dtype=float) + (2.0 / 3.0) * _EYE)
    if f.ndim:
        f = f[..., None, None]
    return tau_rans + f * (target - tau_rans)


@dataclass
class PerturbedField:
    """Per-sample outcome of :func:`perturb_field`.

    Skipped samples (``degenerate`` turbulence or a ``nonrealizable``
    baseline) carry the baseline stress unchanged.
    """

    tau: np.ndarray
    tau_star: np.ndarray
    bary_before: np.ndarray
    bary_after: np.ndarray
    pk_before: np.ndarray
    pk_after: np.ndarray
    delta_b: np.ndarray
    degenerate: np.ndarray
    nonrealizable: np.ndarray

    def __len__(self):
        return len(self.pk_before)

    @property
    def flagged(self):
        return self.degenerate | self.nonrealizable


def perturb_field(field: FlowField, spec: PerturbSpec, p_field=None) -> PerturbedField:
    """Perturb the eddy-viscosity Reynolds stress of every sample.

    Parameters
    ----------
    field : FlowField
        RANS samples carrying ``k``, ``mu_t``, ``rho`` and the velocity gradient.
    spec : PerturbSpec
        Target corner, shift, eigenvector mode and moderation factor.
    p_field : array_like, optional
        Data-driven absolute barycentric shift per sample, in ``[0, 1]``.
        When given it replaces ``spec.delta_b``.

    Notes
    -----
    In ``KEEP`` mode the anisotropy keeps its own eigenvectors, so a zero
    shift returns the baseline stress.
    """
    grad_u = field.grad_U
    k = field.k
    n = len(field)
    tau = field.boussinesq_tau()
    tau_star = tau.copy()
    bary_before = np.full((n, 2), np.nan)
    bary_after = np.full((n, 2), np.nan)
    delta_out = np.zeros(n)

    degenerate = ~(k > K_FLOOR)
    ok = np.flatnonzero(~degenerate)
    nonrealizable = np.zeros(n, dtype=bool)
    if ok.size:
        a = anisotropy(tau[ok], k[ok])
        eig = eig_sym(a)
        x = to_barycentric(eig.values)
        bary_before[ok] = x
        bary_after[ok] = x
        good = is_realizable(x)
        nonrealizable[ok[~good]] = True

        idx = ok[good]
        x = x[good]
        if p_field is not None:
            p = np.broadcast_to(_unit_interval(p_field, "p"), (n,))[idx]
            delta = delta_from_distance(x, spec.target, p)
        else:
            delta = np.broadcast_to(_unit_interval(spec.delta_b, "delta_b"), (n,))[idx]
        x_star = perturb_barycentric(x, spec.target, delta)
        lam_star = from_barycentric(x_star)
        if spec.production_mode is ProductionMode.KEEP:
            vectors = eig.vectors[good]
        else:
            vectors = align_eigenvectors(strain_rate(grad_u[idx]), lam_star, k[idx], spec.production_mode)
        a_star = (vectors * lam_star[:, None, :]) @ np.swapaxes(vectors, -1, -2)
        tau_star[idx] = reconstruct(tau[idx], k[idx], a_star, spec.moderation_f)
        bary_after[idx] = x_star
        delta_out[idx] = delta

    return PerturbedField(
        tau=tau,
        tau_star=tau_star,
        bary_before=bary_before,
        bary_after=bary_after,
        pk_before=production(tau, grad_u),
        pk_after=production(tau_star, grad_u),
        delta_b=delta_out,
        degenerate=degenerate,
        nonrealizable=nonrealizable,
    )


def sweep_specs(delta_b=1.0, moderation_f=1.0, data_driven=False, mode_override=None):
    """The limiting-state sweep.

    Five states for a uniform shift (the 3C corner with a full shift is
    insensitive to eigenvector alignment); six for a data-driven shift, where
    3C is split into its maximum- and minimum-production variants.
    """
    states = [(Corner.ONE_C, ProductionMode.MAX), (Corner.ONE_C, ProductionMode.MIN),
              (Corner.TWO_C, ProductionMode.MAX), (Corner.TWO_C, ProductionMode.MIN)]
    if data_driven:
        states += [(Corner.THREE_C, ProductionMode.MAX), (Corner.THREE_C, ProductionMode.MIN)]
    else:
        states += [(Corner.THREE_C, ProductionMode.KEEP)]
    specs = {}
    for corner, mode in states:
        label = PerturbSpec(corner, 0.0, mode).label
        specs[label] = PerturbSpec(corner, delta_b, mode_override or mode, moderation_f)
    return specs
