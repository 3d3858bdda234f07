"""Symmetric 3x3 tensor algebra and the barycentric anisotropy map.

Tensors are plain ``numpy`` arrays with trailing shape ``(3, 3)``; any
leading batch dimensions are carried through every function.  The six
independent components of a symmetric tensor are ordered
``xx, yy, zz, xy, xz, yz`` wherever they appear flattened.
"""
from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np

from .errors import DegenerateTurbulence, InvalidInput, OutsideTriangle

__all__ = [
    "Corner",
    "CORNERS",
    "EigenDecomp",
    "K_FLOOR",
    "REALIZABILITY_TOL",
    "TENSOR_COMPONENTS",
    "anisotropy",
    "bary_weights",
    "boussinesq_stress",
    "eig_sym",
    "from_barycentric",
    "is_realizable",
    "point_weights",
    "rotation_rate",
    "strain_rate",
    "sym_components",
    "sym_tensor",
    "to_barycentric",
]

TENSOR_COMPONENTS = ("xx", "yy", "zz", "xy", "xz", "yz")
_COMPONENT_INDEX = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))

K_FLOOR = 1e-12
REALIZABILITY_TOL = 1e-9
_SQRT3_2 = np.sqrt(3.0) / 2.0


class Corner(str, enum.Enum):
    """Limiting states of turbulence (corners of the barycentric triangle)."""

    ONE_C = "1C"
    TWO_C = "2C"
    THREE_C = "3C"

    @property
    def point(self) -> np.ndarray:
        return CORNERS[self].copy()


CORNERS = {
    Corner.ONE_C: np.array([1.0, 0.0]),
    Corner.TWO_C: np.array([0.0, 0.0]),
    Corner.THREE_C: np.array([0.5, _SQRT3_2]),
}


class EigenDecomp(NamedTuple):
    """Eigenvalues (descending) and matching eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


def sym_tensor(xx, yy, zz, xy, xz, yz) -> np.ndarray:
    """Assemble symmetric tensors from their six independent components."""
    xx, yy, zz, xy, xz, yz = np.broadcast_arrays(
        *(np.asarray(c, dtype=float) for c in (xx, yy, zz, xy, xz, yz))
    )
    out = np.empty(xx.shape + (3, 3))
    for (i, j), c in zip(_COMPONENT_INDEX, (xx, yy, zz, xy, xz, yz)):
        out[..., i, j] = c
        out[..., j, i] = c
    return out


def sym_components(t) -> np.ndarray:
    """Six independent components (``xx, yy, zz, xy, xz, yz``) of ``t``."""
    t = np.asarray(t, dtype=float)
    return np.stack([t[..., i, j] for i, j in _COMPONENT_INDEX], axis=-1)


def strain_rate(grad_u) -> np.ndarray:
    """Symmetric part of a velocity gradient ``grad_u[..., i, j] = du_i/dx_j``."""
    g = np.asarray(grad_u, dtype=float)
    return 0.5 * (g + np.swapaxes(g, -1, -2))


def rotation_rate(grad_u) -> np.ndarray:
    """Antisymmetric part of a velocity gradient."""
    g = np.asarray(grad_u, dtype=float)
    return 0.5 * (g - np.swapaxes(g, -1, -2))


def boussinesq_stress(grad_u, k, nu_t) -> np.ndarray:
    """Specific Reynolds stress of a linear eddy-viscosity closure.

    ``tau = -2 nu_t (S - tr(S)/3 I) + 2/3 k I`` with ``nu_t = mu_t / rho``.
    """
    s = strain_rate(grad_u)
    k = np.asarray(k, dtype=float)[..., None, None]
    nu_t = np.asarray(nu_t, dtype=float)[..., None, None]
    eye = np.eye(3)
    div = np.trace(s, axis1=-2, axis2=-1)[..., None, None]
    return -2.0 * nu_t * (s - div / 3.0 * eye) + (2.0 / 3.0) * k * eye


def _jacobi_rotation(a, v, idx, p, q):
    app = a[idx, p, p]
    aqq = a[idx, q, q]
    apq = a[idx, p, q]
    with np.errstate(over="ignore", invalid="ignore"):
        theta = (aqq - app) / (2.0 * apq)
        t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
    t = np.where(theta == 0.0, 1.0, np.nan_to_num(t, nan=0.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    rot = np.zeros((idx.size, 3, 3))
    rot[:, 0, 0] = rot[:, 1, 1] = rot[:, 2, 2] = 1.0
    rot[:, p, p] = c
    rot[:, q, q] = c
    rot[:, p, q] = s
    rot[:, q, p] = -s
    sub = np.swapaxes(rot, 1, 2) @ a[idx] @ rot
    sub[:, p, q] = 0.0
    sub[:, q, p] = 0.0
    a[idx] = sub
    v[idx] = v[idx] @ rot


def eig_sym(t, tol: float = 1e-13, max_sweeps: int = 50) -> EigenDecomp:
    """Eigendecomposition of symmetric 3x3 tensors by cyclic Jacobi rotations.

    Parameters
    ----------
    t : array_like, shape (..., 3, 3)
        Symmetric tensors; only the symmetric part is used.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm is at most
        ``tol * ||t||_F``.
    max_sweeps : int
        Hard cap on the number of cyclic sweeps.

    Returns
    -------
    EigenDecomp
        ``values[..., i]`` sorted descending and ``vectors[..., :, i]`` the
        matching orthonormal eigenvector.  The largest-magnitude component of
        every eigenvector is positive.

    Raises
    ------
    InvalidInput
        If ``t`` has the wrong shape or non-finite entries.
    """
    a = np.array(t, dtype=float)
    if a.shape[-2:] != (3, 3):
        raise InvalidInput(f"expected trailing shape (3, 3), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("tensor has non-finite components")
    batch = a.shape[:-2]
    a = 0.5 * (a + np.swapaxes(a, -1, -2))
    a = a.reshape(-1, 3, 3)
    v = np.broadcast_to(np.eye(3), a.shape).copy()
    scale = np.sqrt(np.einsum("nij,nij->n", a, a))

    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * (a[:, 0, 1] ** 2 + a[:, 0, 2] ** 2 + a[:, 1, 2] ** 2))
        active = off > tol * scale
        if not active.any():
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            idx = np.flatnonzero(active & (a[:, p, q] != 0.0))
            if idx.size:
                _jacobi_rotation(a, v, idx, p, q)

    values = np.diagonal(a, axis1=1, axis2=2).copy()
    order = np.argsort(-values, axis=1, kind="stable")
    values = np.take_along_axis(values, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)

    lead = np.argmax(np.abs(v), axis=1)
    sign = np.sign(np.take_along_axis(v, lead[:, None, :], axis=1))
    v = v * np.where(sign == 0.0, 1.0, sign)
    return EigenDecomp(values.reshape(batch + (3,)), v.reshape(batch + (3, 3)))


def anisotropy(tau, k) -> np.ndarray:
    """Anisotropy tensor ``tau / k - 2/3 I``.

    Raises
    ------
    DegenerateTurbulence
        If any ``k`` is at or below :data:`K_FLOOR`.
    """
    tau = np.asarray(tau, dtype=float)
    k = np.asarray(k, dtype=float)
    if np.any(~(k > K_FLOOR)):
        raise DegenerateTurbulence(f"turbulent kinetic energy below floor {K_FLOOR:g}")
    return tau / k[..., None, None] - (2.0 / 3.0) * np.eye(3)


def bary_weights(values) -> np.ndarray:
    """Barycentric weights ``(C_1C, C_2C, C_3C)`` of sorted anisotropy eigenvalues."""
    lam = np.asarray(values, dtype=float)
    return np.stack(
        [
            0.5 * (lam[..., 0] - lam[..., 1]),
            lam[..., 1] - lam[..., 2],
            1.5 * lam[..., 2] + 1.0,
        ],
        axis=-1,
    )


def point_weights(points) -> np.ndarray:
    """Barycentric weights of plane points with respect to the fixed triangle."""
    pts = np.asarray(points, dtype=float)
    c3 = pts[..., 1] / _SQRT3_2
    c1 = pts[..., 0] - 0.5 * c3
    c2 = 1.0 - c1 - c3
    return np.stack([c1, c2, c3], axis=-1)


def to_barycentric(values) -> np.ndarray:
    """Map sorted, trace-free anisotropy eigenvalues to the barycentric plane.

    Corners are ``1C = (1, 0)``, ``2C = (0, 0)`` and ``3C = (1/2, sqrt(3)/2)``.
    """
    lam = np.asarray(values, dtype=float)
    if lam.shape[-1:] != (3,):
        raise InvalidInput(f"expected trailing dimension 3, got {lam.shape}")
    if not np.all(np.isfinite(lam)):
        raise InvalidInput("eigenvalues must be finite")
    if np.any(lam[..., 0] < lam[..., 1] - REALIZABILITY_TOL) or np.any(
        lam[..., 1] < lam[..., 2] - REALIZABILITY_TOL
    ):
        raise InvalidInput("eigenvalues must be sorted descending")
    if np.any(np.abs(lam.sum(axis=-1)) > 1e-8):
        raise InvalidInput("anisotropy eigenvalues must be trace-free")
    c = bary_weights(lam)
    return np.stack([c[..., 0] + 0.5 * c[..., 2], _SQRT3_2 * c[..., 2]], axis=-1)


def is_realizable(points) -> np.ndarray:
    """True where all barycentric weights lie in ``[0, 1]`` (``1e-9`` slack)."""
    c = point_weights(points)
    with np.errstate(invalid="ignore"):
        inside = (c >= -REALIZABILITY_TOL) & (c <= 1.0 + REALIZABILITY_TOL)
    return np.all(inside, axis=-1)


def from_barycentric(points) -> np.ndarray:
    """Inverse of :func:`to_barycentric` for realizable plane points.

    Raises
    ------
    OutsideTriangle
        If any point lies outside the triangle.
    """
    pts = np.asarray(points, dtype=float)
    if not np.all(is_realizable(pts)):
        raise OutsideTriangle("barycentric point outside the realizable triangle")
    c = point_weights(pts)
    lam3 = (2.0 / 3.0) * (c[..., 2] - 1.0)
    lam2 = c[..., 1] + lam3
    lam1 = 2.0 * c[..., 0] + lam2
    return np.stack([lam1, lam2, lam3], axis=-1)
