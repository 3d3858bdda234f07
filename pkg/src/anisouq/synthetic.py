"""Randomized channel-like flow fields for tests and demos.

The generator builds wall-bounded RANS fields from a Reichardt-type velocity
profile with mild streamwise disturbances, and matching reference stresses
whose barycentric distance to the eddy-viscosity state is a known smooth
function of the ``q2`` and ``q8`` features plus small noise.
"""
from __future__ import annotations

import numpy as np

from .dataset import TAU_COLUMNS, FlowField, label_case
from .features import feature_matrix, physical_features
from .perturb import PerturbSpec, perturb_field
from .tensor import Corner, sym_components


def _reichardt(yp):
    u = 2.5 * np.log1p(0.4 * yp) + 7.8 * (1.0 - np.exp(-yp / 11.0) - (yp / 11.0) * np.exp(-yp / 3.0))
    dudyp = (1.0 / (1.0 + 0.4 * yp)
             + 7.8 * (np.exp(-yp / 11.0) / 11.0 - np.exp(-yp / 3.0) / 11.0 + (yp / 33.0) * np.exp(-yp / 3.0)))
    return u, dudyp


def channel_like_field(re_tau: float, n: int = 200, seed: int = 0, case_id: str | None = None,
                       y=None) -> FlowField:
    """A half-channel RANS field in wall units (``u_tau = delta = rho = 1``).

    Stations are log-spaced in ``y+`` and spread over random streamwise
    positions unless an explicit grid ``y`` (in units of the half-height) is
    given, in which case ``n`` is ignored and all stations share ``x = 0``.
    Small divergence-free disturbances keep the invariant block
    non-trivial.  The eddy viscosity is bounded so the eddy-viscosity stress
    stays realizable.
    """
    rng = np.random.default_rng([int(seed), int(re_tau)])
    if y is None:
        y = np.sort(np.exp(rng.uniform(np.log(0.5 / re_tau), 0.0, n)))
        x = rng.uniform(0.0, 4.0, n)
    else:
        y = np.asarray(y, dtype=float)
        n = y.size
        x = np.zeros(n)
    yp = y * re_tau
    u_wall, dudyp = _reichardt(yp)
    U = u_wall
    dudy = dudyp * re_tau

    eps = 0.02 * rng.standard_normal(n)
    grad_u = np.zeros((n, 3, 3))
    grad_u[:, 0, 1] = dudy
    grad_u[:, 0, 0] = eps * dudy
    grad_u[:, 1, 1] = -eps * dudy
    grad_u[:, 1, 0] = 0.05 * rng.standard_normal(n) * dudy
    vel = np.column_stack([U, 0.01 * rng.standard_normal(n) * U, np.zeros(n)])

    damp = 1.0 - np.exp(-yp / 25.0)
    k = 3.3 * damp**2 * (1.0 - 0.6 * y) + 0.05
    dkdy = 3.3 * (2.0 * damp * np.exp(-yp / 25.0) * re_tau / 25.0 * (1.0 - 0.6 * y) - 0.6 * damp**2)
    # |a_xy| = nu_t dU/dy / k <= 0.3 keeps every eigenvalue inside the triangle
    ratio = 0.3 * damp * (0.6 + 0.4 * rng.uniform(size=n))
    omega = np.abs(dudy) / ratio.clip(1e-3) + 1.0
    mu = 1.0 / re_tau
    mu_t = k / omega
    dpdx = -1.0
    grad_p = np.column_stack([np.full(n, dpdx), 0.01 * rng.standard_normal(n), np.zeros(n)])
    grad_k = np.column_stack([0.01 * rng.standard_normal(n), dkdy, np.zeros(n)])
    sound = 20.0 * float(_reichardt(np.array([re_tau]))[0][0])
    return FlowField.from_arrays(
        coords=np.column_stack([x, y]), U=vel, grad_U=grad_u, p=1.0 + dpdx * x, grad_p=grad_p,
        k=k, omega=omega, grad_k=grad_k, rho=1.0, mu=mu, mu_t=mu_t, d=y, Ma=U / sound,
        slice_id=0.0, meta={"case_id": case_id or f"channel_{int(re_tau)}", "wall_normal": "y"},
    )


def design_magnitude(q2, q8):
    """Smooth target ``0.05 + 0.2 q8 + 0.2 sin(pi q2)``, bounded by 0.45."""
    return 0.05 + 0.2 * np.asarray(q8) + 0.2 * np.sin(np.pi * np.asarray(q2))


def reference_field(rans: FlowField, noise: float = 0.005, seed: int = 0) -> FlowField:
    """Reference stresses shifted toward 1C by the design magnitude plus noise.

    The shift never reaches the corner, so the labeled target equals the
    requested distance up to round-off.
    """
    rng = np.random.default_rng([int(seed), 7])
    q = physical_features(rans)
    p = design_magnitude(q[:, 1], q[:, 7]) + noise * rng.standard_normal(len(rans))
    p = np.clip(p, 0.0, 0.45)
    shifted = perturb_field(rans, PerturbSpec(Corner.ONE_C), p_field=p)
    cols = {name: rans.col(name).copy() for name in ("x", "y", "slice_id")}
    comps = sym_components(shifted.tau_star)
    cols.update({name: comps[:, j] for j, name in enumerate(TAU_COLUMNS)})
    return FlowField(cols, {"case_id": rans.case_id, "wall_normal": "y"})


def synthetic_cases(re_taus=(180, 550, 1000, 2000), n: int = 200, seed: int = 0, noise: float = 0.005):
    """Labeled multi-case suite: ``{case_id: (X, y)}``."""
    out = {}
    for re_tau in re_taus:
        rans = channel_like_field(re_tau, n, seed)
        hf = reference_field(rans, noise, seed + int(re_tau))
        labeled = label_case(rans, hf)
        out[rans.case_id] = (feature_matrix(labeled.rans), labeled.target_p)
    return out

