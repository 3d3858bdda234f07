"""One-dimensional fully-developed channel surrogate.

Integrates the half-channel momentum balance

    mu dU/dy = -dpdx (delta - y) + rho tau12(y),    U(0) = 0,

for a given specific Reynolds shear stress ``tau12 = <u'v'>`` with the
trapezoidal rule, so that baseline and perturbed stress profiles can be
propagated to velocity profiles and an uncertainty band.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .columnar import read_table, write_table
from .errors import InvalidInput, MissingColumn

TAU_COLUMN_ALIASES = ("tau12", "tau_xy")


@dataclass(frozen=True)
class ChannelCase:
    y: np.ndarray
    dpdx: float
    mu: float
    rho: float
    tau12: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        tau = np.asarray(self.tau12, dtype=float)
        if tau.ndim == 0:
            tau = np.full_like(y, float(tau))
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "tau12", tau)
        if y.ndim != 1 or y.size < 2:
            raise InvalidInput("the grid needs at least two nodes")
        if not np.all(np.diff(y) > 0.0):
            raise InvalidInput("the wall-normal grid must be strictly increasing")
        if y[0] != 0.0:
            raise InvalidInput("the grid must start at the wall, y[0] = 0")
        if tau.shape != y.shape:
            raise InvalidInput("tau12 needs one value per grid node")
        if not self.mu > 0.0 or not self.rho > 0.0:
            raise InvalidInput("mu and rho must be positive")

    @property
    def delta(self) -> float:
        return float(self.y[-1])

    def with_tau(self, tau12) -> "ChannelCase":
        return replace(self, tau12=tau12)


def solve_velocity(case: ChannelCase) -> np.ndarray:
    """Velocity at every grid node."""
    dudy = (-case.dpdx * (case.delta - case.y) + case.rho * case.tau12) / case.mu
    return cumulative_trapezoid(dudy, case.y, initial=0.0)


def laminar_profile(y, dpdx, mu) -> np.ndarray:
    """Analytic ``(-dpdx/mu)(delta y - y^2/2)`` with ``delta = y[-1]``."""
    y = np.asarray(y, dtype=float)
    return (-dpdx / mu) * (y[-1] * y - 0.5 * y * y)


def laminar_error(case: ChannelCase) -> float:
    """Max relative deviation of the zero-stress solve from the analytic parabola."""
    exact = laminar_profile(case.y, case.dpdx, case.mu)
    numeric = solve_velocity(case.with_tau(np.zeros_like(case.y)))
    scale = np.max(np.abs(exact))
    return float(np.max(np.abs(numeric - exact)) / scale) if scale > 0 else float(np.max(np.abs(numeric)))


def envelope(solutions: Mapping[str, np.ndarray], grids: Mapping[str, np.ndarray] | None = None):
    """Per-node minimum and maximum over the given velocity profiles.

    A single profile yields a zero-width band.  When ``grids`` is given
    every profile's grid must coincide.

    Returns
    -------
    band_min, band_max : numpy.ndarray
    """
    if not solutions:
        raise InvalidInput("the envelope needs at least one solution")
    arrays = [np.asarray(u, dtype=float) for u in solutions.values()]
    if len({a.shape for a in arrays}) != 1:
        raise InvalidInput("solutions live on different grids")
    if grids is not None:
        ref = None
        for label in solutions:
            g = np.asarray(grids[label], dtype=float)
            if ref is None:
                ref = g
            elif g.shape != ref.shape or not np.array_equal(g, ref):
                raise InvalidInput(f"grid of {label!r} differs from the others")
    stack = np.stack(arrays)
    return stack.min(axis=0), stack.max(axis=0)


# files

def load_case(path) -> ChannelCase:
    """Case table: columns ``y`` and optional ``tau12``; metadata ``dpdx``, ``mu``, ``rho``."""
    cols, meta = read_table(path)
    if "y" not in cols:
        raise MissingColumn("y")
    try:
        dpdx, mu, rho = (float(meta[key]) for key in ("dpdx", "mu", "rho"))
    except KeyError as exc:
        raise InvalidInput(f"{path}: missing metadata {exc.args[0]!r}") from None
    except ValueError:
        raise InvalidInput(f"{path}: dpdx, mu and rho must be numbers") from None
    tau = _tau_column(cols, required=False)
    return ChannelCase(cols["y"], dpdx, mu, rho, np.zeros_like(cols["y"]) if tau is None else tau)


def _tau_column(cols, required=True):
    for name in TAU_COLUMN_ALIASES:
        if name in cols:
            return cols[name]
    if required:
        raise MissingColumn(TAU_COLUMN_ALIASES[0])
    return None


def load_stress_profile(path):
    """``(label, y, tau12)`` from a stress table.

    The label comes from the ``label`` metadata entry, else the file stem.
    Accepts ``tau12`` or ``tau_xy`` columns, so perturbed-field outputs can be
    fed in directly.
    """
    cols, meta = read_table(path)
    if "y" not in cols:
        raise MissingColumn("y")
    label = meta.get("label") or Path(os.fspath(path)).stem
    return label, cols["y"], _tau_column(cols)


def propagate(case: ChannelCase, profiles: Mapping[str, tuple]) -> dict:
    """Solve the baseline and every ``label -> (y, tau12)`` profile.

    Returns a column mapping ``y, U_baseline, U_<label>..., band_min,
    band_max`` where the band spans the perturbed profiles.
    """
    out = {"y": case.y, "U_baseline": solve_velocity(case)}
    solved = {}
    for label, (y, tau) in profiles.items():
        y = np.asarray(y, dtype=float)
        if y.shape != case.y.shape or not np.allclose(y, case.y, rtol=1e-12, atol=1e-15):
            raise InvalidInput(f"profile {label!r} is not on the case grid")
        solved[label] = solve_velocity(case.with_tau(tau))
    for label, u in solved.items():
        out[f"U_{label}"] = u
    lo, hi = envelope(solved)
    out["band_min"] = lo
    out["band_max"] = hi
    return out


def write_case(path, case: ChannelCase, meta: Mapping[str, str] | None = None):
    info = {"dpdx": repr(float(case.dpdx)), "mu": repr(float(case.mu)), "rho": repr(float(case.rho))}
    info.update(meta or {})
    write_table(path, {"y": case.y, "tau12": case.tau12}, info)
