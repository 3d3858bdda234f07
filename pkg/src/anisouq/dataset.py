"""Flow-field ingest, slice-wise interpolation and training-target construction.

A :class:`FlowField` stores one column per raw quantity (a row per grid
sample) and exposes the assembled vectors and tensors as properties.  The
velocity gradient follows ``grad_U[:, i, j] = du_i/dx_j`` with column names
``dudx, dudy, dudz, dvdx, ...``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field
from typing import Mapping

import numpy as np

from . import columnar
from .errors import InsufficientData, InvalidInput, MissingColumn, RealizabilityViolation
from .tensor import (
    K_FLOOR,
    anisotropy,
    boussinesq_stress,
    eig_sym,
    is_realizable,
    sym_components,
    sym_tensor,
    to_barycentric,
)

log = logging.getLogger(__name__)

GRAD_U_COLUMNS = tuple(f"d{u}d{x}" for u in "uvw" for x in "xyz")
TAU_COLUMNS = ("tau_xx", "tau_yy", "tau_zz", "tau_xy", "tau_xz", "tau_yz")
RANS_COLUMNS = (
    ("x", "y", "u", "v", "w")
    + GRAD_U_COLUMNS
    + ("p", "dpdx", "dpdy", "dpdz", "k", "omega", "dkdx", "dkdy", "dkdz")
    + ("rho", "mu", "mu_t", "d", "Ma")
)
LABEL_COLUMNS = ("target_p", "bary_rans_x", "bary_rans_y", "bary_hf_x", "bary_hf_y")
COORD_COLUMNS = ("x", "y", "z")
SLICE_COLUMN = "slice_id"

DEFAULT_UNITS = {
    "x": "m", "y": "m", "z": "m", "u": "m/s", "v": "m/s", "w": "m/s",
    **{c: "1/s" for c in GRAD_U_COLUMNS},
    "p": "Pa", "dpdx": "Pa/m", "dpdy": "Pa/m", "dpdz": "Pa/m",
    "k": "m2/s2", "omega": "1/s", "dkdx": "m/s2", "dkdy": "m/s2", "dkdz": "m/s2",
    "rho": "kg/m3", "mu": "Pa s", "mu_t": "Pa s", "d": "m", "Ma": "-",
    **{c: "m2/s2" for c in TAU_COLUMNS},
}


@dataclass(frozen=True)
class Schema:
    name: str
    required: tuple[str, ...]

    def validate(self, columns):
        for name in self.required:
            if name not in columns:
                raise MissingColumn(name)


RANS_SCHEMA = Schema("rans", RANS_COLUMNS)
HF_SCHEMA = Schema("hf", ("x", "y") + TAU_COLUMNS)
LABELED_SCHEMA = Schema("labeled", RANS_COLUMNS + LABEL_COLUMNS)


@dataclass
class FlowField:
    """Columnar container of flow samples (one row per grid point)."""

    columns: dict[str, np.ndarray]
    meta: dict[str, str] = dc_field(default_factory=dict)

    def __post_init__(self):
        self.columns = {k: np.asarray(v, dtype=float).ravel() for k, v in self.columns.items()}
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise InvalidInput(f"columns have different lengths: {sorted(lengths)}")

    def __len__(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def has(self, name) -> bool:
        return name in self.columns

    def col(self, name) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise MissingColumn(name) from None

    def _stack(self, names):
        return np.stack([self.col(n) for n in names], axis=-1)

    @classmethod
    def from_arrays(cls, *, coords, U, grad_U, p, grad_p, k, omega, grad_k, rho, mu,
                    mu_t, d, Ma, tau=None, slice_id=None, meta=None):
        """Build a field from assembled arrays (vectors ``(n, 3)``, tensors ``(n, 3, 3)``)."""
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        n = coords.shape[0]
        cols: dict[str, np.ndarray] = {}
        for j, name in enumerate(COORD_COLUMNS[: coords.shape[1]]):
            cols[name] = coords[:, j]
        if slice_id is not None:
            cols[SLICE_COLUMN] = np.broadcast_to(np.asarray(slice_id, dtype=float), (n,))
        U = np.broadcast_to(np.asarray(U, dtype=float), (n, 3))
        cols.update(u=U[:, 0], v=U[:, 1], w=U[:, 2])
        g = np.broadcast_to(np.asarray(grad_U, dtype=float), (n, 3, 3))
        for name, (i, j) in zip(GRAD_U_COLUMNS, np.ndindex(3, 3)):
            cols[name] = g[:, i, j]
        cols["p"] = np.broadcast_to(np.asarray(p, dtype=float), (n,))
        gp = np.broadcast_to(np.asarray(grad_p, dtype=float), (n, 3))
        cols.update(dpdx=gp[:, 0], dpdy=gp[:, 1], dpdz=gp[:, 2])
        cols["k"] = np.broadcast_to(np.asarray(k, dtype=float), (n,))
        cols["omega"] = np.broadcast_to(np.asarray(omega, dtype=float), (n,))
        gk = np.broadcast_to(np.asarray(grad_k, dtype=float), (n, 3))
        cols.update(dkdx=gk[:, 0], dkdy=gk[:, 1], dkdz=gk[:, 2])
        for name, value in (("rho", rho), ("mu", mu), ("mu_t", mu_t), ("d", d), ("Ma", Ma)):
            cols[name] = np.broadcast_to(np.asarray(value, dtype=float), (n,))
        if tau is not None:
            comps = sym_components(np.broadcast_to(np.asarray(tau, dtype=float), (n, 3, 3)))
            for j, name in enumerate(TAU_COLUMNS):
                cols[name] = comps[:, j]
        return cls({k: np.array(v) for k, v in cols.items()}, dict(meta or {}))

    # assembled quantities
    @property
    def coords(self):
        return self._stack([c for c in COORD_COLUMNS if c in self.columns] or ["x"])

    @property
    def U(self):
        return self._stack(("u", "v", "w"))

    @property
    def grad_U(self):
        return self._stack(GRAD_U_COLUMNS).reshape(-1, 3, 3)

    @property
    def grad_p(self):
        return self._stack(("dpdx", "dpdy", "dpdz"))

    @property
    def grad_k(self):
        return self._stack(("dkdx", "dkdy", "dkdz"))

    @property
    def k(self):
        return self.col("k")

    @property
    def omega(self):
        return self.col("omega")

    @property
    def rho(self):
        return self.col("rho")

    @property
    def mu(self):
        return self.col("mu")

    @property
    def mu_t(self):
        return self.col("mu_t")

    @property
    def d(self):
        return self.col("d")

    @property
    def Ma(self):
        return self.col("Ma")

    @property
    def has_tau(self):
        return all(c in self.columns for c in TAU_COLUMNS)

    @property
    def tau(self):
        return sym_tensor(*(self.col(c) for c in TAU_COLUMNS))

    @property
    def case_id(self):
        return self.meta.get("case_id")

    def boussinesq_tau(self):
        """Specific Reynolds stress of the eddy-viscosity closure."""
        return boussinesq_stress(self.grad_U, self.k, self.mu_t / self.rho)

    def subset(self, index) -> "FlowField":
        return FlowField({k: v[index] for k, v in self.columns.items()}, dict(self.meta))

    def with_columns(self, **cols) -> "FlowField":
        merged = dict(self.columns)
        merged.update({k: np.asarray(v, dtype=float) for k, v in cols.items()})
        return FlowField(merged, dict(self.meta))


def concat_fields(fields) -> FlowField:
    fields = list(fields)
    if not fields:
        raise InvalidInput("nothing to concatenate")
    names = list(fields[0].columns)
    for f in fields[1:]:
        if list(f.columns) != names:
            raise InvalidInput("fields have different columns")
    return FlowField({n: np.concatenate([f.columns[n] for f in fields]) for n in names}, dict(fields[0].meta))


def load_field(path, schema: Schema = RANS_SCHEMA) -> FlowField:
    """Read a flow file, checking that the ``schema`` columns are present."""
    columns, meta = columnar.read_table(path)
    schema.validate(columns)
    return FlowField(columns, meta)


def write_field(path, field: FlowField):
    meta = dict(field.meta)
    for name in field.columns:
        if name in DEFAULT_UNITS:
            meta.setdefault(f"units.{name}", DEFAULT_UNITS[name])
    columnar.write_table(path, field.columns, meta)


# slice-wise interpolation

@dataclass
class Interpolated:
    """High-fidelity columns sampled at the retained RANS stations."""

    field: FlowField
    rans_index: np.ndarray
    n_dropped: int


def _slices(field: FlowField):
    if field.has(SLICE_COLUMN):
        ids = field.col(SLICE_COLUMN)
        return {s: np.flatnonzero(ids == s) for s in np.unique(ids)}
    return {None: np.arange(len(field))}


def interpolate_to_rans(hf: FlowField, rans: FlowField, wall_normal: str | None = None) -> Interpolated:
    """Piecewise-linear interpolation of every high-fidelity column onto RANS stations.

    Stations are paired slice by slice (``slice_id`` column, if present) and
    interpolated along the wall-normal coordinate (metadata ``wall_normal``,
    default ``y``).  RANS stations outside the HF range of their slice, or in
    a slice the HF data lacks, are dropped and counted.
    """
    wall_normal = wall_normal or rans.meta.get("wall_normal") or hf.meta.get("wall_normal") or "y"
    hf_coord = hf.col(wall_normal)
    rans_coord = rans.col(wall_normal)
    skip = set(COORD_COLUMNS) | {SLICE_COLUMN}
    value_names = [n for n in hf.columns if n not in skip]
    hf_slices = _slices(hf)

    kept_parts: list[np.ndarray] = []
    values: dict[str, list[np.ndarray]] = {n: [] for n in value_names}
    n_dropped = 0
    for sid, r_idx in _slices(rans).items():
        h_idx = hf_slices.get(sid)
        if h_idx is None:
            n_dropped += r_idx.size
            continue
        if h_idx.size < 2:
            raise InsufficientData(f"slice {sid}: fewer than 2 high-fidelity points")
        xp = hf_coord[h_idx]
        if np.any(np.diff(xp) <= 0):
            raise InvalidInput(f"slice {sid}: high-fidelity coordinate not strictly increasing")
        xq = rans_coord[r_idx]
        inside = (xq >= xp[0]) & (xq <= xp[-1])
        n_dropped += int(np.count_nonzero(~inside))
        r_idx = r_idx[inside]
        kept_parts.append(r_idx)
        for n in value_names:
            values[n].append(np.interp(rans_coord[r_idx], xp, hf.col(n)[h_idx]))

    kept = np.concatenate(kept_parts) if kept_parts else np.empty(0, dtype=int)
    order = np.argsort(kept, kind="stable")
    kept = kept[order]
    cols = {n: rans.col(n)[kept] for n in (*COORD_COLUMNS, SLICE_COLUMN) if rans.has(n)}
    for n in value_names:
        cols[n] = np.concatenate(values[n])[order] if values[n] else np.empty(0)
    if n_dropped:
        log.info("interpolation dropped %d RANS stations outside the HF range", n_dropped)
    return Interpolated(FlowField(cols, dict(hf.meta)), kept, n_dropped)


# training targets

@dataclass
class LabeledSamples:
    """RANS samples paired with the barycentric distance to reference data."""

    rans: FlowField
    target_p: np.ndarray
    bary_rans: np.ndarray
    bary_hf: np.ndarray

    def __len__(self):
        return len(self.target_p)

    @property
    def case_id(self):
        return self.rans.case_id

    @property
    def realizable(self) -> np.ndarray:
        return is_realizable(self.bary_rans) & is_realizable(self.bary_hf)

    def subset(self, index) -> "LabeledSamples":
        return LabeledSamples(self.rans.subset(index), self.target_p[index],
                              self.bary_rans[index], self.bary_hf[index])

    def to_field(self) -> FlowField:
        return self.rans.with_columns(
            target_p=self.target_p,
            bary_rans_x=self.bary_rans[:, 0], bary_rans_y=self.bary_rans[:, 1],
            bary_hf_x=self.bary_hf[:, 0], bary_hf_y=self.bary_hf[:, 1],
        )

    @classmethod
    def from_field(cls, field: FlowField) -> "LabeledSamples":
        LABELED_SCHEMA.validate(field.columns)
        rans = FlowField({k: v for k, v in field.columns.items() if k not in LABEL_COLUMNS}, dict(field.meta))
        return cls(
            rans,
            field.col("target_p").copy(),
            np.column_stack([field.col("bary_rans_x"), field.col("bary_rans_y")]),
            np.column_stack([field.col("bary_hf_x"), field.col("bary_hf_y")]),
        )


def _bary_of(tau, k):
    """Barycentric points of stresses; NaN where ``k`` is degenerate."""
    out = np.full((len(k), 2), np.nan)
    ok = k > K_FLOOR
    if np.any(ok):
        a = anisotropy(tau[ok], k[ok])
        out[ok] = to_barycentric(eig_sym(a).values)
    return out


def compute_target(rans: FlowField, hf: FlowField, strict: bool = True) -> LabeledSamples:
    """Perturbation-magnitude target ``p = |x_hf - x_rans|`` per sample.

    ``rans`` and ``hf`` must be co-located (e.g. the output of
    :func:`interpolate_to_rans`).  The RANS point comes from the
    eddy-viscosity stress, the reference point from the ``tau_*`` columns.

    Raises
    ------
    RealizabilityViolation
        In ``strict`` mode, if any point falls outside the triangle.  With
        ``strict=False`` such samples are kept and can be removed with
        :func:`filter_realizable`.
    """
    if len(rans) != len(hf):
        raise InvalidInput("RANS and reference fields are not co-located")
    bary_rans = _bary_of(rans.boussinesq_tau(), rans.k)
    tau_hf = hf.tau
    bary_hf = _bary_of(tau_hf, 0.5 * np.trace(tau_hf, axis1=-2, axis2=-1))
    p = np.linalg.norm(bary_hf - bary_rans, axis=-1)
    samples = LabeledSamples(rans, p, bary_rans, bary_hf)
    if strict and not np.all(samples.realizable):
        bad = np.flatnonzero(~samples.realizable)
        raise RealizabilityViolation(f"{bad.size} samples outside the triangle (first row {bad[0]})")
    return samples


def label_case(rans: FlowField, hf: FlowField) -> LabeledSamples:
    """Interpolate reference data onto RANS stations and compute targets."""
    interp = interpolate_to_rans(hf, rans)
    return compute_target(rans.subset(interp.rans_index), interp.field, strict=False)


def filter_realizable(samples: LabeledSamples) -> tuple[LabeledSamples, int]:
    """Drop samples whose RANS or reference point is outside the triangle.

    Returns the kept samples and the number removed.
    """
    keep = samples.realizable
    removed = int(np.count_nonzero(~keep))
    if removed:
        log.info("removed %d non-realizable samples", removed)
    return samples.subset(np.flatnonzero(keep)), removed


def tu_mask(field: FlowField, u_ref: float, threshold: float = 1e-4) -> np.ndarray:
    """Samples whose turbulence intensity ``sqrt(2k/3) / u_ref`` reaches ``threshold``."""
    if not u_ref > 0:
        raise InvalidInput("reference velocity must be positive")
    tu = np.sqrt(2.0 * np.clip(field.k, 0.0, None) / 3.0) / u_ref
    return tu >= threshold
