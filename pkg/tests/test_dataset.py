import math

import numpy as np
import pytest

from anisouq.columnar import read_table, write_table
from anisouq.dataset import (
    RANS_COLUMNS,
    TAU_COLUMNS,
    FlowField,
    LabeledSamples,
    compute_target,
    filter_realizable,
    interpolate_to_rans,
    label_case,
    load_field,
    tu_mask,
    write_field,
)
from anisouq.errors import (
    InsufficientData,
    InvalidInput,
    MissingColumn,
    ParseError,
    RealizabilityViolation,
)
from anisouq.synthetic import channel_like_field, reference_field
from anisouq.tensor import sym_components

from conftest import point_field


def hf_field(tau, y=None):
    tau = np.asarray(tau, dtype=float).reshape(-1, 3, 3)
    n = len(tau)
    y = np.linspace(0.1, 1.0, n) if y is None else y
    comps = sym_components(tau)
    cols = {"x": np.arange(n, dtype=float), "y": y}
    cols.update({name: comps[:, j] for j, name in enumerate(TAU_COLUMNS)})
    return FlowField(cols, {})


class TestFiles:
    def test_roundtrip(self, tmp_path):
        f = channel_like_field(180, 20)
        write_field(tmp_path / "a.csv", f)
        g = load_field(tmp_path / "a.csv")
        assert set(g.columns) == set(f.columns)
        for name in f.columns:
            assert np.array_equal(g.col(name), f.col(name))
        assert g.case_id == f.case_id
        write_field(tmp_path / "b.csv", g)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_empty_body(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text(",".join(RANS_COLUMNS) + "\n")
        assert len(load_field(path)) == 0

    def test_nan_cell(self, tmp_path):
        f = channel_like_field(180, 5)
        write_field(tmp_path / "a.csv", f)
        lines = (tmp_path / "a.csv").read_text().splitlines()
        header_at = next(i for i, l in enumerate(lines) if not l.startswith("#"))
        header = lines[header_at].split(",")
        row = lines[header_at + 3].split(",")
        row[header.index("k")] = "nan"
        lines[header_at + 3] = ",".join(row)
        (tmp_path / "a.csv").write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError) as err:
            load_field(tmp_path / "a.csv")
        assert err.value.row == 2 and err.value.col == "k"

    def test_text_cell(self, tmp_path):
        (tmp_path / "t.csv").write_text("a,b\n1,2\n3,oops\n")
        with pytest.raises(ParseError) as err:
            read_table(tmp_path / "t.csv")
        assert (err.value.row, err.value.col) == (1, "b")

    def test_missing_column(self, tmp_path):
        write_table(tmp_path / "m.csv", {"x": [1.0], "y": [2.0]})
        with pytest.raises(MissingColumn):
            load_field(tmp_path / "m.csv")

    def test_duplicate_header(self, tmp_path):
        (tmp_path / "d.csv").write_text("a,a\n1,2\n")
        with pytest.raises(InvalidInput):
            read_table(tmp_path / "d.csv")


class TestInterpolation:
    def _pair(self, hf_y, hf_val, rans_y):
        hf = FlowField({"y": np.asarray(hf_y, float), "val": np.asarray(hf_val, float)}, {})
        rans = FlowField({"y": np.asarray(rans_y, float)}, {})
        return interpolate_to_rans(hf, rans)

    def test_coincident(self):
        out = self._pair([0.0, 1.0, 2.0], [5.0, 7.0, -1.0], [1.0])
        assert out.field.col("val")[0] == 7.0

    def test_midpoint(self):
        assert self._pair([0.0, 1.0], [0.0, 2.0], [0.5]).field.col("val")[0] == 1.0

    def test_out_of_range(self):
        out = self._pair([0.0, 1.0], [0.0, 2.0], [0.5, 1.5, -0.1])
        assert out.n_dropped == 2 and list(out.rans_index) == [0]

    def test_affine_exact(self, rng):
        hf_y = np.sort(rng.uniform(0, 1, 30))
        rans_y = rng.uniform(hf_y[0], hf_y[-1], 50)
        out = self._pair(hf_y, 3.0 * hf_y - 0.25, rans_y)
        assert np.max(np.abs(out.field.col("val") - (3.0 * rans_y - 0.25))) < 1e-12

    def test_too_few(self):
        with pytest.raises(InsufficientData):
            self._pair([0.0], [1.0], [0.0])

    def test_slices(self):
        hf = FlowField({"y": np.array([0.0, 1.0, 0.0, 1.0]), "slice_id": np.array([0.0, 0, 1, 1]),
                        "val": np.array([0.0, 1.0, 10.0, 20.0])}, {})
        rans = FlowField({"y": np.array([0.5, 0.5, 0.5]), "slice_id": np.array([1.0, 0.0, 2.0])}, {})
        out = interpolate_to_rans(hf, rans)
        assert list(out.rans_index) == [0, 1] and out.n_dropped == 1
        assert np.array_equal(out.field.col("val"), [15.0, 0.5])


class TestTarget:
    def test_same_stress_zero(self):
        rans = channel_like_field(550, 30)
        s = compute_target(rans, hf_field(rans.boussinesq_tau(), rans.col("y")))
        assert np.max(s.target_p) < 1e-12

    def test_2c_to_1c_unit(self):
        # axisymmetric contraction puts the eddy-viscosity state on 2C
        a2c = np.diag([1 / 3, 1 / 3, -2 / 3])
        rans = point_field(-(1.0 / (2 * 0.1)) * a2c, k=1.0, nu_t=0.1)
        s = compute_target(rans, hf_field(np.diag([2.0, 0.0, 0.0])))
        assert np.allclose(s.bary_rans, [[0.0, 0.0]], atol=1e-12)
        assert np.isclose(s.target_p[0], 1.0)

    def test_worked_distance(self):
        g = np.zeros((3, 3))
        g[0, 1] = 5.0
        rans = point_field(g, k=1.0, nu_t=0.1)
        s = compute_target(rans, hf_field(np.diag([11 / 9, 5 / 9, 2 / 9])))
        assert np.allclose(s.bary_rans[0], [0.375, math.sqrt(3) / 8])
        assert np.allclose(s.bary_hf[0], [0.5, 0.288675], atol=1e-6)
        assert np.isclose(s.target_p[0], 0.1443, atol=5e-5)

    def test_strict_violation(self):
        g = np.zeros((3, 3))
        g[0, 1] = 100.0
        rans = point_field(g, k=1.0, nu_t=0.1)
        with pytest.raises(RealizabilityViolation):
            compute_target(rans, hf_field(2 / 3 * np.eye(3)))
        s = compute_target(rans, hf_field(2 / 3 * np.eye(3)), strict=False)
        assert not s.realizable[0]

    def test_target_bounded(self):
        rans = channel_like_field(1000, 50)
        s = label_case(rans, reference_field(rans))
        assert np.all((s.target_p >= 0) & (s.target_p <= 1))


class TestFilter:
    def _samples(self, n_bad):
        rans = channel_like_field(180, 10)
        s = label_case(rans, reference_field(rans))
        if n_bad:
            s.bary_hf[:n_bad] = [1.5, 0.0]
        return s

    def test_identity(self):
        kept, removed = filter_realizable(self._samples(0))
        assert removed == 0 and len(kept) == 10

    def test_one_removed(self):
        kept, removed = filter_realizable(self._samples(1))
        assert removed == 1 and len(kept) == 9

    def test_idempotent(self):
        once, _ = filter_realizable(self._samples(3))
        twice, removed = filter_realizable(once)
        assert removed == 0 and np.array_equal(once.target_p, twice.target_p)

    def test_empty(self):
        kept, removed = filter_realizable(self._samples(0).subset(np.arange(0)))
        assert len(kept) == 0 and removed == 0

    def test_field_roundtrip(self):
        s = self._samples(0)
        back = LabeledSamples.from_field(s.to_field())
        assert np.array_equal(back.target_p, s.target_p)
        assert np.array_equal(back.bary_hf, s.bary_hf)


class TestTuMask:
    def test_zero_k(self):
        assert not tu_mask(point_field(np.zeros((3, 3)), k=0.0), 1.0)[0]

    def test_one_percent(self):
        u_ref = 10.0
        k = 1.5 * (0.01 * u_ref) ** 2
        assert tu_mask(point_field(np.zeros((3, 3)), k=k), u_ref, 1e-4)[0]

    def test_threshold_zero(self):
        f = channel_like_field(180, 20)
        assert tu_mask(f, 1.0, 0.0).all()

    def test_bad_reference(self):
        with pytest.raises(InvalidInput):
            tu_mask(channel_like_field(180, 3), 0.0)
