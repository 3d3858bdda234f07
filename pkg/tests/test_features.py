import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from anisouq.dataset import FlowField
from anisouq.errors import DegenerateTurbulence, InvalidInput, MissingColumn
from anisouq.features import (
    FEATURE_NAMES,
    N_FEATURES,
    antisymmetric_lift,
    feature_index,
    feature_matrix,
    fit_scaler,
    invariant_basis,
    normalize,
    physical_features,
    raw_tensors,
    standardize,
)
from anisouq.synthetic import channel_like_field

from conftest import point_field, random_rotation


def shear(gamma):
    g = np.zeros((3, 3))
    g[0, 1] = gamma
    return g


class TestNormalize:
    @pytest.mark.parametrize("a, b, expected", [(3, 1, 0.75), (0, 5, 0.0), (0, 0, 0.0), (-2, 2, -0.5)])
    def test_values(self, a, b, expected):
        assert normalize(a, b) == expected

    @given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
    def test_bounded(self, a, b):
        assert -1.0 <= normalize(a, b) <= 1.0


def test_names():
    assert N_FEATURES == 56 and len(set(FEATURE_NAMES)) == 56
    assert feature_index("q1") == 47 and feature_index("q9") == 55
    with pytest.raises(InvalidInput):
        feature_index("q10")


class TestRawTensors:
    def test_uniform_flow(self):
        f = point_field(np.zeros((3, 3)), k=0.5, grad_p=(0, 0, 0), grad_k=(0, 0, 0))
        for t in raw_tensors(f):
            assert not np.any(t)

    def test_pure_shear_norm_scaled(self):
        gamma = 2.0
        s_hat = raw_tensors(point_field(shear(gamma), k=1.0, omega=gamma)).s_hat
        # |S|_F = gamma / sqrt(2)
        assert np.isclose(s_hat[0, 0, 1], (gamma / 2) / (gamma / math.sqrt(2) + gamma))

    def test_grad_k_balanced(self):
        k, omega = 0.25, 3.0
        f = point_field(np.zeros((3, 3)), k=k, omega=omega, grad_k=(0.0, omega * math.sqrt(k), 0.0))
        assert np.allclose(raw_tensors(f).grad_k_hat[0], [0.0, 0.5, 0.0])

    def test_nonpositive_omega(self):
        with pytest.raises(DegenerateTurbulence):
            raw_tensors(point_field(shear(1.0), k=1.0, omega=0.0))


class TestInvariants:
    def test_zero(self):
        z = np.zeros((3, 3))
        assert np.array_equal(invariant_basis(z, z, np.zeros(3), np.zeros(3)), np.zeros(47))

    def test_diagonal_strain(self):
        z = np.zeros((3, 3))
        out = invariant_basis(np.diag([1.0, -1.0, 0.0]), z, np.zeros(3), np.zeros(3))
        assert out[0] == 2.0 and out[1] == 0.0
        assert not np.any(out[2:])

    def test_rotation_invariance(self, rng):
        s = rng.standard_normal((3, 3))
        s = s + s.T
        w = rng.standard_normal((3, 3))
        w = w - w.T
        p, k = rng.standard_normal(3), rng.standard_normal(3)
        base = invariant_basis(s, w, p, k)
        for _ in range(20):
            r = random_rotation(rng)
            rot = invariant_basis(r @ s @ r.T, r @ w @ r.T, r @ p, r @ k)
            assert np.max(np.abs(rot - base)) < 1e-9 * max(1, np.abs(base).max())

    def test_first_entries_match_traces(self, rng):
        s = rng.standard_normal((3, 3))
        s = s + s.T
        w = rng.standard_normal((3, 3))
        w = w - w.T
        out = invariant_basis(s, w, np.zeros(3), np.zeros(3))
        assert np.isclose(out[0], np.einsum("ij,ji", s, s))
        assert np.isclose(out[1], np.einsum("ij,jk,ki", s, s, s))
        assert np.isclose(out[2], np.einsum("ij,ji", w, w))


@given(arrays(np.float64, 3, elements=st.floats(-1e3, 1e3)))
def test_antisymmetric_lift(v):
    a = antisymmetric_lift(v)
    assert np.array_equal(a, -a.T)
    assert np.allclose(a @ v, 0.0, atol=1e-9 * max(1.0, np.abs(v).max() ** 2))


class TestPhysical:
    def test_still_fluid(self):
        f = point_field(np.zeros((3, 3)), k=0.0, U=(0, 0, 0), nu_t=0.0)
        q = physical_features(f)[0]
        assert q[1] == 0.0 and q[5] == 0.0

    def test_q3_clamped(self):
        # sqrt(k) d / (50 nu) with k = 1, nu = mu/rho = 1e-3, d = 0.25 gives 5
        f = point_field(shear(1.0), k=1.0, d=0.25, mu=1e-3)
        assert physical_features(f)[0, 2] == 2.0

    def test_q8_balanced(self):
        f = point_field(shear(1.0), k=1.0, nu_t=1e-3, mu=1e-3)
        assert np.isclose(physical_features(f)[0, 7], 0.5)

    def test_missing_wall_distance(self):
        f = point_field(shear(1.0), k=1.0)
        cols = {k: v for k, v in f.columns.items() if k != "d"}
        with pytest.raises(MissingColumn):
            physical_features(FlowField(cols, {}))


def rotate_field(f, r):
    from anisouq.dataset import GRAD_U_COLUMNS

    g = np.einsum("ij,njk,lk->nil", r, f.grad_U, r)
    U, gp, gk = (f.U @ r.T, f.grad_p @ r.T, f.grad_k @ r.T)
    cols = dict(f.columns)
    for name, (i, j) in zip(GRAD_U_COLUMNS, np.ndindex(3, 3)):
        cols[name] = g[:, i, j]
    for names, vec in ((("u", "v", "w"), U), (("dpdx", "dpdy", "dpdz"), gp), (("dkdx", "dkdy", "dkdz"), gk)):
        for j, name in enumerate(names):
            cols[name] = vec[:, j]
    return FlowField(cols, dict(f.meta))


class TestFeatureMatrix:
    def test_shape_and_bounds(self):
        f = channel_like_field(550, 100)
        X = feature_matrix(f)
        assert X.shape == (100, 56)
        assert np.all(np.isfinite(X))
        for t in raw_tensors(f):
            assert np.all(np.abs(t) <= 1.0)
        normalized = [feature_index(q) for q in ("q1", "q2", "q4", "q5", "q6", "q8", "q9")]
        assert np.all(np.abs(X[:, normalized]) <= 1.0)
        assert np.all((X[:, 49] >= 0) & (X[:, 49] <= 2))
        assert np.all(X[:, 53] >= 0)

    def test_rotation_invariant(self, rng):
        f = channel_like_field(550, 40)
        base = feature_matrix(f)
        for _ in range(10):
            assert np.max(np.abs(feature_matrix(rotate_field(f, random_rotation(rng))) - base)) < 1e-9

    def test_empty(self):
        f = channel_like_field(180, 10).subset(np.arange(0))
        assert feature_matrix(f).shape == (0, 56)

    def test_deterministic(self):
        f = channel_like_field(180, 30)
        assert np.array_equal(feature_matrix(f), feature_matrix(f))


class TestStandardize:
    def test_two_values(self):
        Z, stats = standardize(np.array([[0.0], [2.0]]))
        assert np.array_equal(Z[:, 0], [-1.0, 1.0])

    def test_constant(self):
        Z, stats = standardize(np.tile([[1.0, -3.0]], (4, 1)))
        assert np.array_equal(Z, np.zeros((4, 2)))
        assert stats.constant.all()

    def test_roundoff_spread_is_constant(self):
        X = np.array([[1.0, 0.0], [1.0 + 2e-16, 1.0], [1.0, 2.0]])
        Z, stats = standardize(X)
        assert list(stats.constant) == [True, False]
        assert np.max(np.abs(Z[:, 0])) <= 1e-12

    def test_applied_stats_not_refitted(self, rng):
        train = rng.normal(size=(50, 3))
        stats = fit_scaler(train)
        Z, again = standardize(train + 5.0, stats)
        assert again is stats
        assert np.all(Z.mean(axis=0) > 1.0)

    def test_moments(self, rng):
        Z, _ = standardize(rng.normal(3.0, 2.0, size=(200, 5)))
        assert np.all(np.abs(Z.mean(axis=0)) <= 1e-9)
        assert np.all(np.abs(Z.std(axis=0) - 1) <= 1e-9)

    def test_empty(self):
        with pytest.raises(InvalidInput):
            standardize(np.empty((0, 3)))
