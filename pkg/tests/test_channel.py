import numpy as np
import pytest

from anisouq.channel import (
    ChannelCase,
    envelope,
    laminar_error,
    laminar_profile,
    load_case,
    load_stress_profile,
    propagate,
    solve_velocity,
    write_case,
)
from anisouq.columnar import write_table
from anisouq.errors import InvalidInput

from oracles import channel_exact

DPDX, MU, RHO = -2.0, 1.5e-3, 1.2


def case(n=512, tau=0.0, delta=1.0):
    return ChannelCase(np.linspace(0.0, delta, n), DPDX, MU, RHO, tau)


class TestSolve:
    def test_laminar(self):
        c = case()
        exact = laminar_profile(c.y, DPDX, MU)
        assert np.max(np.abs(solve_velocity(c) - exact)) <= 1e-6 * np.max(np.abs(exact))
        assert laminar_error(c) <= 1e-6

    def test_stress_carries_everything(self):
        c = case()
        c = c.with_tau(-(-DPDX / RHO) * (c.delta - c.y))
        assert np.max(np.abs(solve_velocity(c))) < 1e-9

    def test_constant_stress(self):
        # U = laminar + (rho c / mu) y for tau12 = <u'v'> = c
        c = case(tau=-0.01)
        expected = laminar_profile(c.y, DPDX, MU) + (RHO * -0.01 / MU) * c.y
        assert np.allclose(solve_velocity(c), expected, rtol=1e-12, atol=1e-9)

    def test_manufactured_sine(self):
        c = case(n=257, delta=0.5)
        amp = -0.05
        c = c.with_tau(amp * np.sin(np.pi * c.y / c.delta))
        exact = channel_exact(c.y, DPDX, MU, RHO, amp, c.delta)
        assert np.max(np.abs(solve_velocity(c) - exact)) < 1e-4 * np.max(np.abs(exact))

    def test_affine(self, rng):
        c = case(n=101)
        t1, t2 = rng.normal(size=101) * 1e-2, rng.normal(size=101) * 1e-2
        a, b = 0.7, -1.3
        lhs = solve_velocity(c.with_tau(a * t1 + b * t2))
        zero = solve_velocity(c.with_tau(0.0))
        rhs = zero + a * (solve_velocity(c.with_tau(t1)) - zero) + b * (solve_velocity(c.with_tau(t2)) - zero)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(lhs)))

    @pytest.mark.parametrize("y", [[0.0, 0.5, 0.4], [0.1, 0.5, 1.0], [0.0]])
    def test_bad_grid(self, y):
        with pytest.raises(InvalidInput):
            ChannelCase(np.array(y), DPDX, MU, RHO, 0.0)


class TestEnvelope:
    def test_identical(self):
        u = np.linspace(0, 1, 10)
        lo, hi = envelope({"a": u, "b": u.copy()})
        assert np.array_equal(lo, hi)

    def test_single(self):
        lo, hi = envelope({"only": np.arange(4.0)})
        assert np.array_equal(lo, hi)

    def test_plus_minus(self):
        u = np.array([-1.0, 0.0, 2.0])
        lo, hi = envelope({"u": u, "neg": -u})
        assert np.array_equal(lo, -np.abs(u)) and np.array_equal(hi, np.abs(u))

    def test_monotone(self, rng):
        sols = {str(i): rng.normal(size=20) for i in range(4)}
        lo3, hi3 = envelope(dict(list(sols.items())[:3]))
        lo4, hi4 = envelope(sols)
        assert np.all(lo4 <= lo3) and np.all(hi4 >= hi3)

    def test_grid_mismatch(self):
        with pytest.raises(InvalidInput):
            envelope({"a": np.zeros(3), "b": np.zeros(4)})
        with pytest.raises(InvalidInput):
            envelope({"a": np.zeros(3), "b": np.zeros(3)}, grids={"a": [0, 1, 2], "b": [0, 1, 3]})


class TestFiles:
    def test_case_roundtrip(self, tmp_path):
        c = case(n=33, tau=-0.002)
        write_case(tmp_path / "c.csv", c)
        back = load_case(tmp_path / "c.csv")
        assert np.array_equal(back.y, c.y) and np.array_equal(back.tau12, c.tau12)
        assert (back.dpdx, back.mu, back.rho) == (DPDX, MU, RHO)

    def test_propagate_files(self, tmp_path):
        c = case(n=17)
        for label, scale in (("lo", 0.5), ("hi", 2.0)):
            write_table(tmp_path / f"{label}.csv", {"y": c.y, "tau_xy": -scale * 1e-3 * np.ones(17)},
                        {"label": label})
        profiles = {}
        for label in ("lo", "hi"):
            name, y, tau = load_stress_profile(tmp_path / f"{label}.csv")
            profiles[name] = (y, tau)
        out = propagate(c, profiles)
        assert list(out) == ["y", "U_baseline", "U_lo", "U_hi", "band_min", "band_max"]
        assert np.all(out["band_min"] <= out["band_max"])

    def test_profile_off_grid(self):
        c = case(n=5)
        with pytest.raises(InvalidInput):
            propagate(c, {"x": (c.y + 0.1, np.zeros(5))})
