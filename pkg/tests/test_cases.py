import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bgkfd.cases import (
    CAVITY_REFERENCE_CENTERS,
    CavityConfig,
    CouetteConfig,
    PeriodicConfig,
    average_error,
    cavity_params,
    convergence_order,
    couette_analytic,
    couette_exact_field,
    find_vortex_centers,
    run_cavity,
    run_couette,
    run_periodic,
    smooth_periodic_field,
    streamfunction,
)
from bgkfd.errors import InvalidInputError, MetricUndefinedError
from bgkfd.numerics import GridSpec
from bgkfd.stepper import StopRule

NU = 0.01

# 30-digit mpmath summation of the first 10,000 series terms
COUETTE_GOLDEN = [
    (0.5, 0.5, 5.7330314375838782335e-8),
    (0.9, 1.0, 0.047950012218695346232),
    (0.25, 5.0, 0.0017628839011861193618),
]

# first verified build, 20x40, proposed closure
COUETTE_T5_AVERAGE_ERROR = 0.022643653920394084


class TestCouetteAnalytic:
    @pytest.mark.parametrize("y, t, expected", COUETTE_GOLDEN)
    def test_golden(self, y, t, expected):
        # the series is truncated at term bound 1e-12
        assert couette_analytic(y, t, NU, 1.0, 0.1) == pytest.approx(expected, rel=0, abs=1e-12)

    @pytest.mark.parametrize("t", [0.0, 0.3, 7.0])
    def test_bottom_is_zero(self, t):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert couette_analytic(0.0, t, NU, 1.0, 0.1) == 0.0

    @pytest.mark.parametrize("t", [0.1, 1.0, 50.0])
    def test_top_is_plate_speed(self, t):
        assert couette_analytic(1.0, t, NU, 1.0, 0.1) == pytest.approx(0.1, abs=1e-14)

    def test_long_time_limit(self):
        y = np.linspace(0, 2, 11)
        np.testing.assert_allclose(couette_analytic(y, 1e5, NU, 2.0, 0.1), 0.05 * y, atol=1e-15)

    def test_monotone_in_time(self):
        y = np.linspace(0.05, 0.95, 10)
        ts = [0.1, 0.5, 1, 2, 5, 10, 30, 100]
        vals = np.array([couette_analytic(y, t, NU, 1.0, 0.1) for t in ts])
        assert np.all(np.diff(vals, axis=0) >= -1e-13)

    def test_initial_time_warns(self):
        with pytest.warns(RuntimeWarning, match="capped"):
            couette_analytic(0.5, 0.0, NU, 1.0, 0.1)

    @pytest.mark.parametrize("args", [(-0.1, 1.0), (1.2, 1.0), (0.5, -1.0)])
    def test_domain(self, args):
        with pytest.raises(InvalidInputError):
            couette_analytic(args[0], args[1], NU, 1.0, 0.1)

    def test_exact_field_shape(self):
        cfg = CouetteConfig(nx=5, ny=10)
        grid = GridSpec.from_extent(5, 10, periodic_x=True)
        u = couette_exact_field(cfg, grid, 2.0)
        assert u.shape == (2, 5, 10)
        assert np.all(u[1] == 0)
        np.testing.assert_array_equal(u[0, 0], u[0, 3])


class TestAverageError:
    def test_zero(self, rng):
        u = rng.standard_normal((2, 6, 7))
        assert average_error(u, u) == 0.0

    def test_uniform_scaling(self, rng):
        u = rng.standard_normal((2, 6, 7))
        assert average_error(1.01 * u, u) == pytest.approx(0.01, abs=1e-15)

    @given(st.floats(-0.5, 0.5))
    @settings(max_examples=50, deadline=None)
    def test_scale_reporting(self, eps):
        u = np.random.default_rng(0).standard_normal((2, 4, 5))
        assert average_error((1 + eps) * u, u) == pytest.approx(abs(eps), abs=1e-15)

    def test_floor_excludes_nodes(self):
        ana = np.zeros((2, 3))
        ana[0] = [0.0, 1.0, 2.0]
        num = ana.copy()
        num[0, 0] = 5.0  # would divide by zero
        num[0, 2] = 2.2
        assert average_error(num, ana, floor=1e-13) == pytest.approx(0.05)

    def test_undefined(self):
        with pytest.raises(MetricUndefinedError):
            average_error(np.ones((2, 3)), np.zeros((2, 3)))

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            average_error(np.ones((2, 3)), np.ones((2, 4)))


class TestConvergenceOrder:
    @pytest.mark.parametrize("p", [1.0, 2.0, 2.7])
    def test_power_law(self, p):
        hs = [0.1, 0.05, 0.025, 0.0125]
        assert convergence_order([(h, 3.0 * h**p) for h in hs]) == pytest.approx(p, abs=1e-12)

    def test_non_monotone(self):
        with pytest.raises(InvalidInputError):
            convergence_order([(0.1, 1.0), (0.05, 0.3), (0.08, 0.5)])

    def test_too_few(self):
        with pytest.raises(InvalidInputError):
            convergence_order([(0.1, 1.0)])


def solid_body(n=41):
    grid = GridSpec.from_extent(n, n)
    x, y = np.meshgrid(*grid.coords(), indexing="ij")
    return grid, np.stack([-(y - 0.5), x - 0.5])


class TestStreamfunction:
    def test_zero_flow(self):
        grid = GridSpec.from_extent(5, 6)
        np.testing.assert_array_equal(streamfunction(np.zeros((2, 5, 6)), grid), 0.0)

    def test_uniform_x(self):
        grid = GridSpec.from_extent(5, 6)
        u = np.zeros((2, 5, 6))
        u[0] = 1.0
        np.testing.assert_allclose(streamfunction(u, grid), np.broadcast_to(grid.coords()[1], (5, 6)), atol=1e-15)

    def test_solid_body_field(self):
        grid, u = solid_body()
        x, y = np.meshgrid(*grid.coords(), indexing="ij")
        # exact potential, shifted to vanish at the origin
        exact = -0.5 * ((x - 0.5) ** 2 + (y - 0.5) ** 2) + 0.25
        np.testing.assert_allclose(streamfunction(u, grid), exact, atol=1e-3)

    def test_second_order_recovery(self):
        def err(n):
            grid = GridSpec.from_extent(n, n)
            x, y = np.meshgrid(*grid.coords(), indexing="ij")
            psi = np.sin(np.pi * x) ** 2 * np.sin(np.pi * y) ** 2
            ux = 2 * np.pi * np.sin(np.pi * x) ** 2 * np.sin(np.pi * y) * np.cos(np.pi * y)
            uy = -2 * np.pi * np.sin(np.pi * x) * np.cos(np.pi * x) * np.sin(np.pi * y) ** 2
            return np.abs(streamfunction(np.stack([ux, uy]), grid) - psi).max()

        assert err(33) / err(65) == pytest.approx(4.0, rel=0.05)


class TestVortexCenters:
    def test_solid_body(self):
        grid, u = solid_body()
        centers = find_vortex_centers(streamfunction(u, grid), grid)
        assert len(centers) == 1
        c = centers[0]
        assert np.allclose(c.position, (0.5, 0.5), atol=grid.dx / 2)
        assert c.sense == 1  # counter-clockwise: psi maximum

    def test_clockwise(self):
        grid, u = solid_body()
        c = find_vortex_centers(streamfunction(-u, grid), grid)[0]
        assert c.sense == -1

    def test_off_grid_refinement(self):
        grid = GridSpec.from_extent(31, 31)
        x, y = np.meshgrid(*grid.coords(), indexing="ij")
        psi = -((x - 0.4123) ** 2 + 2 * (y - 0.6377) ** 2)
        c = find_vortex_centers(psi, grid)[0]
        assert c.position == pytest.approx((0.4123, 0.6377), abs=1e-12)

    def test_monotone_has_none(self):
        grid = GridSpec.from_extent(9, 9)
        x, y = np.meshgrid(*grid.coords(), indexing="ij")
        assert find_vortex_centers(x + 2 * y, grid) == []
        assert find_vortex_centers(np.zeros((9, 9)), grid) == []

    def test_sorted_by_strength_and_noise(self):
        grid = GridSpec.from_extent(61, 31)
        x, y = np.meshgrid(*grid.coords(), indexing="ij")
        bump = lambda cx, a: a * np.exp(-((x - cx) ** 2 + (y - 0.5) ** 2) / 0.01)
        psi = bump(0.25, -1.0) + bump(0.75, 0.3) + bump(0.5, 1e-6)
        centers = find_vortex_centers(psi, grid)
        assert [c.sense for c in centers] == [-1, 1]
        assert centers[0].position[0] == pytest.approx(0.25, abs=grid.dx / 2)

    @given(st.floats(-10, 10), st.floats(0.01, 100))
    @settings(max_examples=30, deadline=None)
    def test_invariance(self, shift, scale):
        grid, u = solid_body(21)
        psi = streamfunction(u, grid)
        base = find_vortex_centers(psi, grid)
        other = find_vortex_centers(scale * psi + shift, grid)
        assert len(base) == len(other)
        for a, b in zip(base, other):
            assert a.position == pytest.approx(b.position, abs=1e-9)
            assert a.sense == b.sense


class TestCouetteRun:
    def test_report_and_golden(self):
        cfg = CouetteConfig(sample_times=(0.5, 5.0))
        r = run_couette(cfg, closures=("proposed", "guo"), error_times=(1.0,))
        assert [t for t, _ in r.error_history["proposed"]] == pytest.approx([0.5, 1.0, 5.0])
        assert [p[0] for p in r.profiles["guo"]] == pytest.approx([0.5, 5.0])
        e5 = r.error_history["proposed"][-1][1]
        assert e5 == pytest.approx(COUETTE_T5_AVERAGE_ERROR, rel=1e-8)
        t, num, ana = r.profiles["proposed"][-1]
        assert np.abs(num - ana).max() < 0.01 * cfg.u0
        assert r.y[-1] == 1.0 and len(r.y) == cfg.ny

    def test_defaults(self):
        cfg = CouetteConfig()
        assert (cfg.Re, cfg.zeta, cfg.theta, cfg.u0) == (10.0, 0.9, 0.5, 0.1)
        assert cfg.sample_times == (0.5, 5.0, 10.0, 30.0)
        assert cfg.tau == pytest.approx(0.03)

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            CouetteConfig(Re=0)


class TestCavityRun:
    def test_params(self):
        cfg = CavityConfig()
        grid, p, spec, s = cavity_params(cfg)
        assert grid.shape == (128, 128)
        assert p.dt == pytest.approx(0.1 * grid.dy)
        assert p.tau == pytest.approx(3 * 0.1 / 400)
        assert p.tau_star == p.tau
        assert set(CAVITY_REFERENCE_CENTERS) == {400, 1000, 3000, 5000}

    def test_short_run_has_primary_vortex(self):
        cfg = CavityConfig(n=33, Re=100)
        r = run_cavity(cfg, stop=StopRule("time", t_end=20.0))
        assert r.primary is not None
        x, y = r.primary.position
        assert 0.5 < x < 0.75 and 0.6 < y < 0.9
        assert r.primary.strength < 0
        # the wall velocity is a moment of the closed populations, so only nearly zero
        assert np.abs(r.psi[:, 0]).max() < 1e-4 * abs(r.primary.strength)

    def test_steady_cap(self):
        r = run_cavity(CavityConfig(n=17, Re=100, max_steps=200))
        assert not r.converged
        assert r.state.step_index == 200
        assert len(r.residuals) == 2


class TestPeriodic:
    def test_smooth_field_is_periodic(self, rng):
        grid = GridSpec.from_extent(17, 13, periodic_x=True, periodic_y=True)
        f = smooth_periodic_field(grid, rng, 0.3)
        np.testing.assert_allclose(f[-1], f[0], atol=1e-14)
        np.testing.assert_allclose(f[:, -1], f[:, 0], atol=1e-14)
        assert np.abs(f).max() == pytest.approx(0.3)

    def test_mass_drift(self):
        r = run_periodic(PeriodicConfig(nx=20, ny=20, n_steps=300))
        assert r.max_drift <= 1e-12
        assert [m[0] for m in r.mass] == [0, 100, 200, 300]
