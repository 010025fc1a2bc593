import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bgkfd.errors import DegenerateDensityError, InvalidInputError
from bgkfd.lattice import (
    D2Q9,
    SchemeParams,
    equilibrium,
    f_from_g,
    g_from_f,
    moments,
    tau_from_viscosity,
)

W = np.array([4 / 9, 1 / 9, 1 / 9, 1 / 9, 1 / 9, 1 / 36, 1 / 36, 1 / 36, 1 / 36])


class TestLatticeModel:
    def test_weights_sum_to_one(self):
        assert abs(D2Q9.weights.sum() - 1.0) <= 1e-15

    def test_first_moment_vanishes(self):
        np.testing.assert_allclose(D2Q9.weights @ D2Q9.velocities, 0.0, atol=1e-15)

    def test_second_moment_isotropic(self):
        e = D2Q9.velocities
        m2 = np.einsum("i,ia,ib->ab", D2Q9.weights, e, e)
        np.testing.assert_allclose(m2, np.eye(2) / 3, atol=1e-15)

    def test_velocity_classes(self):
        sq = (D2Q9.velocities**2).sum(axis=1)
        assert sq[0] == 0
        assert np.all(sq[1:5] == 1)
        assert np.all(sq[5:] == 2)
        # weight classes follow |e|^2
        assert np.all(D2Q9.weights[1:5] == 1 / 9) and np.all(D2Q9.weights[5:] == 1 / 36)

    def test_opposite(self):
        np.testing.assert_array_equal(D2Q9.velocities[D2Q9.opposite], -D2Q9.velocities)

    def test_sound_speed(self):
        assert D2Q9.cs2 == 1 / 3
        assert D2Q9.sound_speed == pytest.approx(1 / np.sqrt(3), rel=1e-15)


class TestEquilibrium:
    def test_rest_state_is_weights(self):
        np.testing.assert_allclose(equilibrium(1.0, (0.0, 0.0)), W, rtol=0, atol=1e-17)

    def test_scalar_value(self):
        feq = equilibrium(1.0, (0.1, 0.0))
        # (1/9) * (1 + 0.3 + 0.045 - 0.015)
        assert feq[1] == pytest.approx(0.14777777777777777, abs=1e-16)

    def test_linear_in_density(self):
        np.testing.assert_array_equal(equilibrium(2.0, (0.1, 0.0)), 2.0 * equilibrium(1.0, (0.1, 0.0)))

    def test_grid_broadcast(self, rng):
        rho = 1 + 0.1 * rng.random((4, 5))
        u = 0.1 * rng.standard_normal((2, 4, 5))
        feq = equilibrium(rho, u)
        assert feq.shape == (9, 4, 5)
        np.testing.assert_allclose(feq[:, 2, 3], equilibrium(rho[2, 3], u[:, 2, 3]), rtol=1e-15)

    @pytest.mark.parametrize("rho,u", [(np.nan, (0, 0)), (1.0, (np.inf, 0.0))])
    def test_non_finite_rejected(self, rho, u):
        with pytest.raises(InvalidInputError):
            equilibrium(rho, u)

    def test_non_positive_density_rejected(self):
        with pytest.raises(InvalidInputError):
            equilibrium(0.0, (0, 0))


class TestMoments:
    def test_recovers_equilibrium_state(self):
        m = moments(equilibrium(1.0, (0.1, 0.0)))
        assert abs(m.rho - 1.0) <= 1e-14
        np.testing.assert_allclose(m.u, (0.1, 0.0), atol=1e-14)

    def test_weights(self):
        m = moments(W)
        assert m.rho == pytest.approx(1.0, abs=1e-15)
        np.testing.assert_allclose(m.u, 0.0, atol=1e-16)

    def test_brute_force_sum(self):
        f = equilibrium(1.2, (0.05, -0.03))
        rho = sum(f[i] for i in range(9))
        jx = sum(f[i] * D2Q9.velocities[i, 0] for i in range(9))
        jy = sum(f[i] * D2Q9.velocities[i, 1] for i in range(9))
        m = moments(f)
        assert abs(m.rho - 1.2) <= 1e-14 and abs(m.rho - rho) <= 1e-15
        np.testing.assert_allclose(m.u, (0.05, -0.03), atol=1e-14)
        np.testing.assert_allclose(m.u, (jx / rho, jy / rho), atol=1e-16)

    def test_degenerate_density(self):
        with pytest.raises(DegenerateDensityError):
            moments(-W)

    @settings(max_examples=200, deadline=None)
    @given(
        rho=st.floats(0.5, 2.0),
        ux=st.floats(-0.2, 0.2),
        uy=st.floats(-0.2, 0.2),
    )
    def test_moments_inverts_equilibrium(self, rho, ux, uy):
        m = moments(equilibrium(rho, (ux, uy)))
        assert abs(m.rho - rho) <= 1e-13
        np.testing.assert_allclose(m.u, (ux, uy), atol=1e-13)

    @settings(max_examples=50, deadline=None)
    @given(rho=st.floats(0.5, 2.0), ux=st.floats(-0.2, 0.2), uy=st.floats(-0.2, 0.2), k=st.floats(0.1, 10.0))
    def test_homogeneous_in_density(self, rho, ux, uy, k):
        np.testing.assert_allclose(equilibrium(k * rho, (ux, uy)), k * equilibrium(rho, (ux, uy)), rtol=1e-15)


class TestTransforms:
    def test_equilibrium_is_fixed(self):
        p = SchemeParams(tau=1.0, dt=1.0)
        feq = equilibrium(1.0, (0.05, 0.02))
        np.testing.assert_array_equal(g_from_f(feq, feq, p), feq)

    def test_zero_implicitness(self, rng):
        p = SchemeParams(tau=1.0, dt=1.0, theta=0.0)
        f = rng.random(9)
        np.testing.assert_array_equal(g_from_f(f, W, p), f)

    def test_example_values(self):
        p = SchemeParams(tau=1.0, dt=1.0, theta=0.5)
        feq = equilibrium(1.0, (0.1, 0.0))
        g = g_from_f(feq + 0.01, feq, p)
        np.testing.assert_allclose(g, feq + 0.015, atol=1e-16)
        np.testing.assert_allclose(f_from_g(feq + 0.015, feq, p), feq + 0.01, atol=1e-16)
        np.testing.assert_array_equal(f_from_g(feq, feq, p), feq)

    @pytest.mark.parametrize("theta", [0.0, 0.25, 0.5, 1.0])
    @pytest.mark.parametrize("pi", [1e-3, 0.1, 1.0, 5.0, 10.0])
    def test_round_trip(self, rng, theta, pi):
        p = SchemeParams(tau=1.0, dt=pi, theta=theta)
        f = rng.random((9, 50))
        feq = rng.random((9, 50))
        np.testing.assert_allclose(f_from_g(g_from_f(f, feq, p), feq, p), f, rtol=0, atol=1e-14)


class TestSchemeParams:
    def test_defaults(self):
        p = SchemeParams(tau=0.03, dt=0.01)
        assert p.theta == 0.5 and p.zeta == 0.9 and p.tau_star == 0.03

    def test_pi_tracks_mutation(self):
        p = SchemeParams(tau=0.5, dt=0.1)
        assert p.pi_ratio == pytest.approx(0.2)
        p.dt = 0.25
        assert p.pi_ratio == 0.5
        p.tau = 1.0
        assert p.pi_ratio == 0.25

    @pytest.mark.parametrize("kw", [dict(theta=1.5), dict(zeta=-0.1), dict(dx=0.0), dict(tau_star=-1.0)])
    def test_range_errors(self, kw):
        with pytest.raises(InvalidInputError):
            SchemeParams(tau=1.0, dt=0.1, **kw)


class TestViscosity:
    @pytest.mark.parametrize("nu,tau", [(1 / 3, 1.0), (0.01, 0.03), (D2Q9.cs2, 1.0)])
    def test_values(self, nu, tau):
        assert tau_from_viscosity(nu) == pytest.approx(tau, rel=1e-15)

    @pytest.mark.parametrize("nu", [0.0, -1.0, np.nan])
    def test_invalid(self, nu):
        with pytest.raises(InvalidInputError):
            tau_from_viscosity(nu)
