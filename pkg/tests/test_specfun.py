import mpmath
import numpy as np
import pytest
from scipy import special

from emfourier.specfun import (
    SphericalHarmonicIndex,
    check_hankel_ratio_bounds,
    check_z_over_h_lower_bound,
    hankel_bound_constants,
    sph_harmonic,
    sph_hankel1_all,
    sph_jn_all,
    spherical_bessel_j,
    spherical_bessel_y,
    spherical_hankel1,
    spherical_hankel1_derivative,
    vsh_U,
    vsh_V,
    z_all,
    z_fn,
)


def mp_jn(n, t, dps=60):
    with mpmath.workdps(dps):
        return float(mpmath.sqrt(mpmath.pi / (2 * mpmath.mpf(t))) * mpmath.besselj(n + mpmath.mpf(1) / 2, t))


class TestBessel:
    def test_j0_closed_form(self):
        assert spherical_bessel_j(0, 1.0) == pytest.approx(np.sin(1.0), rel=1e-14)

    def test_j1_small_argument(self):
        t = 1e-3
        assert spherical_bessel_j(1, t) == pytest.approx(t / 3 - t**3 / 30, rel=1e-12)

    def test_j25_at_10_against_high_precision(self):
        assert spherical_bessel_j(25, 10.0) == pytest.approx(mp_jn(25, 10.0), rel=1e-10)

    @pytest.mark.parametrize("t", [1e-4 * 1.5, 0.01, 0.3, 1.0, 7.5, 33.0, 60.0, 250.0, 999.0])
    def test_jn_all_orders_against_high_precision(self, t):
        got = sph_jn_all(60, t)
        for n in range(61):
            ref = mp_jn(n, t)
            if abs(ref) < 1e-290:
                continue
            assert got[n] == pytest.approx(ref, rel=1e-10), n

    def test_yn_against_scipy(self):
        for n in range(0, 40):
            for t in (0.1, 1.0, 10.0, 100.0):
                assert spherical_bessel_y(n, t) == pytest.approx(special.spherical_yn(n, t), rel=1e-10)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            spherical_bessel_j(0, 0.0)
        with pytest.raises(ValueError):
            spherical_hankel1(1, -1.0)
        with pytest.raises(ValueError):
            z_fn(1, 0.0)


class TestHankel:
    def test_h0_closed_form(self):
        assert abs(spherical_hankel1(0, 1.0) - (np.sin(1) - 1j * np.cos(1))) < 1e-12

    def test_h1_closed_form(self):
        ref = (np.sin(1) - np.cos(1)) - 1j * (np.sin(1) + np.cos(1))
        assert abs(spherical_hankel1(1, 1.0) - ref) < 1e-12

    @pytest.mark.parametrize("t", np.geomspace(0.1, 100, 13))
    def test_three_term_recurrence(self, t):
        h = sph_hankel1_all(41, t)
        n = np.arange(1, 41)
        res = np.abs(h[n - 1] + h[n + 1] - (2 * n + 1) / t * h[n]) / np.abs(h[n + 1])
        assert res.max() <= 1e-8

    @pytest.mark.parametrize("t", np.geomspace(0.1, 100, 9))
    def test_wronskian(self, t):
        for n in range(41):
            h = spherical_hankel1(n, t)
            dh = spherical_hankel1_derivative(n, t)
            w = h * np.conj(dh) - np.conj(h) * dh
            assert abs(w - (-2j / t**2)) <= 1e-8 * 2 / t**2

    def test_modulus_increasing_in_order(self):
        t = np.geomspace(0.05, 100, 60)
        h = np.abs(sph_hankel1_all(40, t))
        assert np.all(h[1:] >= h[:-1] * (1 - 1e-14))


class TestZ:
    def test_z0_at_one(self):
        ref = spherical_hankel1(0, 1.0) - spherical_hankel1(1, 1.0)
        assert abs(z_fn(0, 1.0) - ref) < 1e-12
        assert abs(z_fn(0, 1.0) - (np.cos(1) + 1j * np.sin(1))) < 1e-12

    def test_definition_through_derivative(self):
        for n in (1, 4, 17):
            for t in (0.3, 2.0, 40.0):
                ref = spherical_hankel1(n, t) + t * spherical_hankel1_derivative(n, t)
                assert abs(z_fn(n, t) - ref) <= 1e-12 * abs(ref)

    def test_shifted_form(self):
        t = np.array([0.5, 3.0, 20.0])
        h = sph_hankel1_all(31, t)
        n = np.arange(31)[:, None]
        assert np.allclose(z_all(30, t), (n + 1) * h[:-1] - t * h[1:], rtol=1e-13)

    def test_lower_bound_on_ratio(self):
        assert check_z_over_h_lower_bound(50, np.geomspace(0.05, 100, 400)) >= 0


class TestHarmonics:
    def test_y00(self):
        assert sph_harmonic(SphericalHarmonicIndex(0, 0), 0.7, 1.1) == pytest.approx(1 / np.sqrt(4 * np.pi))

    def test_y10(self):
        th = 0.4
        assert sph_harmonic(SphericalHarmonicIndex(1, 0), th, 2.0) == pytest.approx(np.sqrt(3 / (4 * np.pi)) * np.cos(th))

    def test_against_scipy(self):
        rng = np.random.default_rng(3)
        th = rng.uniform(0, np.pi, 20)
        ph = rng.uniform(0, 2 * np.pi, 20)
        for n in range(0, 21):
            for m in range(-n, n + 1):
                ref = special.sph_harm_y(n, m, th, ph)
                got = sph_harmonic(SphericalHarmonicIndex(n, m), th, ph)
                assert np.allclose(got, ref, atol=1e-12), (n, m)

    def test_conjugation_symmetry(self):
        th, ph = 1.1, 0.3
        for n, m in [(3, 2), (7, 5)]:
            a = sph_harmonic(SphericalHarmonicIndex(n, -m), th, ph)
            b = (-1) ** m * np.conj(sph_harmonic(SphericalHarmonicIndex(n, m), th, ph))
            assert abs(a - b) < 1e-14

    def test_index_invariant(self):
        with pytest.raises(ValueError):
            SphericalHarmonicIndex(2, 3)


class TestVectorHarmonics:
    def test_u10_on_equator(self):
        u = vsh_U(SphericalHarmonicIndex(1, 0), np.array([1.0, 0.0, 0.0]))
        # e_theta at (theta=pi/2, phi=0) is -e_z
        assert np.allclose(u, -np.sqrt(3 / (8 * np.pi)) * np.array([0, 0, -1.0]), atol=1e-15)

    def test_tangential_and_cross_product(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(50, 3))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        for n, m in [(1, -1), (4, 2), (12, -7), (20, 20)]:
            idx = SphericalHarmonicIndex(n, m)
            U = vsh_U(idx, x)
            V = vsh_V(idx, x)
            assert np.abs(np.einsum("pc,pc->p", U, x)).max() <= 1e-12
            assert np.abs(np.einsum("pc,pc->p", V, x)).max() <= 1e-12
            assert np.allclose(V, np.cross(x, U), atol=1e-15)

    def test_surface_gradient_by_finite_differences(self):
        # U = grad_S Y / sqrt(n(n+1)) checked along e_theta and e_phi
        n, m = 5, 3
        idx = SphericalHarmonicIndex(n, m)
        th, ph, h = 0.9, 0.4, 1e-6
        x = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
        dth = (sph_harmonic(idx, th + h, ph) - sph_harmonic(idx, th - h, ph)) / (2 * h)
        dph = (sph_harmonic(idx, th, ph + h) - sph_harmonic(idx, th, ph - h)) / (2 * h) / np.sin(th)
        e_t = np.array([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)])
        e_p = np.array([-np.sin(ph), np.cos(ph), 0.0])
        ref = (dth * e_t + dph * e_p) / np.sqrt(n * (n + 1))
        assert np.allclose(vsh_U(idx, x), ref, atol=1e-8)

    def test_degree_zero_rejected(self):
        with pytest.raises(ValueError):
            vsh_U(SphericalHarmonicIndex(0, 0), np.array([0, 0, 1.0]))
        with pytest.raises(ValueError):
            vsh_V(SphericalHarmonicIndex(0, 0), np.array([0, 0, 1.0]))

    def test_non_unit_direction_rejected(self):
        with pytest.raises(ValueError):
            vsh_U(SphericalHarmonicIndex(1, 0), np.array([0, 0, 2.0]))


class TestRatioBounds:
    def test_constants(self):
        c = hankel_bound_constants(1.0, 1.0, 1.2)
        assert c.c3 == pytest.approx(np.sqrt(15) / 4)
        e = np.exp(11 / 25)
        assert c.c4 == pytest.approx((25 + 11 * e) / (25 - 11 * e) * (16 / 15) ** 0.25)
        assert c.c1 >= 9 and c.c2 >= 4.5

    def test_all_estimates_hold(self):
        c = hankel_bound_constants(1.0, 1.0, 1.2)
        rep = check_hankel_ratio_bounds(c, np.linspace(2 * np.pi, 20 * np.pi, 60), 40)
        assert rep["min_slack"] >= 0, rep
        assert rep["h_ratio_n0"] >= 0

    def test_low_wavenumber_branch(self):
        c = hankel_bound_constants(1.0, 1.0, 1.2)
        rep = check_hankel_ratio_bounds(c, [2 * np.pi * 1e-2, 0.1, 0.5], 40)
        assert rep["z_over_h_low_k"] >= 0 and rep["min_slack"] >= 0
