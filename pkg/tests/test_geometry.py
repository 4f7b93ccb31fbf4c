import numpy as np
import pytest
from scipy.spatial import cKDTree

from emfourier.geometry import (
    fejer_weights,
    gauss_legendre_cube,
    observation_points,
    point_set_from_description,
    sphere_grid,
)
from emfourier.specfun import SphericalHarmonicIndex, sph_harmonic


class TestCube:
    @pytest.mark.parametrize("order", [2, 5, 24])
    def test_volume(self, order):
        assert gauss_legendre_cube(order).weights.sum() == pytest.approx(1.0, rel=1e-14)

    def test_second_moment(self):
        q = gauss_legendre_cube(2)
        assert np.sum(q.weights * q.nodes[:, 0] ** 2) == pytest.approx(1 / 12, rel=1e-14)

    def test_nodes_strictly_inside(self):
        q = gauss_legendre_cube(48, L=2.0)
        assert np.all(np.abs(q.nodes) < 1.0)
        assert np.all(q.weights > 0)

    def test_exact_to_degree_2n_minus_1(self):
        q = gauss_legendre_cube(4)
        x = q.nodes
        # x1^6 x2^2 x3^4 over (-1/2, 1/2)^3
        ref = (2 * 0.5**7 / 7) * (2 * 0.5**3 / 3) * (2 * 0.5**5 / 5)
        assert np.sum(q.weights * x[:, 0] ** 6 * x[:, 1] ** 2 * x[:, 2] ** 4) == pytest.approx(ref, rel=1e-13)

    def test_plane_wave_orthogonality(self):
        q = gauss_legendre_cube(48)
        x = q.nodes
        ls = [np.array(v) for v in [(3, 0, 0), (0, 0, 0), (10, 0, 0), (-4, 7, 5), (6, -6, 5)]]
        ph = [np.exp(2j * np.pi * x @ l) for l in ls]
        for i, a in enumerate(ph):
            for j, b in enumerate(ph):
                val = np.sum(q.weights * a * np.conj(b))
                assert abs(val - (i == j)) <= 1e-8

    def test_rejects_low_order(self):
        with pytest.raises(ValueError):
            gauss_legendre_cube(1)


class TestSphereGrid:
    def test_area(self):
        g = sphere_grid(200, 400, 1.2)
        assert g.weights.sum() == pytest.approx(4 * np.pi * 1.44, rel=1e-10)

    def test_layout(self):
        g = sphere_grid(4, 6, 1.0)
        assert np.allclose(g.theta_nodes, (np.arange(4) + 0.5) * np.pi / 4)
        assert np.allclose(g.phi_nodes, 2 * np.pi * np.arange(6) / 6)
        assert g.theta[1] == g.theta[0] and g.phi[6] == 0.0  # theta-major
        assert np.all((g.theta > 0) & (g.theta < np.pi))

    def test_weights_versus_plain_midpoint_rule(self):
        # sin(theta) pi/n is within O(n^-2) of the polar weights but misses the area by ~1e-5
        n = 200
        th = (np.arange(n) + 0.5) * np.pi / n
        plain = np.sin(th) * np.pi / n
        assert np.allclose(fejer_weights(n), plain, rtol=0, atol=2e-5)
        assert abs(plain.sum() / 2 - 1) > 1e-6
        assert abs(fejer_weights(n).sum() / 2 - 1) < 1e-13
        assert np.all(fejer_weights(n) > 0)

    def test_harmonic_integrals(self):
        g = sphere_grid(200, 400, 1.0)
        y10 = sph_harmonic(SphericalHarmonicIndex(1, 0), g.theta, g.phi)
        y53 = sph_harmonic(SphericalHarmonicIndex(5, 3), g.theta, g.phi)
        assert abs(np.sum(g.weights * y10)) <= 1e-12
        assert np.sum(g.weights * np.abs(y53) ** 2) == pytest.approx(1.0, abs=1e-8)

    def test_rejects_tiny_grid(self):
        with pytest.raises(ValueError):
            sphere_grid(1, 4)


class TestObservationPoints:
    def test_count_radius_centroid(self):
        pts = observation_points(10_000, 1.0)
        x = pts.points
        assert len(x) == 10_000
        assert np.allclose(np.linalg.norm(x, axis=1), 1.0)
        assert np.linalg.norm(x.mean(axis=0)) <= 1e-2

    def test_spacing_uniformity(self):
        x = observation_points(10_000, 1.0).points
        d, _ = cKDTree(x).query(x, k=2)
        nn = d[:, 1]
        assert nn.max() / nn.min() <= 2.0

    def test_deterministic_and_full_size(self):
        a = observation_points(80_000, 1.0)
        b = observation_points(80_000, 1.0)
        assert a.size == 80_000 and np.array_equal(a.points, b.points)
        assert a.weights.sum() == pytest.approx(4 * np.pi)

    def test_rejects_small_count(self):
        with pytest.raises(ValueError):
            observation_points(99)


def test_description_roundtrip():
    for ps in (sphere_grid(10, 20, 1.3), observation_points(500, 2.0)):
        back = point_set_from_description(ps.describe())
        assert np.array_equal(back.points, ps.points) and np.array_equal(back.weights, ps.weights)
    with pytest.raises(ValueError):
        point_set_from_description({"kind": "hexagons", "radius": 1})
