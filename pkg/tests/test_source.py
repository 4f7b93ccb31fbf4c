import json

import numpy as np
import pytest

from emfourier.geometry import gauss_legendre_cube
from emfourier.source import (
    FourierSource,
    evaluate,
    evaluate_on_grid,
    example_source,
    is_admissible,
    lattice_frame,
    lattice_vectors,
    project_scalar_fields,
    sobolev_norm,
    truncate,
)


def random_source(p, N, seed=0):
    rng = np.random.default_rng(seed)
    lat = lattice_vectors(N)
    a = rng.normal(size=len(lat)) + 1j * rng.normal(size=len(lat))
    b = rng.normal(size=len(lat)) + 1j * rng.normal(size=len(lat))
    b[~lat.any(axis=1)] = 0
    return FourierSource(p, 1.0, lat, a, b)


class TestLattice:
    def test_counts_and_order(self):
        lat = lattice_vectors(2)
        assert len(lat) == 33
        assert [tuple(v) for v in lat] == sorted(tuple(v) for v in lat)
        assert len(lattice_vectors(1, include_zero=False)) == 6

    def test_admissibility(self, p1, p3):
        ok, c = is_admissible(p1, 10)
        assert ok and 0 < c <= 1
        assert is_admissible(p3, 10)[0]
        assert not is_admissible(np.array([1.0, 0, 0]), 1)[0]
        with pytest.raises(ValueError):
            is_admissible(np.array([1.0, 1.0, 0]), 3)

    def test_frame_orthogonality_and_decomposition(self, p1):
        for l in lattice_vectors(4, include_zero=False):
            fr = lattice_frame(p1, l)
            assert abs(fr.l @ fr.v) < 1e-12 and abs(fr.l @ fr.w) < 1e-12 and abs(fr.v @ fr.w) < 1e-12
            l2 = float(l @ l)
            assert np.allclose(p1, (p1 @ l) / l2 * l + fr.w / l2, atol=1e-14)

    def test_double_curl_of_plane_wave(self, p1):
        # curl curl (u phi_l) = (4 pi^2 / L^2) |l|^2 u phi_l for u in {v_l, w_l}
        l = np.array([2, -1, 3])
        fr = lattice_frame(p1, l)
        x0 = np.array([0.11, -0.2, 0.3])
        h = 1e-4

        def field(u):
            return lambda x: u * np.exp(2j * np.pi * (x @ l))

        def curl(F):
            def c(x):
                J = np.zeros((3, 3), complex)
                for j in range(3):
                    e = np.zeros(3)
                    e[j] = h
                    J[:, j] = (F(x + e) - F(x - e)) / (2 * h)
                return np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])
            return c

        for u in (fr.v, fr.w):
            got = curl(curl(field(u)))(x0)
            ref = 4 * np.pi**2 * (l @ l) * field(u)(x0)
            assert np.linalg.norm(got - ref) <= 1e-6 * np.linalg.norm(ref)


class TestFourierSource:
    def test_b_at_zero_rejected(self, p1):
        with pytest.raises(ValueError):
            FourierSource(p1, 1.0, [[0, 0, 0]], [1.0], [1.0])

    def test_constant_mode(self, p1):
        s = FourierSource.from_dicts(p1, 1.0, {(0, 0, 0): 2.0})
        x = np.random.default_rng(0).uniform(-0.5, 0.5, (7, 3))
        assert np.allclose(evaluate(s, x), 2 * p1)

    def test_single_b_mode_is_divergence_free(self, p1):
        l = (1, 1, 0)
        s = FourierSource.from_dicts(p1, 1.0, {}, {l: 1.0})
        x = np.array([[0.1, 0.2, -0.3]])
        ref = 2j * np.pi * np.cross(p1, l) * np.exp(2j * np.pi * (x @ np.array(l)))
        assert np.allclose(evaluate(s, x), ref)

    def test_grid_evaluation_matches_pointwise(self, p1):
        s = random_source(p1, 3)
        x1, x2, x3 = np.linspace(-0.5, 0.5, 5), np.linspace(-0.5, 0.5, 4), np.linspace(-0.5, 0.5, 3)
        X = np.stack(np.meshgrid(x1, x2, x3, indexing="ij"), axis=-1)
        assert np.allclose(evaluate_on_grid(s, x1, x2, x3), evaluate(s, X), atol=1e-12)

    def test_json_roundtrip(self, p1):
        s = random_source(p1, 2)
        back = FourierSource.from_dict(json.loads(s.to_json()))
        assert np.array_equal(back.lattice, s.lattice)
        assert np.array_equal(back.a, s.a) and np.array_equal(back.b, s.b)
        with pytest.raises(ValueError):
            FourierSource.from_dict({"p": [1, 0, 0]})

    def test_truncate(self, p1):
        s = random_source(p1, 4)
        t = truncate(s, 2)
        assert np.all((t.lattice**2).sum(axis=1) <= 4)
        assert np.array_equal(truncate(t, 2).a, t.a)
        assert np.array_equal(truncate(s, 4).a, s.a)
        assert len(truncate(s, 0).a) == 1


class TestNorm:
    def test_single_a_mode(self, p1):
        assert sobolev_norm(FourierSource.from_dicts(p1, 1.0, {(1, 0, 0): 1.0}), 0) == pytest.approx(1.0)

    def test_single_b_mode(self, p1):
        beta = np.linalg.norm(np.cross(p1, [1, 1, 0]))
        s = FourierSource.from_dicts(p1, 1.0, {}, {(1, 1, 0): 1.0})
        assert sobolev_norm(s, 1) == pytest.approx(2 * np.pi * beta * np.sqrt(3))

    def test_zero_order_norm_is_l2_norm(self, p1):
        s = random_source(p1, 2, seed=4)
        q = gauss_legendre_cube(16)
        J = evaluate(s, q.nodes)
        assert sobolev_norm(s, 0) ** 2 == pytest.approx(np.sum(q.weights * np.sum(np.abs(J) ** 2, axis=1)), rel=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_truncation_estimate(self, p1, seed):
        s = random_source(p1, 6, seed)
        sigma, mu = 2.0, 0.5
        for N in range(1, 6):
            t = truncate(s, N)
            tail = FourierSource(p1, 1.0, s.lattice, s.a - _pad(t, s).a, s.b - _pad(t, s).b)
            assert sobolev_norm(tail, mu) <= N ** (mu - sigma) * sobolev_norm(s, sigma)

    def test_truncated_norm_monotone(self, p1):
        s = random_source(p1, 5, 9)
        norms = [sobolev_norm(truncate(s, N), 1.0) for N in range(6)]
        assert all(a <= b for a, b in zip(norms, norms[1:])) and norms[-1] <= sobolev_norm(s, 1.0)


def _pad(t, s):
    keep = (s.lattice**2).sum(axis=1) <= (t.lattice**2).sum(axis=1).max()
    return FourierSource(s.p, s.L, s.lattice, np.where(keep, s.a, 0), np.where(keep, s.b, 0))


class TestProjection:
    def test_constant(self, p1):
        s = project_scalar_fields(p1, lambda x: np.full(x.shape[:-1], 3.0), None, gauss_legendre_cube(16), 2)
        assert s.coefficient((0, 0, 0))[0] == pytest.approx(3.0)
        others = s.a[s.lattice.any(axis=1)]
        assert np.abs(others).max() < 1e-13

    def test_cosine(self, p1):
        f = lambda x: np.cos(2 * np.pi * x[..., 0])
        s = project_scalar_fields(p1, f, None, gauss_legendre_cube(16), 2)
        assert s.coefficient((1, 0, 0))[0] == pytest.approx(0.5, abs=1e-13)
        assert s.coefficient((-1, 0, 0))[0] == pytest.approx(0.5, abs=1e-13)
        mask = np.abs(s.lattice).sum(axis=1) != 1
        assert np.abs(s.a[mask]).max() < 1e-13

    def test_example1_roundtrip(self):
        ex = example_source(1)
        s = project_scalar_fields(ex.p, ex.f, ex.g, gauss_legendre_cube(48), 10)
        q = gauss_legendre_cube(20)
        Jref = ex.J(q.nodes)
        err = np.sqrt(np.sum(q.weights * np.sum(np.abs(evaluate(s, q.nodes) - Jref) ** 2, axis=1)))
        assert err / np.sqrt(np.sum(q.weights * np.sum(Jref**2, axis=1))) <= 0.02

    def test_example1_regression_fixture(self):
        ex = example_source(1)
        s = project_scalar_fields(ex.p, ex.f, ex.g, gauss_legendre_cube(48), 2)
        # a_0 is the cube mean of f1; the Gaussian is negligible on the cube faces
        assert s.coefficient((0, 0, 0))[0].real == pytest.approx(np.sqrt(6) * (np.pi / 80) ** 1.5, rel=1e-5)
        b0 = s.coefficient((1, 0, 0))[1]
        assert b0.real == pytest.approx(np.sqrt(6) / 10 * (np.pi / 40) ** 1.5 * np.exp(-np.pi**2 / 40), rel=1e-5)
        # real fields give conjugate-symmetric coefficients
        for l in lattice_vectors(2):
            a, b = s.coefficient(l)
            am, bm = s.coefficient(-l)
            assert abs(a - np.conj(am)) < 1e-14 and abs(b - np.conj(bm)) < 1e-14


class TestExamples:
    def test_example2_values(self):
        ex = example_source(2)
        f = ex.f(np.array([[0.2, 0.2, 0.0], [-0.25, -0.25, 0.0], [0.45, -0.45, 0.3]]))
        assert np.allclose(f, [np.sqrt(6), np.sqrt(6) / 2, 0])
        assert ex.g is None

    def test_example1_peak(self):
        ex = example_source(1)
        assert ex.f(np.array([0.15, 0.15, 0.0])) == pytest.approx(np.sqrt(6))

    def test_example3(self, p3):
        ex = example_source(3)
        assert np.allclose(ex.p, p3)
        assert ex.f(np.array([0.15, 0.15, 0.0])) == pytest.approx(3.0)
        assert ex.g(np.zeros(3)) == pytest.approx(0.3)

    def test_gradient_of_g(self):
        ex = example_source(1)
        x = np.array([0.1, -0.2, 0.05])
        h = 1e-6
        fd = np.array([(ex.g(x + h * e) - ex.g(x - h * e)) / (2 * h) for e in np.eye(3)])
        assert np.allclose(ex.grad_g(x), fd, atol=1e-8)

    def test_unknown_id(self):
        with pytest.raises(ValueError):
            example_source(4)
