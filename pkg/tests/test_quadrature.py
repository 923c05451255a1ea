import numpy as np
import pytest

from mlt.errors import QuadratureError
from mlt.quadrature import (
    GAUSS_WEIGHTS,
    KRONROD_WEIGHTS,
    NODES,
    QuadratureConfig,
    gauss_legendre,
    integrate,
    integrate_on_partition,
)


class TestRule:
    def test_gauss_part_matches_leggauss(self):
        x, w = np.polynomial.legendre.leggauss(7)
        idx = GAUSS_WEIGHTS > 0
        np.testing.assert_allclose(NODES[idx], x, atol=1e-15)
        np.testing.assert_allclose(GAUSS_WEIGHTS[idx], w, atol=1e-15)

    def test_kronrod_exact_to_degree_22(self):
        for d in range(23):
            exact = (1.0 - (-1.0) ** (d + 1)) / (d + 1)
            assert abs(KRONROD_WEIGHTS @ NODES**d - exact) < 1e-14

    def test_gauss_exact_to_degree_13(self):
        for d in range(14):
            exact = (1.0 - (-1.0) ** (d + 1)) / (d + 1)
            assert abs(GAUSS_WEIGHTS @ NODES**d - exact) < 1e-14

    def test_symmetry(self):
        np.testing.assert_allclose(NODES, -NODES[::-1], atol=0)
        np.testing.assert_array_equal(KRONROD_WEIGHTS, KRONROD_WEIGHTS[::-1])


class TestAdaptive:
    def test_smooth(self):
        res = integrate(np.exp, 0.0, 1.0)
        assert abs(res.value - (np.e - 1)) < 1e-13

    def test_endpoint_singularity(self):
        res = integrate(lambda x: 1 / np.sqrt(x), 0.0, 1.0, QuadratureConfig(abs_tol=1e-10, rel_tol=1e-10))
        assert abs(res.value - 2.0) < 1e-9
        assert res.partition.size > 2

    def test_vector_valued(self):
        f = lambda x: np.stack([np.sin(x), np.cos(x) * 1j], axis=1)
        res = integrate(f, 0.0, np.pi)
        np.testing.assert_allclose(res.value, [2.0, 0.0], atol=1e-12)

    def test_partition_replay_is_exact(self):
        f = lambda x: np.stack([1 / (1 + x**4), x * np.exp(-x), np.log1p(x)], axis=1)
        res = integrate(f, 0.0, 7.0, QuadratureConfig(abs_tol=1e-13, rel_tol=1e-13))
        whole = integrate_on_partition(f, res.partition)
        np.testing.assert_array_equal(whole, res.value)
        per_entry = [integrate_on_partition(lambda x, j=j: f(x)[:, j], res.partition) for j in range(3)]
        np.testing.assert_array_equal(np.array(per_entry), res.value)

    def test_breakpoints(self):
        f = lambda x: np.abs(x - 0.3)
        res = integrate(f, 0.0, 1.0, breakpoints=[0.3])
        assert abs(res.value - (0.045 + 0.245)) < 1e-14
        assert res.partition.size == 3

    def test_nonconvergence_raises_with_diagnostics(self):
        with pytest.raises(QuadratureError) as info:
            integrate(lambda x: np.sin(1 / x), 1e-9, 1.0, QuadratureConfig(max_subdivisions=20))
        assert "value" in info.value.diagnostics

    def test_bad_interval(self):
        with pytest.raises(ValueError):
            integrate(np.exp, 1.0, 0.0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            QuadratureConfig(abs_tol=0.0)


def test_gauss_legendre_interval():
    x, w = gauss_legendre(10, 2.0, 5.0)
    assert abs(w.sum() - 3.0) < 1e-14
    assert abs(w @ x**3 - (5.0**4 - 2.0**4) / 4) < 1e-11
