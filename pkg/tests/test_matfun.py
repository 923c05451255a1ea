import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlt.errors import MatrixOverflowError, SingularBasisError
from mlt.matfun import (
    JordanBlockSpec,
    JordanFactoredMatrix,
    apply_jordan_factored,
    erlang_negated_subgenerator,
    expm,
    expm_ut_toeplitz,
    jordan_block_function,
    toeplitz_from_row,
    toeplitz_mul,
)

E1 = np.exp(-1.0)


def random_row(rng, n, scale=5.0):
    z = rng.normal(size=n) + 1j * rng.normal(size=n)
    return scale * z / np.maximum(1.0, np.abs(z)) * rng.uniform(0, 1, size=n)


class TestExpm:
    def test_zero_is_identity(self):
        np.testing.assert_array_equal(expm(np.zeros((2, 2))), np.eye(2))

    def test_diagonal(self):
        np.testing.assert_allclose(expm(np.diag([1.0, 2.0])), np.diag([np.e, np.e**2]), rtol=1e-14)

    def test_nilpotent(self):
        np.testing.assert_allclose(expm([[0, -1], [0, 0]]), [[1, -1], [0, 1]], atol=1e-15)

    def test_scalar_exact(self):
        assert expm([[0.3 + 2j]])[0, 0] == np.exp(0.3 + 2j)

    def test_overflow_raises(self):
        with pytest.raises(MatrixOverflowError):
            expm(np.diag([800.0, 1.0]))

    def test_rejects_non_square_and_nan(self):
        with pytest.raises(ValueError):
            expm(np.ones((2, 3)))
        with pytest.raises(ValueError):
            expm([[np.nan]])


class TestToeplitz:
    def test_from_row(self):
        np.testing.assert_array_equal(toeplitz_from_row([5.0]), [[5.0]])
        np.testing.assert_array_equal(toeplitz_from_row([1, 2]), [[1, 2], [0, 1]])
        np.testing.assert_array_equal(
            toeplitz_from_row([1, 2, 3]), [[1, 2, 3], [0, 1, 2], [0, 0, 1]]
        )

    def test_empty_row_rejected(self):
        with pytest.raises(ValueError):
            toeplitz_from_row([])

    def test_mul_matches_dense(self):
        rng = np.random.default_rng(3)
        a, b = random_row(rng, 6), random_row(rng, 6)
        dense = toeplitz_from_row(a) @ toeplitz_from_row(b)
        np.testing.assert_allclose(toeplitz_from_row(toeplitz_mul(a, b)), dense, atol=1e-13)


class TestExpmUtToeplitz:
    def test_scalar(self):
        np.testing.assert_array_equal(expm_ut_toeplitz([0.0]), [1.0])

    def test_nilpotent(self):
        np.testing.assert_allclose(expm_ut_toeplitz([0.0, -1.0]), [1.0, -1.0])

    def test_order3_frozen(self):
        # frozen from dense expm of the 3x3 expansion
        ref = expm(toeplitz_from_row([-1.0, -1.0, 0.0]))[0]
        np.testing.assert_allclose(ref, [E1, -E1, E1 / 2], rtol=1e-13)
        np.testing.assert_allclose(expm_ut_toeplitz([-1.0, -1.0, 0.0]), [E1, -E1, E1 / 2], rtol=1e-14)

    def test_batched(self):
        rng = np.random.default_rng(0)
        rows = np.stack([random_row(rng, 5) for _ in range(4)])
        out = expm_ut_toeplitz(rows)
        for r, o in zip(rows, out):
            np.testing.assert_allclose(o, expm_ut_toeplitz(r), rtol=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
    def test_matches_dense_expm(self, n, seed):
        rng = np.random.default_rng(seed)
        row = random_row(rng, n)
        dense = expm(toeplitz_from_row(row))
        fast = toeplitz_from_row(expm_ut_toeplitz(row))
        scale = np.max(np.abs(dense))
        np.testing.assert_allclose(fast, dense, rtol=1e-12, atol=1e-12 * scale)

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 8), seed=st.integers(0, 2**32 - 1))
    def test_commuting_sum(self, n, seed):
        rng = np.random.default_rng(seed)
        a, b = random_row(rng, n, 2.0), random_row(rng, n, 2.0)
        lhs = expm(toeplitz_from_row(a + b))
        rhs = expm(toeplitz_from_row(a)) @ expm(toeplitz_from_row(b))
        np.testing.assert_allclose(lhs, rhs, rtol=1e-11, atol=1e-11 * np.max(np.abs(lhs)))


class TestJordan:
    def test_block_function_examples(self):
        np.testing.assert_array_equal(jordan_block_function([2.5], 1.0, 1), [2.5])
        np.testing.assert_allclose(jordan_block_function([1, 1, 1], 0.0, 3), [1, 1, 0.5])
        np.testing.assert_allclose(jordan_block_function([E1, -E1], 1.0, 2), [E1, -E1])

    def test_block_function_reproduces_expm(self):
        for m in range(1, 8):
            lam, tau = 0.7 + 0.2j, 1.3
            derivs = [(-tau) ** j * np.exp(-tau * lam) for j in range(m)]
            row = jordan_block_function(derivs, lam, m)
            dense = expm(-tau * JordanBlockSpec(lam, m).dense())
            np.testing.assert_allclose(toeplitz_from_row(row), dense, rtol=1e-12, atol=1e-15)

    def test_diagonal_similarity(self):
        # Jordan block with eigenvalue c equals c V Q V^-1, V = diag((-c)^t)
        for n in range(1, 7):
            c = 1.7
            v = np.diag((-c) ** np.arange(n))
            q = toeplitz_from_row(erlang_negated_subgenerator(n))
            lhs = JordanBlockSpec(c, n).dense()
            np.testing.assert_allclose(c * v @ q @ np.linalg.inv(v), lhs, rtol=1e-14, atol=1e-14)

    def test_apply_identity_basis(self):
        jf = JordanFactoredMatrix(np.eye(1), [JordanBlockSpec(3.0, 1)])
        np.testing.assert_array_equal(apply_jordan_factored([[2.0]], jf), [[2.0]])

    def test_apply_diagonal_basis(self):
        jf = JordanFactoredMatrix(np.diag([1.0, -1.0]), [JordanBlockSpec(1.0), JordanBlockSpec(2.0)])
        np.testing.assert_allclose(apply_jordan_factored([[3.0], [4.0]], jf), np.diag([3.0, 4.0]))

    def test_apply_generic_matches_expm(self):
        p = np.array([[2.0, 1.0], [1.0, 1.0]])
        jf = JordanFactoredMatrix(p, [JordanBlockSpec(-0.5, 2)])
        a = jf.matrix()
        rows = [np.exp(-0.5) * np.array([1.0, 1.0])]
        np.testing.assert_allclose(apply_jordan_factored(rows, jf), expm(a), rtol=1e-13)

    def test_singular_basis(self):
        with pytest.raises(SingularBasisError):
            JordanFactoredMatrix([[1.0, 1.0], [1.0, 1.0]], [JordanBlockSpec(1.0, 2)])

    def test_block_size_mismatch(self):
        with pytest.raises(ValueError):
            JordanFactoredMatrix(np.eye(3), [JordanBlockSpec(1.0, 2)])
        with pytest.raises(ValueError):
            JordanBlockSpec(1.0, 0)


class TestErlangGenerator:
    @pytest.mark.parametrize(
        "n, row", [(1, [1.0]), (2, [1.0, -1.0]), (4, [1.0, -1.0, 0.0, 0.0])]
    )
    def test_rows(self, n, row):
        np.testing.assert_array_equal(erlang_negated_subgenerator(n), row)
