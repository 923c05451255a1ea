"""Matrix-exponential and matrix-function kernels.

Dense matrices are plain complex ``numpy`` arrays. An upper-triangular
Toeplitz matrix is carried by its first row, a 1-D array ``row`` whose dense
expansion has entry ``(i, j) = row[j - i]`` for ``j >= i``. Every function
in this module is pure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import MatrixOverflowError, SingularBasisError

__all__ = [
    "JordanBlockSpec",
    "JordanFactoredMatrix",
    "as_complex_matrix",
    "expm",
    "expm_ut_toeplitz",
    "toeplitz_from_row",
    "toeplitz_mul",
    "jordan_block_function",
    "apply_jordan_factored",
    "erlang_negated_subgenerator",
    "bidiagonal_row",
]

# Largest basis condition number accepted for a Jordan factorization.
MAX_BASIS_CONDITION = 1e12


def as_complex_matrix(m) -> np.ndarray:
    """Validate ``m`` as a finite square matrix and return a complex copy."""
    a = np.array(m, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


@dataclass(frozen=True)
class JordanBlockSpec:
    """A Jordan block: ``eigenvalue`` on the diagonal, ones on the superdiagonal."""

    eigenvalue: complex
    size: int = 1

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ValueError(f"Jordan block size must be a positive integer, got {self.size}")
        object.__setattr__(self, "size", int(self.size))
        object.__setattr__(self, "eigenvalue", complex(self.eigenvalue))
        if not np.isfinite(self.eigenvalue):
            raise ValueError("Jordan block eigenvalue must be finite")

    def row(self) -> np.ndarray:
        """First row of the block itself."""
        return bidiagonal_row(self.eigenvalue, 1.0, self.size)

    def dense(self) -> np.ndarray:
        return toeplitz_from_row(self.row())


@dataclass(frozen=True, eq=False)
class JordanFactoredMatrix:
    """A matrix supplied together with its Jordan factorization ``P J P^-1``.

    The factorization is never computed here; callers provide it.
    """

    basis: np.ndarray
    blocks: tuple
    basis_inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = as_complex_matrix(self.basis)
        blocks = tuple(self.blocks)
        if not blocks or not all(isinstance(b, JordanBlockSpec) for b in blocks):
            raise ValueError("blocks must be a non-empty sequence of JordanBlockSpec")
        if sum(b.size for b in blocks) != p.shape[0]:
            raise ValueError(
                f"block sizes sum to {sum(b.size for b in blocks)}, basis has order {p.shape[0]}"
            )
        cond = np.linalg.cond(p)
        if not np.isfinite(cond) or cond > MAX_BASIS_CONDITION:
            raise SingularBasisError(f"Jordan basis is singular or ill-conditioned (cond={cond:.3g})")
        p.setflags(write=False)
        inv = np.linalg.inv(p)
        inv.setflags(write=False)
        object.__setattr__(self, "basis", p)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "basis_inverse", inv)

    @property
    def order(self) -> int:
        return self.basis.shape[0]

    def matrix(self) -> np.ndarray:
        """Dense ``P J P^-1``."""
        return apply_jordan_factored([b.row() for b in self.blocks], self)


def expm(m) -> np.ndarray:
    """Matrix exponential of a dense square matrix.

    Uses scaling and squaring with a degree-13 Pade approximant
    (``scipy.linalg.expm``); 1x1 inputs are evaluated exactly.

    Raises
    ------
    MatrixOverflowError
        If any entry of the result is not finite.
    """
    a = as_complex_matrix(m)
    with np.errstate(over="ignore", invalid="ignore"):
        if a.shape == (1, 1):
            out = np.exp(a)
        else:
            out = scipy.linalg.expm(a)
    if not np.all(np.isfinite(out)):
        raise MatrixOverflowError("matrix exponential overflowed")
    return out


def toeplitz_from_row(r) -> np.ndarray:
    """Dense upper-triangular Toeplitz matrix with first row ``r``."""
    r = np.asarray(r, dtype=complex)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("row must be a non-empty 1-D vector")
    n = r.size
    i, j = np.indices((n, n))
    out = np.where(j >= i, r[np.clip(j - i, 0, n - 1)], 0)
    return out.astype(complex)


def bidiagonal_row(diagonal: complex, superdiagonal: complex, n: int) -> np.ndarray:
    """First row ``[diagonal, superdiagonal, 0, ...]`` of length ``n``."""
    row = np.zeros(n, dtype=complex)
    row[0] = diagonal
    if n > 1:
        row[1] = superdiagonal
    return row


def toeplitz_mul(a, b) -> np.ndarray:
    """Product of upper-triangular Toeplitz matrices given by first rows.

    Broadcasts over leading axes; the last axis is the row.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    n = a.shape[-1]
    if b.shape[-1] != n:
        raise ValueError("Toeplitz factors must have the same order")
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (n,)
    out = np.zeros(shape, dtype=np.result_type(a, b, complex))
    for k in range(n):
        out[..., k:] += a[..., k : k + 1] * b[..., : n - k]
    return out


def expm_ut_toeplitz(a) -> np.ndarray:
    """First row of ``exp(T(a))`` for an upper-triangular Toeplitz ``T(a)``.

    ``T(a) = a[0] I + N`` with ``N`` nilpotent, so the result is
    ``exp(a[0])`` times the terminating series of ``exp(N)``. The series is
    accumulated with the power-series recurrence
    ``g[m] = (1/m) sum_k k a[k] g[m-k]``, which costs O(n^2).
    Leading axes broadcast.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[-1]
    g = np.zeros_like(a)
    # seeding with exp(a[0]) keeps the recurrence at the scale of the result
    with np.errstate(over="ignore", under="ignore"):
        g[..., 0] = np.exp(a[..., 0])
    ka = a * np.arange(n)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        for m in range(1, n):
            g[..., m] = np.sum(ka[..., 1 : m + 1] * g[..., m - 1 :: -1][..., :m], axis=-1) / m
    return g


def jordan_block_function(derivs, eigenvalue: complex, m: int) -> np.ndarray:
    """First row of ``f(J)`` for a size-``m`` Jordan block, from ``f``'s derivatives.

    ``derivs[j]`` is the j-th derivative of ``f`` at ``eigenvalue``; the row
    entries are ``derivs[j] / j!``.
    """
    d = np.asarray(derivs, dtype=complex)
    if d.shape != (m,):
        raise ValueError(f"need exactly {m} derivatives, got shape {d.shape}")
    fact = np.array([factorial(j) for j in range(m)], dtype=float)
    return d / fact


def apply_jordan_factored(f_per_block: Sequence, jf: JordanFactoredMatrix) -> np.ndarray:
    """Assemble ``P blkdiag(T(f_1), ..., T(f_k)) P^-1`` from per-block rows."""
    if len(f_per_block) != len(jf.blocks):
        raise ValueError("need one row per Jordan block")
    n = jf.order
    mid = np.zeros((n, n), dtype=complex)
    start = 0
    for row, block in zip(f_per_block, jf.blocks):
        row = np.asarray(row, dtype=complex)
        if row.shape != (block.size,):
            raise ValueError(f"row of length {row.shape} does not match block size {block.size}")
        stop = start + block.size
        mid[start:stop, start:stop] = toeplitz_from_row(row)
        start = stop
    return jf.basis @ mid @ jf.basis_inverse


def erlang_negated_subgenerator(n: int) -> np.ndarray:
    """First row ``[1, -1, 0, ..., 0]`` of the unit-rate Erlang(n) matrix ``Q``.

    ``Erlang(n, rate)`` is phase-type with negated sub-generator ``rate * Q``
    and initial vector ``e_1``.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    return bidiagonal_row(1.0, -1.0, int(n)).real.copy()
