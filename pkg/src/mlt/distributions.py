"""Non-negative fading and signal-power laws and their matrix Laplace transforms.

Every model exposes ``scaled_taylor(s, beta, count)``, the vector
``beta**t * L^(t)(s) / t!`` for ``t < count``. This is the first row of
``L(A)`` for the bidiagonal Toeplitz argument ``A = s I + beta N`` (``N`` the
unit upper shift), which covers Jordan blocks (``beta = 1``) and scaled Erlang
generators ``c Q`` (``s = c``, ``beta = -c``) with one routine. The rows are
built by stable multiplicative recurrences instead of explicit derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial, lgamma

import numpy as np

from .errors import DomainError, NonconvergentTransformError, UnsupportedCombinationError
from .matfun import JordanBlockSpec, JordanFactoredMatrix, apply_jordan_factored, as_complex_matrix, expm

__all__ = [
    "complex_log1p",
    "PhaseType",
    "FadingModel",
    "Deterministic",
    "Exponential",
    "Erlang",
    "GeneralPhaseType",
    "nakagami",
    "scalar_lt",
    "scalar_lt_derivs",
    "matrix_lt_block",
    "matrix_lt_dense",
    "phase_type_ccdf",
    "phase_type_sample",
]

_POLE_TOL = 1e-300


def complex_log1p(z):
    """``log(1 + z)`` accurate for small complex ``z`` (numpy's complex log1p is not)."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 0.5
    x, y = np.where(small, z.real, 0.0), np.where(small, z.imag, 0.0)
    near = 0.5 * np.log1p(2.0 * x + x * x + y * y) + 1j * np.arctan2(y, 1.0 + x)
    return np.where(small, near, np.log(1.0 + np.where(small, 0.0, z)))


@dataclass(frozen=True, eq=False)
class PhaseType:
    """Phase-type law ``PH(-S, p)`` in the negated sub-generator convention.

    Parameters
    ----------
    negated_subgenerator : array_like, shape (n, n)
        ``S``; its negation ``-S`` is the sub-generator of the transient states.
    sub_pmf : array_like, shape (n,)
        Initial distribution over transient states; ``1 - sum(p)`` is an atom at 0.
    jordan : JordanFactoredMatrix, optional
        Caller-supplied Jordan factorization of ``S``.
    """

    negated_subgenerator: np.ndarray
    sub_pmf: np.ndarray
    jordan: JordanFactoredMatrix | None = None
    exit_rates: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        s = np.array(self.negated_subgenerator, dtype=float)
        p = np.array(self.sub_pmf, dtype=float).ravel()
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] == 0:
            raise ValueError("negated_subgenerator must be a non-empty square matrix")
        if not np.all(np.isfinite(s)) or not np.all(np.isfinite(p)):
            raise ValueError("phase-type parameters must be finite")
        n = s.shape[0]
        if p.shape != (n,):
            raise ValueError(f"sub_pmf must have length {n}")
        if np.any(p < 0) or np.any(p > 1) or p.sum() > 1 + 1e-12:
            raise ValueError("sub_pmf entries must lie in [0, 1] and sum to at most 1")
        off = s - np.diag(np.diag(s))
        if np.any(off > 0):
            raise ValueError("off-diagonal entries of the sub-generator must be nonnegative")
        exit_rates = s.sum(axis=1)
        scale = np.abs(s).max()
        if np.any(exit_rates < -1e-12 * scale) or not np.any(exit_rates > 1e-12 * scale):
            raise ValueError("sub-generator rows must sum to <= 0 with at least one strict row")
        if np.any(np.linalg.eigvals(s).real <= 0):
            raise ValueError("negated sub-generator must have eigenvalues with positive real part")
        if self.jordan is not None:
            if self.jordan.order != n:
                raise ValueError("Jordan factorization order does not match the sub-generator")
            if not np.allclose(self.jordan.matrix(), s, rtol=1e-8, atol=1e-10 * scale):
                raise ValueError("supplied Jordan factorization does not reproduce the sub-generator")
        for arr in (s, p):
            arr.setflags(write=False)
        exit_rates = np.clip(exit_rates, 0.0, None)
        exit_rates.setflags(write=False)
        object.__setattr__(self, "negated_subgenerator", s)
        object.__setattr__(self, "sub_pmf", p)
        object.__setattr__(self, "exit_rates", exit_rates)

    @property
    def order(self) -> int:
        return self.sub_pmf.size

    @property
    def atom(self) -> float:
        return max(0.0, 1.0 - float(self.sub_pmf.sum()))

    @classmethod
    def exponential(cls, rate: float) -> "PhaseType":
        """One-phase representation; a 1x1 matrix is its own Jordan form."""
        return cls([[rate]], [1.0], JordanFactoredMatrix(np.eye(1), [JordanBlockSpec(rate, 1)]))

    @classmethod
    def erlang(cls, shape: int, rate: float) -> "PhaseType":
        """Erlang as ``PH(-rate Q, e_1)`` with its Jordan factorization attached."""
        k = int(shape)
        s = rate * (np.eye(k) - np.eye(k, k=1))
        # rate Q = V^-1 J V with V = diag((-rate)^t)
        basis = np.diag((-float(rate)) ** -np.arange(k, dtype=float))
        try:
            jf = JordanFactoredMatrix(basis, [JordanBlockSpec(rate, k)])
        except ValueError:
            jf = None
        return cls(s, np.eye(k)[0], jf)

    def ccdf(self, tau):
        return phase_type_ccdf(self, tau)

    def moment(self, k: int) -> float:
        """``E[X^k] = k! p^T S^-k 1``."""
        if k == 0:
            return 1.0
        v = np.ones(self.order)
        for _ in range(k):
            v = np.linalg.solve(self.negated_subgenerator, v)
        return float(factorial(k) * self.sub_pmf @ v)

    def decay_rate(self) -> float:
        """Smallest real part among the eigenvalues of ``S``."""
        return float(np.min(np.linalg.eigvals(self.negated_subgenerator).real))


class FadingModel:
    """Base class of the supported non-negative laws."""

    kind: str = ""

    # Re(s) must exceed this for E[exp(-sX)] to converge.
    convergence_abscissa: float = 0.0

    def laplace(self, s):
        return self.scaled_taylor(s, 0.0, 1)[..., 0]

    def scaled_taylor(self, s, beta, count: int) -> np.ndarray:
        """``beta**t L^(t)(s) / t!`` for ``t = 0..count-1``, broadcast over ``s``."""
        raise NotImplementedError

    def one_minus_laplace(self, s):
        """``1 - L(s)`` without cancellation for small ``|s|``."""
        return 1.0 - self.laplace(s)

    def complement_taylor(self, s, beta, count: int) -> np.ndarray:
        """``e_1 - scaled_taylor(s, beta, count)`` with a cancellation-free first entry."""
        out = -self.scaled_taylor(s, beta, count)
        out[..., 0] = self.one_minus_laplace(np.broadcast_to(np.asarray(s, dtype=complex), out.shape[:-1]))
        return out

    def derivs(self, s, count: int) -> np.ndarray:
        fact = np.array([factorial(t) for t in range(count)], dtype=float)
        return self.scaled_taylor(s, 1.0, count) * fact

    def neg_log_laplace(self, s):
        """``-log L(s)`` for real ``s >= 0``."""
        return -np.log(np.real(self.laplace(s)))

    def moment(self, k: int) -> float:
        raise NotImplementedError

    def mean(self) -> float:
        return self.moment(1)

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def as_phase_type(self) -> PhaseType:
        raise UnsupportedCombinationError(f"{type(self).__name__} has no phase-type representation")

    def _check_domain(self, s):
        s = np.asarray(s, dtype=complex)
        if np.any(s.real <= self.convergence_abscissa):
            raise DomainError(
                f"{type(self).__name__} transform undefined at Re(s) <= {self.convergence_abscissa:g}"
            )
        return s

    def params(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Deterministic(FadingModel):
    """Point mass at ``c >= 0``."""

    c: float = 1.0
    kind = "deterministic"
    convergence_abscissa = -np.inf

    def __post_init__(self):
        if not np.isfinite(self.c) or self.c < 0:
            raise ValueError(f"deterministic value must be finite and >= 0, got {self.c}")

    def scaled_taylor(self, s, beta, count):
        s = np.asarray(s, dtype=complex)
        beta = np.asarray(beta, dtype=complex)
        out = np.empty(np.broadcast_shapes(s.shape, beta.shape) + (count,), dtype=complex)
        out[..., 0] = np.exp(-s * self.c)
        for t in range(1, count):
            out[..., t] = out[..., t - 1] * (-beta * self.c) / t
        return out

    def neg_log_laplace(self, s):
        return self.c * np.asarray(s, dtype=float)

    def one_minus_laplace(self, s):
        return -np.expm1(-np.asarray(s, dtype=complex) * self.c)

    def moment(self, k):
        return float(self.c) ** k

    def sample(self, rng, size=None):
        return np.full(size, float(self.c)) if size is not None else float(self.c)

    def params(self):
        return {"c": self.c}


@dataclass(frozen=True)
class Exponential(FadingModel):
    """Exponential law with the given ``rate`` (mean ``1/rate``)."""

    rate: float = 1.0
    kind = "exponential"

    def __post_init__(self):
        if not np.isfinite(self.rate) or self.rate <= 0:
            raise ValueError(f"rate must be positive, got {self.rate}")

    @property
    def convergence_abscissa(self):
        return -self.rate

    def scaled_taylor(self, s, beta, count):
        s = self._check_domain(s)
        beta = np.asarray(beta, dtype=complex)
        inv = 1.0 / (self.rate + s)
        out = np.empty(np.broadcast_shapes(s.shape, beta.shape) + (count,), dtype=complex)
        out[..., 0] = self.rate * inv
        ratio = -beta * inv
        for t in range(1, count):
            out[..., t] = out[..., t - 1] * ratio
        return out

    def neg_log_laplace(self, s):
        return np.log1p(np.asarray(s, dtype=float) / self.rate)

    def one_minus_laplace(self, s):
        s = self._check_domain(s)
        return s / (self.rate + s)

    def moment(self, k):
        return factorial(k) / self.rate**k

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)

    def as_phase_type(self):
        return PhaseType.exponential(self.rate)

    def params(self):
        return {"rate": self.rate}


@dataclass(frozen=True)
class Erlang(FadingModel):
    """Erlang law: sum of ``shape`` i.i.d. exponentials of the given ``rate``."""

    shape: int = 1
    rate: float = 1.0
    kind = "erlang"

    def __post_init__(self):
        if int(self.shape) != self.shape or self.shape < 1:
            raise ValueError(f"shape must be a positive integer, got {self.shape}")
        if not np.isfinite(self.rate) or self.rate <= 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        object.__setattr__(self, "shape", int(self.shape))

    @property
    def convergence_abscissa(self):
        return -self.rate

    def scaled_taylor(self, s, beta, count):
        s = self._check_domain(s)
        beta = np.asarray(beta, dtype=complex)
        inv = 1.0 / (self.rate + s)
        out = np.empty(np.broadcast_shapes(s.shape, beta.shape) + (count,), dtype=complex)
        out[..., 0] = (self.rate * inv) ** self.shape
        ratio = -beta * inv
        for t in range(1, count):
            out[..., t] = out[..., t - 1] * ratio * ((self.shape + t - 1) / t)
        return out

    def neg_log_laplace(self, s):
        return self.shape * np.log1p(np.asarray(s, dtype=float) / self.rate)

    def one_minus_laplace(self, s):
        s = self._check_domain(s)
        return -np.expm1(-self.shape * complex_log1p(s / self.rate))

    def moment(self, k):
        return float(np.exp(lgamma(self.shape + k) - lgamma(self.shape))) / self.rate**k

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size)

    def as_phase_type(self):
        return PhaseType.erlang(self.shape, self.rate)

    def params(self):
        return {"shape": self.shape, "rate": self.rate}


@dataclass(frozen=True, eq=False)
class GeneralPhaseType(FadingModel):
    """A general phase-type law."""

    ph: PhaseType = None
    kind = "phase_type"

    def __post_init__(self):
        if not isinstance(self.ph, PhaseType):
            raise TypeError("GeneralPhaseType needs a PhaseType")

    @property
    def convergence_abscissa(self):
        return -self.ph.decay_rate()

    def scaled_taylor(self, s, beta, count):
        s = self._check_domain(s)
        beta = np.asarray(beta, dtype=complex)
        shape = np.broadcast_shapes(s.shape, beta.shape)
        sb = np.broadcast_to(s, shape).ravel()
        bb = np.broadcast_to(beta, shape).ravel()
        S = self.ph.negated_subgenerator
        n = self.ph.order
        resolvent = sb[:, None, None] * np.eye(n) + S
        if np.any(np.abs(np.linalg.det(resolvent)) < _POLE_TOL):
            raise DomainError("phase-type transform evaluated at a pole")
        out = np.empty((sb.size, count), dtype=complex)
        v = np.linalg.solve(resolvent, np.broadcast_to(self.ph.exit_rates.astype(complex), (sb.size, n))[..., None])
        out[:, 0] = (v[..., 0] @ self.ph.sub_pmf) + self.ph.atom
        for t in range(1, count):
            v = -bb[:, None, None] * np.linalg.solve(resolvent, v)
            out[:, t] = v[..., 0] @ self.ph.sub_pmf
        return out.reshape(shape + (count,))

    def one_minus_laplace(self, s):
        # 1 - L(s) = s p^T (sI + S)^-1 1
        s = self._check_domain(s)
        flat = s.ravel()
        n = self.ph.order
        resolvent = flat[:, None, None] * np.eye(n) + self.ph.negated_subgenerator
        v = np.linalg.solve(resolvent, np.ones((flat.size, n, 1), dtype=complex))[..., 0]
        return (flat * (v @ self.ph.sub_pmf)).reshape(s.shape)

    def moment(self, k):
        return self.ph.moment(k)

    def sample(self, rng, size=None):
        return phase_type_sample(self.ph, rng, size)

    def as_phase_type(self):
        return self.ph

    def params(self):
        return {
            "negated_subgenerator": self.ph.negated_subgenerator.tolist(),
            "sub_pmf": self.ph.sub_pmf.tolist(),
        }


def nakagami(m: int, omega: float = 1.0) -> Erlang:
    """Power of Nakagami-``m`` fading with integer ``m`` and mean power ``omega``."""
    if int(m) != m or m < 1:
        raise ValueError("only integer Nakagami parameters m >= 1 are supported")
    return Erlang(int(m), m / omega)


def scalar_lt(m: FadingModel, s) -> complex:
    """``E[exp(-s X)]`` in closed form."""
    return complex(m.laplace(s)) if np.ndim(s) == 0 else m.laplace(s)


def scalar_lt_derivs(m: FadingModel, s, count: int) -> np.ndarray:
    """``[L(s), L'(s), ..., L^(count-1)(s)]``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    return m.derivs(s, count)


def matrix_lt_block(m: FadingModel, j: JordanBlockSpec) -> np.ndarray:
    """First row of ``E[exp(-J X)]`` for a Jordan block ``J``.

    Raises
    ------
    NonconvergentTransformError
        If the eigenvalue is outside the region of convergence.
    """
    lam = complex(j.eigenvalue)
    if lam.real <= m.convergence_abscissa:
        raise NonconvergentTransformError(
            f"eigenvalue {lam} is outside the region of convergence of {type(m).__name__}"
        )
    return m.scaled_taylor(lam, 1.0, j.size)


def matrix_lt_dense(m: FadingModel, s) -> np.ndarray:
    """``E[exp(-s X)]`` for a dense matrix (or a Jordan-factored one).

    Closed forms are used for the deterministic, exponential and Erlang
    laws. A general phase-type law needs ``s`` as a
    :class:`JordanFactoredMatrix`.
    """
    if isinstance(s, JordanFactoredMatrix):
        for b in s.blocks:
            if b.eigenvalue.real <= m.convergence_abscissa:
                raise NonconvergentTransformError(f"eigenvalue {b.eigenvalue} outside the region of convergence")
        return apply_jordan_factored([m.scaled_taylor(b.eigenvalue, 1.0, b.size) for b in s.blocks], s)
    a = as_complex_matrix(s)
    n = a.shape[0]
    if isinstance(m, Deterministic):
        return expm(-m.c * a)
    if isinstance(m, GeneralPhaseType):
        raise UnsupportedCombinationError(
            "general phase-type fading at a dense argument needs a JordanFactoredMatrix"
        )
    if np.any(np.linalg.eigvals(a).real <= m.convergence_abscissa):
        raise NonconvergentTransformError("matrix argument has eigenvalues outside the region of convergence")
    if isinstance(m, (Exponential, Erlang)):
        k = 1 if isinstance(m, Exponential) else m.shape
        shifted = np.eye(n) + a / m.rate
        if np.linalg.cond(shifted) > 1e14:
            raise DomainError("resolvent is singular at this argument")
        r = np.linalg.inv(shifted)
        return np.linalg.matrix_power(r, k)
    raise UnsupportedCombinationError(f"no dense route for {type(m).__name__}")


def phase_type_ccdf(ph: PhaseType, tau):
    """``P(X > tau) = p^T exp(-S tau) 1``; ``sum(p)`` at ``tau = 0``."""
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(taus < 0):
        raise ValueError("tau must be nonnegative")
    ones = np.ones(ph.order)
    out = np.array([float(np.real(ph.sub_pmf @ expm(-t * ph.negated_subgenerator) @ ones)) for t in taus])
    out = np.clip(out, 0.0, 1.0)
    return out if np.ndim(tau) else float(out[0])


def phase_type_sample(ph: PhaseType, rng: np.random.Generator, size=None):
    """Absorption times of the underlying Markov chain, simulated phase by phase."""
    n_draw = 1 if size is None else int(np.prod(size))
    S = ph.negated_subgenerator
    n = ph.order
    hold = np.diag(S).copy()
    # jump probabilities: columns 0..n-1 transient targets, column n absorption
    jump = np.zeros((n, n + 1))
    jump[:, :n] = -S / hold[:, None]
    np.fill_diagonal(jump[:, :n], 0.0)
    jump[:, n] = ph.exit_rates / hold
    jump /= jump.sum(axis=1, keepdims=True)
    cum = np.cumsum(jump, axis=1)
    init = np.append(ph.sub_pmf, ph.atom)
    init_cum = np.cumsum(init / init.sum())
    state = np.minimum(np.searchsorted(init_cum, rng.random(n_draw), side="right"), n)
    times = np.zeros(n_draw)
    active = np.flatnonzero(state < n)
    while active.size:
        st = state[active]
        times[active] += rng.exponential(1.0, active.size) / hold[st]
        u = rng.random(active.size)
        nxt = np.minimum((u[:, None] >= cum[st]).sum(axis=1), n)
        state[active] = nxt
        active = active[nxt < n]
    if size is None:
        return float(times[0])
    return times.reshape(size)
