"""Shot-noise moments and Erlang-smoothed CCDF approximations with bounds.

The CCDF approximation replaces ``P(X >= tau)`` by ``P(X >= tau Z_N)`` with
``Z_N ~ Erlang(N, N)``. Since ``Z_N`` is phase type with negated
sub-generator ``N Q``, this equals ``1 - e_1^T L_X((N / tau) Q) 1``, a sum
over the first row of the matrix Laplace transform of ``X``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .campbell import ShotNoiseScenario, campbell_row, shot_noise_row
from .errors import DivergentIntegralError, InfiniteMomentError
from .matfun import bidiagonal_row, expm_ut_toeplitz
from .quadrature import QuadratureConfig

__all__ = [
    "CcdfApproxResult",
    "DEFAULT_ORDER",
    "DEFAULT_EPSILON",
    "moments",
    "delta_of_epsilon",
    "erlang_chernoff_tail",
    "ccdf_approx_from_mlt",
    "shot_noise_provider",
    "shot_noise_ccdf",
    "ccdf_value",
]

DEFAULT_ORDER = 64
DEFAULT_EPSILON = 1e-3
_CLAMP_TOL = 1e-12


@dataclass
class CcdfApproxResult:
    """Erlang-smoothed CCDF at ``tau`` with its certified band."""

    tau: float
    order_n: int
    value: float
    lower_bound: float
    upper_bound: float
    epsilon: float
    delta: float
    diagnostics: dict = field(default_factory=dict)


def moments(sc: ShotNoiseScenario, max_order: int, q: QuadratureConfig | None = None) -> np.ndarray:
    """``[E[I^0], ..., E[I^max_order]]`` from the transform at the nilpotent block.

    The Campbell row at ``J_0`` of size ``max_order + 1`` is strictly upper
    triangular, so its exponential is a finite polynomial and
    ``E[I^k] = (-1)^k k! exp(-C)_{1, k+1}``.

    Raises
    ------
    InfiniteMomentError
        Naming the first order whose moment integral diverges.
    """
    if int(max_order) != max_order or max_order < 0:
        raise ValueError("max_order must be a nonnegative integer")
    max_order = int(max_order)
    if max_order == 0:
        return np.ones(1)
    try:
        res = campbell_row(sc, 0.0, 1.0, max_order + 1, q)
    except DivergentIntegralError as exc:
        raise InfiniteMomentError(f"moment of order {exc.entry} is infinite", order=exc.entry) from exc
    row = expm_ut_toeplitz(-res.row).real
    k = np.arange(max_order + 1)
    fact = np.array([math.factorial(int(i)) for i in k], dtype=float)
    return (-1.0) ** k * fact * row


def _excess(d: float) -> float:
    """``d - log(1 + d)`` without cancellation for small ``d``."""
    if d < 1e-3:
        # alternating series d^2/2 - d^3/3 + ...
        return sum((-1) ** j * d**j / j for j in range(2, 12))
    return d - math.log1p(d)


def delta_of_epsilon(N: int, epsilon: float) -> float:
    """Positive root of ``d - log(1 + d) = log(epsilon**(-1/N))``.

    Newton iterations safeguarded by bisection on a bracket that starts at
    ``[1e-12, 50]`` and is widened if needed.
    """
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    target = -math.log(epsilon) / N
    lo, hi = 1e-12, 50.0
    while _excess(hi) < target:
        hi *= 2.0
    d = min(max(math.sqrt(2.0 * target), lo), hi)
    for _ in range(200):
        f = _excess(d) - target
        if abs(f) < 1e-12 * max(1.0, target):
            break
        if f > 0:
            hi = d
        else:
            lo = d
        step = f * (1.0 + d) / d
        nxt = d - step
        d = nxt if lo < nxt < hi else 0.5 * (lo + hi)
    return d


def erlang_chernoff_tail(N: int, delta: float) -> float:
    """Chernoff bound ``exp(-N (delta - log(1 + delta)))`` on Erlang(N, N) deviations."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return math.exp(-N * _excess(delta))


def ccdf_approx_from_mlt(mlt: Callable, tau: float, N: int) -> float:
    """``P(X >= tau Z_N) = 1 - e_1^T L_X((N / tau) Q) 1``.

    ``mlt`` maps the first row of an upper-triangular Toeplitz argument to
    the first row of ``L_X`` at that argument.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    c = N / tau
    row = np.asarray(mlt(bidiagonal_row(c, -c, int(N))))
    value = float(1.0 - np.sum(row).real)
    if -_CLAMP_TOL <= value < 0.0:
        value = 0.0
    elif 1.0 < value <= 1.0 + _CLAMP_TOL:
        value = 1.0
    return value


def shot_noise_provider(sc: ShotNoiseScenario, q: QuadratureConfig | None = None) -> Callable:
    """Matrix-LT provider for :func:`ccdf_approx_from_mlt` backed by the Campbell integral."""

    def provider(arg_row):
        arg_row = np.asarray(arg_row, dtype=complex)
        beta = arg_row[1] if arg_row.size > 1 else 0.0
        if np.any(arg_row[2:] != 0):
            raise ValueError("shot-noise provider accepts bidiagonal Toeplitz arguments only")
        return shot_noise_row(sc, arg_row[0], beta, arg_row.size, q).row

    return provider


def ccdf_value(sc: ShotNoiseScenario, tau: float, N: int, q: QuadratureConfig | None = None) -> float:
    """``P^(N)(tau)`` for the shot noise of ``sc``; 0 at ``tau = inf``."""
    if math.isinf(tau):
        return 0.0
    return ccdf_approx_from_mlt(shot_noise_provider(sc, q), tau, N)


def shot_noise_ccdf(
    sc: ShotNoiseScenario,
    tau: float,
    N: int = DEFAULT_ORDER,
    epsilon: float = DEFAULT_EPSILON,
    q: QuadratureConfig | None = None,
) -> CcdfApproxResult:
    """Erlang-smoothed CCDF with sandwich bounds.

    ``lower = P^(N)(tau / (1 - delta)) - epsilon`` and
    ``upper = P^(N)(tau / (1 + delta)) / (1 - epsilon)``, clamped to
    ``[0, 1]``; for ``delta >= 1`` the lower bound is 0.
    """
    delta = delta_of_epsilon(N, epsilon)
    value = ccdf_value(sc, tau, N, q)
    if delta < 1:
        lower = ccdf_value(sc, tau / (1.0 - delta), N, q) - epsilon
    else:
        lower = 0.0
    upper = ccdf_value(sc, tau / (1.0 + delta), N, q) / (1.0 - epsilon)
    return CcdfApproxResult(
        tau=float(tau),
        order_n=int(N),
        value=value,
        lower_bound=float(min(max(lower, 0.0), 1.0)),
        upper_bound=float(min(max(upper, 0.0), 1.0)),
        epsilon=float(epsilon),
        delta=float(delta),
        diagnostics={"chernoff_tail": erlang_chernoff_tail(N, delta)},
    )
