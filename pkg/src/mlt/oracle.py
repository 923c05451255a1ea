"""Independent verification engines.

Monte Carlo estimators simulate the point process directly; the
Faa di Bruno engine differentiates ``exp(-g)`` through partial Bell
polynomials; the scalar Campbell oracle and the contour differentiator use
``scipy.integrate.quad`` so they share no quadrature code with the analytic
modules.

Trials are drawn in fixed-size batches. Batch ``b`` owns the ``b``-th child
of ``SeedSequence(seed)``, so estimates are bitwise reproducible for any
thread count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate

from .campbell import ShotNoiseScenario
from .distributions import Exponential
from .sinr import NetworkScenario

__all__ = [
    "McConfig",
    "EstimateWithCi",
    "BATCH_SIZE",
    "sample_ppp_disk",
    "sample_shot_noise",
    "estimate_shot_noise_ccdf",
    "estimate_shot_noise_moments",
    "estimate_coverage_and_meta",
    "truncation_radius_for",
    "bell_polynomial",
    "exp_composite_derivs",
    "scalar_campbell_oracle",
    "contour_derivatives",
]

BATCH_SIZE = 10_000


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings.

    ``truncation_radius=None`` selects a radius automatically. Points beyond
    it are replaced by the exact mean of their contribution.
    """

    seed: int = 0
    trials: int = 100_000
    truncation_radius: float | None = None
    threads: int = 1

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.truncation_radius is not None and not self.truncation_radius > 0:
            raise ValueError("truncation_radius must be positive")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True)
class EstimateWithCi:
    mean: float
    std_error: float
    trials: int

    def z_score(self, value: float) -> float:
        if self.std_error == 0:
            return 0.0 if value == self.mean else math.copysign(math.inf, self.mean - value)
        return (self.mean - value) / self.std_error


def _batches(mc: McConfig):
    sizes = [BATCH_SIZE] * (mc.trials // BATCH_SIZE)
    if mc.trials % BATCH_SIZE:
        sizes.append(mc.trials % BATCH_SIZE)
    seeds = np.random.SeedSequence(int(mc.seed)).spawn(len(sizes))
    return list(zip(sizes, seeds))


def _run_batches(fn, mc: McConfig):
    jobs = _batches(mc)
    if mc.threads > 1:
        with ThreadPoolExecutor(mc.threads) as ex:
            parts = list(ex.map(lambda job: fn(job[0], np.random.default_rng(job[1])), jobs))
    else:
        parts = [fn(n, np.random.default_rng(s)) for n, s in jobs]
    return np.concatenate(parts, axis=0)


def sample_ppp_disk(intensity: float, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Points of a homogeneous PPP in the disk ``B(0, radius)``, shape ``(k, 2)``."""
    if not intensity > 0 or not radius > 0:
        raise ValueError("intensity and radius must be positive")
    k = rng.poisson(intensity * math.pi * radius**2)
    r = radius * np.sqrt(rng.random(k))
    th = 2 * math.pi * rng.random(k)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def _tail_integral(fn, a: float) -> float:
    val, _ = integrate.quad(fn, a, np.inf, epsabs=1e-14, epsrel=1e-12, limit=500)
    return val


def truncation_radius_for(sc: ShotNoiseScenario, rel: float = 1e-3) -> float:
    """Smallest radius (on a grid) whose truncated-tail standard deviation is below ``rel * E[I]``."""
    pl, fad = sc.path_loss, sc.fading
    w = max(t[0] for t in sc.active_terms)
    reach = max(math.hypot(*t[1]) for t in sc.active_terms)
    m2 = fad.moment(2) * w**2
    mean = sum(t[0] for t in sc.active_terms) * fad.mean() * 2 * math.pi * sc.intensity * _tail_integral(
        lambda r: float(pl.gain(r)) * r, pl.inner_radius
    )
    for radius in np.arange(2.0, 200.0, 0.5):
        var = 2 * math.pi * sc.intensity * m2 * _tail_integral(lambda r: float(pl.gain(r)) ** 2 * r, radius)
        if math.sqrt(len(sc.active_terms) * var) <= rel * max(mean, 1e-12):
            return float(radius + reach)
    return 200.0 + reach


def _trial_index(counts):
    return np.repeat(np.arange(counts.size), counts)


def _shot_noise_batch(sc: ShotNoiseScenario, radius: float, tail_mean: float):
    lam, pl, fad = sc.intensity, sc.path_loss, sc.fading
    terms = sc.active_terms
    isotropic = sc.is_isotropic()
    hole = sc.hole

    def run(n, rng):
        out = np.full(n, tail_mean)
        if not terms:
            return np.zeros(n)
        counts = rng.poisson(lam * math.pi * radius**2, n)
        idx = _trial_index(counts)
        k = idx.size
        r = radius * np.sqrt(rng.random(k))
        if isotropic:
            keep = r >= (hole[1] if hole else 0.0)
            w = terms[0][0]
            contrib = w * fad.sample(rng, k) * pl.gain(r) * keep
        else:
            center = np.mean([t[1] for t in terms], axis=0)
            th = 2 * math.pi * rng.random(k)
            x = center[0] + r * np.cos(th)
            y = center[1] + r * np.sin(th)
            keep = np.ones(k, bool)
            if hole is not None:
                keep = np.hypot(x - hole[0][0], y - hole[0][1]) >= hole[1]
            contrib = np.zeros(k)
            for w, (yx, yy) in terms:
                contrib += w * fad.sample(rng, k) * pl.gain(np.hypot(x - yx, y - yy))
            contrib *= keep
        out += np.bincount(idx, weights=contrib, minlength=n)
        return out

    return run


@lru_cache(maxsize=8)
def _cached_shot_noise(sc: ShotNoiseScenario, mc: McConfig):
    if mc.truncation_radius is None:
        radius = truncation_radius_for(sc)
    else:
        radius = float(mc.truncation_radius)
    if sc.is_isotropic():
        lo = radius
    else:
        center = np.mean([t[1] for t in sc.active_terms], axis=0)
        lo = radius - max(math.hypot(t[1][0] - center[0], t[1][1] - center[1]) for t in sc.active_terms)
    tail_mean = sum(t[0] for t in sc.active_terms) * sc.fading.mean() * 2 * math.pi * sc.intensity * (
        _tail_integral(lambda r: float(sc.path_loss.gain(r)) * r, max(lo, 1e-12))
    )
    samples = _run_batches(_shot_noise_batch(sc, radius, tail_mean), mc)
    samples.setflags(write=False)
    return samples, radius, tail_mean


def sample_shot_noise(sc: ShotNoiseScenario, mc: McConfig) -> np.ndarray:
    """``mc.trials`` realizations of the shot noise (tail beyond the radius replaced by its mean)."""
    return _cached_shot_noise(sc, mc)[0]


def _mean_with_se(x) -> EstimateWithCi:
    x = np.asarray(x, dtype=float)
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return EstimateWithCi(float(x.mean()), se, int(x.size))


def estimate_shot_noise_ccdf(sc: ShotNoiseScenario, tau_grid, mc: McConfig) -> list:
    """Empirical ``P(I >= tau)`` with binomial standard errors."""
    x = sample_shot_noise(sc, mc)
    out = []
    for tau in np.atleast_1d(tau_grid):
        p = float(np.mean(x >= tau))
        out.append(EstimateWithCi(p, math.sqrt(p * (1 - p) / x.size), x.size))
    return out


def estimate_shot_noise_moments(sc: ShotNoiseScenario, orders: Sequence[int], mc: McConfig) -> list:
    x = sample_shot_noise(sc, mc)
    return [_mean_with_se(x ** int(k)) for k in orders]


def _network_batch(net: NetworkScenario, tau: float, zetas, radius: float):
    lam, pl = net.bs_intensity, net.path_loss
    fad, sig = net.interferer_fading, net.signal_power
    eps = pl.inner_radius
    W = net.noise_power
    alpha_mean = 2 * math.pi * lam * _tail_integral(lambda r: float(pl.gain(r)) * r, radius)
    tail_mean = fad.mean() * alpha_mean
    meta = isinstance(sig, Exponential)
    mu = sig.rate if meta else None
    zetas = np.asarray(zetas, dtype=float)

    def run(n, rng):
        # serving distance: r0^2 = eps^2 + E / (pi lam), E ~ Exp(1)
        r0 = np.sqrt(eps**2 + rng.exponential(1.0, n) / (math.pi * lam))
        area = math.pi * np.clip(radius**2 - r0**2, 0.0, None)
        counts = rng.poisson(lam * area)
        idx = _trial_index(counts)
        r = np.sqrt(r0[idx] ** 2 + rng.random(idx.size) * (radius**2 - r0[idx] ** 2))
        g = pl.gain(r)
        l0 = pl.gain(r0)
        interference = np.bincount(idx, weights=fad.sample(rng, idx.size) * g, minlength=n) + tail_mean
        p = sig.sample(rng, n)
        covered = (p * l0 >= tau * (interference + W)).astype(float)
        out = np.empty((n, 1 + zetas.size))
        out[:, 0] = covered
        if meta:
            k = mu * tau / l0
            log_ps = -np.bincount(idx, weights=fad.neg_log_laplace(k[idx] * g), minlength=n)
            log_ps -= k * (W + tail_mean)
            ps = np.exp(log_ps)
            out[:, 1:] = ps[:, None] >= zetas[None, :]
        else:
            out[:, 1:] = np.nan
        return out

    return run


def estimate_coverage_and_meta(net: NetworkScenario, tau: float, zeta_grid, mc: McConfig):
    """Coverage by indicator sampling and the meta-distribution from per-realization ``P_S``.

    ``P_S = exp(-mu tau W / L0) prod_k L_H(mu tau ell_k / L0)`` for
    exponential signal power; interferers beyond the truncation radius
    enter through the mean of their contribution.

    Returns
    -------
    coverage : EstimateWithCi
    meta : list of EstimateWithCi, one per ``zeta`` (NaN means when the signal is not exponential)
    """
    radius = float(mc.truncation_radius or 10.0 / math.sqrt(net.bs_intensity))
    zetas = np.atleast_1d(np.asarray(zeta_grid, dtype=float))
    res = _run_batches(_network_batch(net, float(tau), zetas, radius), mc)
    cov = _mean_with_se(res[:, 0])
    meta = [_mean_with_se(res[:, 1 + i]) for i in range(zetas.size)]
    return cov, meta


def bell_polynomial(j: int, k: int, args) -> float:
    """Partial exponential Bell polynomial ``B_{j,k}(x_1, ..., x_{j-k+1})``.

    ``args[0]`` is ``x_1``. Uses
    ``B_{j,k} = sum_{i=1}^{j-k+1} C(j-1, i-1) x_i B_{j-i,k-1}``.
    """
    if j < 0 or k < 0 or k > j:
        raise ValueError(f"need 0 <= k <= j, got j={j}, k={k}")
    if j > 0 and k > 0 and len(args) < j - k + 1:
        raise ValueError(f"B_{{{j},{k}}} needs at least {j - k + 1} arguments")
    x = tuple(args)

    @lru_cache(maxsize=None)
    def b(jj, kk):
        if jj == 0 and kk == 0:
            return 1.0
        if jj == 0 or kk == 0:
            return 0.0
        return sum(math.comb(jj - 1, i - 1) * x[i - 1] * b(jj - i, kk - 1) for i in range(1, jj - kk + 2))

    return b(j, k)


def exp_composite_derivs(g_derivs, j: int) -> np.ndarray:
    """Derivatives of ``exp(-g)`` of orders ``0..j`` by Faa di Bruno's formula."""
    g = np.asarray(g_derivs)
    if g.size < j + 1:
        raise ValueError(f"need {j + 1} derivatives of g")
    base = np.exp(-g[0])
    args = list(g[1:])
    out = [base]
    for m in range(1, j + 1):
        out.append(base * sum((-1) ** k * bell_polynomial(m, k, args) for k in range(1, m + 1)))
    return np.array(out)


def scalar_campbell_oracle(sc: ShotNoiseScenario, s: complex) -> complex:
    """``lam int (1 - L_H(s ell(|x|))) dx`` for isotropic scenarios via ``scipy.integrate.quad``.

    Integrates in ``u = log r``, where the integrand ``(1 - L_H(s ell(e^u))) e^{2u}``
    is smooth and decays exponentially at both ends.
    """
    if not sc.is_isotropic():
        raise ValueError("the scalar oracle handles isotropic single-term scenarios only")
    w = sc.active_terms[0][0]
    hole_r = sc.hole[1] if sc.hole else 0.0
    a = max(hole_r, sc.path_loss.inner_radius)
    pl, fad = sc.path_loss, sc.fading
    s = complex(s)

    def integrand(u, part):
        if not -700.0 < u < 300.0:
            return 0.0
        r = math.exp(u)
        g = min(float(pl.gain(r)), 1e300)
        v = complex(fad.one_minus_laplace(np.array([s * w * g]))[0]) * r * r
        return v.real if part == 0 else v.imag

    mid = math.log(max(pl.knee_radius, a, 1e-300))
    lo = math.log(a) if a > 0 else -np.inf
    pieces = [(lo, mid), (mid, np.inf)] if mid > lo else [(lo, np.inf)]
    total = 0j
    for p in range(2 if s.imag != 0 else 1):
        for x0, x1 in pieces:
            val, _ = integrate.quad(integrand, x0, x1, args=(p,), epsabs=0.0, epsrel=1e-12, limit=500)
            total += val if p == 0 else 1j * val
    return 2 * math.pi * sc.intensity * total


def contour_derivatives(f, s: float, count: int, radius: float | None = None, points: int = 32) -> np.ndarray:
    """``[f(s), f'(s), ..., f^(count-1)(s)]`` by the trapezoidal Cauchy integral.

    ``f`` must be analytic on the disk of the given radius (default ``s/2``).
    """
    radius = radius or 0.5 * abs(s)
    th = 2 * math.pi * np.arange(points) / points
    z = s + radius * np.exp(1j * th)
    fz = np.array([complex(f(zz)) for zz in z])
    out = []
    for t in range(count):
        c = np.mean(fz * np.exp(-1j * t * th)) / radius**t
        out.append(math.factorial(t) * c)
    return np.array(out)
