"""Downlink Poisson cellular network: coverage and SINR meta-distribution.

The user sits at the origin and is served by the nearest base station at
distance ``r0``; the remaining stations form a PPP outside ``B(0, r0)``.
With signal power ``P ~ PH(-S, p)``,

    P_cov(tau) = p^T E_r0[ exp(-C(r0)) exp(-(tau W / ell(r0)) S) ] 1,

where ``C(r0)`` is the Campbell integral of the interference at the matrix
argument ``(tau ell(|x|) / ell(r0)) S``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .campbell import PathLoss, ShotNoiseScenario, campbell_row, integrate_radial
from .distributions import (
    Deterministic,
    Erlang,
    Exponential,
    FadingModel,
    GeneralPhaseType,
    PhaseType,
)
from .errors import UnsupportedCombinationError
from .matfun import apply_jordan_factored, bidiagonal_row, expm, expm_ut_toeplitz, toeplitz_mul
from .quadrature import QuadratureConfig, gauss_legendre

__all__ = [
    "NetworkScenario",
    "OuterQuadrature",
    "CoverageCurve",
    "nearest_bs_distance_density",
    "serving_distance_nodes",
    "coverage_probability",
    "coverage_curve",
    "meta_distribution",
    "meta_distribution_ladder",
]


@dataclass(frozen=True, eq=False)
class NetworkScenario:
    """Downlink network seen by a user at the origin.

    Parameters
    ----------
    bs_intensity : float
        Base stations per unit area.
    path_loss : PathLoss
        A ``PowerLaw`` exclusion radius removes stations closer than it.
    interferer_fading : FadingModel
    signal_power : FadingModel
        Exponential, Erlang or general phase type.
    noise_power : float
    """

    bs_intensity: float
    path_loss: PathLoss
    interferer_fading: FadingModel
    signal_power: FadingModel
    noise_power: float = 0.0
    user_location: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not (self.bs_intensity > 0 and np.isfinite(self.bs_intensity)):
            raise ValueError("bs_intensity must be positive")
        if not isinstance(self.signal_power, (Exponential, Erlang, GeneralPhaseType)):
            raise ValueError("signal_power must be Exponential, Erlang or GeneralPhaseType")
        if not isinstance(self.interferer_fading, FadingModel):
            raise TypeError("interferer_fading must be a FadingModel")
        if not (self.noise_power >= 0 and np.isfinite(self.noise_power)):
            raise ValueError("noise_power must be finite and >= 0")
        object.__setattr__(self, "user_location", (float(self.user_location[0]), float(self.user_location[1])))

    def interference(self, r0: float) -> ShotNoiseScenario:
        """Interference field conditioned on serving distance ``r0``."""
        return ShotNoiseScenario(
            self.bs_intensity,
            self.path_loss,
            self.interferer_fading,
            ((1.0, self.user_location),),
            hole=(self.user_location, r0),
        )


@dataclass(frozen=True)
class OuterQuadrature:
    """Gauss-Legendre rule for the expectation over the serving distance."""

    nodes: int = 128
    tail_mass: float = 1e-10

    def __post_init__(self):
        if self.nodes < 1 or not 0 < self.tail_mass < 1:
            raise ValueError("need nodes >= 1 and tail_mass in (0, 1)")


@dataclass
class CoverageCurve:
    thresholds: np.ndarray
    probabilities: np.ndarray
    diagnostics: list = field(default_factory=list)


def nearest_bs_distance_density(intensity: float, r):
    """Density ``2 pi lam r exp(-pi lam r^2)`` of the nearest-point distance."""
    if not intensity > 0:
        raise ValueError("intensity must be positive")
    r = np.asarray(r, dtype=float)
    return np.where(r >= 0, 2 * np.pi * intensity * r * np.exp(-np.pi * intensity * r**2), 0.0)


def _min_distance(net: NetworkScenario) -> float:
    return float(net.path_loss.inner_radius)


def serving_distance_nodes(net: NetworkScenario, outer: OuterQuadrature, r_max: float = np.inf):
    """Nodes and weights for ``E[g(r0)]``, truncated where the tail mass is negligible.

    Stations inside the exclusion radius ``eps`` are absent, so ``r0`` has
    density ``2 pi lam r exp(-pi lam (r^2 - eps^2))`` on ``[eps, inf)``.
    """
    lam = net.bs_intensity
    eps = _min_distance(net)
    r_cap = math.sqrt(eps**2 + math.log(1.0 / outer.tail_mass) / (math.pi * lam))
    hi = min(r_cap, r_max)
    if hi <= eps:
        return np.zeros(0), np.zeros(0)
    x, w = gauss_legendre(outer.nodes, eps, hi)
    dens = 2 * np.pi * lam * x * np.exp(-np.pi * lam * (x**2 - eps**2))
    return x, w * dens


def _phi1(a):
    """``(exp(a) - I) a^-1`` via the augmented-matrix exponential."""
    n = a.shape[0]
    big = np.zeros((2 * n, 2 * n), dtype=complex)
    big[:n, :n] = a
    big[:n, n:] = np.eye(n)
    return expm(big)[:n, n:]


def _dense_complement(fading: FadingModel, a):
    """``I - L_H(a)`` for a dense argument, free of cancellation for small ``a``."""
    n = a.shape[0]
    eye = np.eye(n)
    if isinstance(fading, Deterministic):
        # I - exp(-c a) = c a phi1(-c a)
        return fading.c * a @ _phi1(-fading.c * a)
    if isinstance(fading, (Exponential, Erlang)):
        k = 1 if isinstance(fading, Exponential) else fading.shape
        r = np.linalg.inv(eye + a / fading.rate)
        one_minus_r = (a / fading.rate) @ r
        acc = np.eye(n, dtype=complex)
        power = np.eye(n, dtype=complex)
        for _ in range(k - 1):
            power = power @ r
            acc = acc + power
        return one_minus_r @ acc
    raise UnsupportedCombinationError(
        f"{type(fading).__name__} interferers need a Jordan-factored signal sub-generator"
    )


def _dense_campbell(sc: ShotNoiseScenario, base, q):
    """``lam int_{|x| > r0} (I - L_H(ell(|x|) base)) dx`` for a dense matrix ``base``."""
    n = base.shape[0]
    pl, fad = sc.path_loss, sc.fading
    hole_r = sc.hole[1] if sc.hole else 0.0
    lam = sc.intensity

    def fn(r):
        g = pl.gain(r)
        out = np.empty((r.size, n * n), dtype=complex)
        for i, gi in enumerate(g):
            out[i] = _dense_complement(fad, gi * base).ravel()
        jac = 2 * np.pi * lam * r * (r >= hole_r)
        return out * jac[:, None]

    scale = float(np.max(np.abs(base)))
    w = max(fad.mean(), 1e-300) * scale
    split = 2.0 * max(pl.radius_for_gain(1.0 / w), pl.knee_radius, hole_r) + hole_r
    inner = max(hole_r, pl.inner_radius)
    row, err, diag = integrate_radial(fn, inner, split, pl.tail_exponent, q, [pl.knee_radius])
    return row.reshape(n, n), diag


def _conditional_coverage(net: NetworkScenario, tau: float, r0: float, q: QuadratureConfig):
    """``p^T exp(-C(r0)) exp(-(tau W / L0) S) 1`` and route diagnostics."""
    l0 = float(net.path_loss.gain(r0))
    k = tau / l0
    sc = net.interference(r0)
    sig = net.signal_power
    noise = net.noise_power
    if isinstance(sig, (Exponential, Erlang)):
        n = 1 if isinstance(sig, Exponential) else sig.shape
        nu = sig.rate
        res = campbell_row(sc, k * nu, -k * nu, n, q)
        row = expm_ut_toeplitz(-res.row - k * noise * nu * bidiagonal_row(1.0, -1.0, n))
        return float(np.sum(row).real), {"route": "toeplitz", "error": float(np.max(res.error))}
    ph: PhaseType = sig.ph
    if ph.jordan is not None:
        rows = []
        err = 0.0
        for b in ph.jordan.blocks:
            res = campbell_row(sc, k * b.eigenvalue, k, b.size, q)
            rows.append(expm_ut_toeplitz(-res.row - k * noise * bidiagonal_row(b.eigenvalue, 1.0, b.size)))
            err = max(err, float(np.max(res.error)))
        m = apply_jordan_factored(rows, ph.jordan)
        val = ph.sub_pmf @ m @ np.ones(ph.order) + ph.atom
        return float(np.real(val)), {"route": "jordan", "error": err}
    S = ph.negated_subgenerator
    c, diag = _dense_campbell(sc, k * S.astype(complex), q)
    m = expm(-c - k * noise * S)
    val = ph.sub_pmf @ m @ np.ones(ph.order) + ph.atom
    return float(np.real(val)), {"route": "dense"}


def coverage_probability(
    net: NetworkScenario,
    tau: float,
    outer: OuterQuadrature | None = None,
    q: QuadratureConfig | None = None,
    full_output: bool = False,
):
    """``P(SINR >= tau)`` for the typical user.

    The expectation over the serving distance uses Gauss-Legendre
    quadrature against the nearest-station density; each node evaluates a
    conditional Campbell integral over the plane minus ``B(0, r0)``.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    outer = outer or OuterQuadrature()
    q = q or QuadratureConfig()
    x, w = serving_distance_nodes(net, outer)
    vals = np.empty(x.size)
    routes = set()
    for i, r0 in enumerate(x):
        vals[i], d = _conditional_coverage(net, tau, float(r0), q)
        routes.add(d["route"])
    p = float(np.clip(w @ vals, 0.0, 1.0))
    if full_output:
        return p, {"nodes": x.size, "routes": sorted(routes), "r_cap": float(x.max()) if x.size else 0.0}
    return p


def coverage_curve(net, taus, outer=None, q=None) -> CoverageCurve:
    taus = np.asarray(taus, dtype=float)
    probs, diags = [], []
    for t in taus:
        p, d = coverage_probability(net, float(t), outer, q, full_output=True)
        probs.append(p)
        diags.append(d)
    return CoverageCurve(taus, np.array(probs), diags)


def _meta_conditional(net: NetworkScenario, tau: float, zeta_c: float, r0: float, N: int, q: QuadratureConfig):
    """``e_1^T exp(-S^(N)(r0)) 1`` for the conditional threshold ``zeta_c > 0``."""
    l0 = float(net.path_loss.gain(r0))
    mu = net.signal_power.rate
    pl, fad = net.path_loss, net.interferer_fading
    lam = net.bs_intensity
    scale = N / zeta_c
    t = np.arange(N)
    log_fact = np.array([math.lgamma(i + 1) for i in t])

    def fn(r):
        a = scale * fad.neg_log_laplace(mu * tau * pl.gain(r) / l0)
        with np.errstate(divide="ignore"):
            log_a = np.log(a)
        # I - exp(-a Q) has first row e_1 - e^{-a} a^t / t!
        rows = -np.exp(-a[:, None] + t[None, :] * log_a[:, None] - log_fact[None, :])
        rows[:, 0] = -np.expm1(-a)
        rows = np.where(a[:, None] > 0, rows, 0.0)
        jac = 2 * np.pi * lam * r * (r >= r0)
        return rows * jac[:, None]

    w = max(fad.mean(), 1e-300) * scale * mu * tau / l0
    split = 2.0 * max(pl.radius_for_gain(1.0 / w), pl.knee_radius, r0) + r0
    s_row, err, _ = integrate_radial(fn, max(r0, pl.inner_radius), split, pl.tail_exponent, q, [pl.knee_radius])
    row = expm_ut_toeplitz(-s_row.real)
    return float(np.sum(row).real)


def meta_distribution(
    net: NetworkScenario,
    tau: float,
    zeta: float,
    N: int = 64,
    outer: OuterQuadrature | None = None,
    q: QuadratureConfig | None = None,
) -> float:
    """``P(P_S(tau) >= zeta)`` at Erlang order ``N`` (exponential signal power).

    Per serving distance, ``P_S >= zeta`` iff the shot noise
    ``sum_k -log L_H(mu tau ell_k / ell(r0))`` is at most
    ``c = log(1/zeta) - mu tau W / ell(r0)``; nodes with ``c <= 0``
    contribute 0.
    """
    if not isinstance(net.signal_power, Exponential):
        raise UnsupportedCombinationError("the meta-distribution needs exponential signal power")
    if not tau > 0:
        raise ValueError("tau must be positive")
    if not 0 <= zeta <= 1:
        raise ValueError("zeta must lie in [0, 1]")
    if zeta == 0:
        return 1.0
    if zeta == 1:
        return 0.0
    outer = outer or OuterQuadrature()
    q = q or QuadratureConfig()
    mu = net.signal_power.rate
    log_inv = -math.log(zeta)
    # c(r0) > 0 iff ell(r0) > mu tau W / log(1/zeta)
    r_max = np.inf
    if net.noise_power > 0:
        try:
            r_max = float(net.path_loss.inverse(mu * tau * net.noise_power / log_inv))
        except (ValueError, NotImplementedError):
            r_max = 0.0
    x, w = serving_distance_nodes(net, outer, r_max)
    vals = np.zeros(x.size)
    for i, r0 in enumerate(x):
        c = log_inv - mu * tau * net.noise_power / float(net.path_loss.gain(r0))
        if c > 0:
            vals[i] = _meta_conditional(net, tau, c, float(r0), N, q)
    return float(np.clip(w @ vals, 0.0, 1.0))


def meta_distribution_ladder(net, tau, zeta, orders=(8, 16, 32, 64, 128), outer=None, q=None) -> dict:
    """Meta-distribution across Erlang orders, reported as a convergence diagnostic."""
    return {int(n): meta_distribution(net, tau, zeta, int(n), outer, q) for n in orders}
