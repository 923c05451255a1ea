"""Generalized Campbell theorem for planar Poisson shot noise.

For a homogeneous planar PPP of intensity ``lam`` with i.i.d. marks ``H``,
the shot noise ``I = sum_i a_i sum_x H ell(|x - y_i|)`` has matrix Laplace
transform ``exp(-C(S))`` with

    C(S) = lam * int (I - prod_i L_H(a_i ell(|x - y_i|) S)) dx .

Only upper-triangular Toeplitz arguments are handled here: the bidiagonal
family ``S = s0 I + beta N`` (Jordan blocks, scaled Erlang generators). For
those, every factor in the integrand is a power series in the same nilpotent
``N``, so each integral reduces to a vector integral of first rows.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .distributions import FadingModel
from .errors import DivergentIntegralError, NonconvergentTransformError, QuadratureError
from .matfun import JordanBlockSpec, expm_ut_toeplitz, toeplitz_mul
from .quadrature import QuadratureConfig, gauss_legendre, integrate

__all__ = [
    "PathLoss",
    "PowerLaw",
    "BoundedPowerLaw",
    "ShotNoiseScenario",
    "CampbellResult",
    "field_matrix_lt",
    "campbell_row",
    "campbell_matrix_integral",
    "shot_noise_matrix_lt",
    "shot_noise_row",
    "finiteness_check",
    "moment_condition",
    "integrate_radial",
    "tail_integrand",
]

ANGULAR_PANELS = 64
ANGULAR_NODES = 4
# radii (relative to the split radius) used to probe the integrand's decay
_FAR_PROBES = (1e6, 1e9)
_NEAR_PROBES = (1e-6, 1e-9)
_CHUNK = 2_000_000


class PathLoss:
    """Isotropic, nonincreasing path-loss law ``ell(r)``.

    Subclasses implement :meth:`gain`. The remaining hooks steer quadrature:
    ``tail_exponent`` is the power ``alpha`` with ``ell(r) ~ r**-alpha`` at
    infinity (``None`` if unknown), ``inner_radius`` the radius below which
    the gain is zero, and ``knee_radius`` a length scale of the transition.
    """

    kind = "custom"
    tail_exponent: float | None = None
    inner_radius: float = 0.0
    knee_radius: float = 1.0

    def gain(self, r):
        raise NotImplementedError

    def inverse(self, g):
        raise NotImplementedError(f"{type(self).__name__} has no closed-form inverse")

    def radius_for_gain(self, g: float) -> float:
        """A radius beyond which ``ell(r) <= g`` (the knee if unknown)."""
        try:
            return float(max(self.inverse(g), self.inner_radius))
        except (NotImplementedError, ValueError, ZeroDivisionError, FloatingPointError):
            return self.knee_radius

    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class PowerLaw(PathLoss):
    """``ell(r) = K r**-alpha`` for ``r >= exclusion`` and 0 inside it."""

    K: float = 1.0
    alpha: float = 4.0
    exclusion: float = 0.0
    kind = "power_law"

    def __post_init__(self):
        if not (self.K > 0 and np.isfinite(self.K)):
            raise ValueError(f"K must be positive, got {self.K}")
        if not (self.alpha > 2 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha must exceed 2, got {self.alpha}")
        if not (self.exclusion >= 0 and np.isfinite(self.exclusion)):
            raise ValueError(f"exclusion radius must be >= 0, got {self.exclusion}")

    @property
    def tail_exponent(self):
        return self.alpha

    @property
    def inner_radius(self):
        return self.exclusion

    @property
    def knee_radius(self):
        return max(self.exclusion, self.K ** (1.0 / self.alpha))

    def gain(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            g = self.K * r ** (-self.alpha)
        return np.where(r >= self.exclusion, g, 0.0)

    def inverse(self, g):
        return (self.K / np.asarray(g, dtype=float)) ** (1.0 / self.alpha)

    def params(self):
        return {"K": self.K, "alpha": self.alpha, "exclusion": self.exclusion}


@dataclass(frozen=True)
class BoundedPowerLaw(PathLoss):
    """``ell(r) = K / (1 + r**alpha)``."""

    K: float = 1.0
    alpha: float = 4.0
    kind = "bounded_power_law"

    def __post_init__(self):
        if not (self.K > 0 and np.isfinite(self.K)):
            raise ValueError(f"K must be positive, got {self.K}")
        if not (self.alpha > 2 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha must exceed 2, got {self.alpha}")

    @property
    def tail_exponent(self):
        return self.alpha

    inner_radius = 0.0
    knee_radius = 1.0

    def gain(self, r):
        with np.errstate(over="ignore"):
            return self.K / (1.0 + np.asarray(r, dtype=float) ** self.alpha)

    def inverse(self, g):
        g = np.asarray(g, dtype=float)
        if np.any(g > self.K) or np.any(g <= 0):
            raise ValueError(f"gain must lie in (0, {self.K}]")
        return (self.K / g - 1.0) ** (1.0 / self.alpha)

    def params(self):
        return {"K": self.K, "alpha": self.alpha}


@dataclass(frozen=True, eq=False)
class ShotNoiseScenario:
    """Planar PPP shot noise, possibly combined over several sample points.

    Parameters
    ----------
    intensity : float
        Points per unit area.
    path_loss : PathLoss
    fading : FadingModel
        Law of the i.i.d. marks ``H``.
    combination : sequence of (weight, (x, y))
        Shot noise is ``sum_i weight_i I(y_i)``; marks are independent across terms.
    hole : ((x, y), radius), optional
        Disk removed from the domain of the point process.
    """

    intensity: float
    path_loss: PathLoss
    fading: FadingModel
    combination: tuple = ((1.0, (0.0, 0.0)),)
    hole: tuple | None = None

    def __post_init__(self):
        if not (self.intensity > 0 and np.isfinite(self.intensity)):
            raise ValueError(f"intensity must be positive, got {self.intensity}")
        if not isinstance(self.path_loss, PathLoss):
            raise TypeError("path_loss must be a PathLoss")
        if not isinstance(self.fading, FadingModel):
            raise TypeError("fading must be a FadingModel")
        terms = []
        for w, y in self.combination:
            y = (float(y[0]), float(y[1]))
            if not (w >= 0 and np.isfinite(w)):
                raise ValueError(f"combination weights must be finite and >= 0, got {w}")
            terms.append((float(w), y))
        if not terms:
            raise ValueError("at least one combination term is required")
        pts = [t[1] for t in terms]
        if len(set(pts)) != len(pts):
            raise ValueError("combination sample points must be distinct")
        object.__setattr__(self, "combination", tuple(terms))
        if self.hole is not None:
            (cx, cy), rad = self.hole
            if not (rad >= 0 and np.isfinite(rad)):
                raise ValueError("hole radius must be finite and >= 0")
            object.__setattr__(self, "hole", ((float(cx), float(cy)), float(rad)))

    @property
    def active_terms(self):
        return tuple(t for t in self.combination if t[0] > 0)

    def is_isotropic(self) -> bool:
        """True when the integrand is radial about the single active point."""
        terms = self.active_terms
        if len(terms) != 1:
            return False
        if self.hole is None or self.hole[1] == 0:
            return True
        return self.hole[0] == terms[0][1]

    def mean(self) -> float:
        """``E[I]`` by the classical Campbell formula (single-term scenarios)."""
        w = sum(t[0] for t in self.active_terms)
        res = campbell_row(self, 0.0, 1.0, 2)
        return float(res.row[1].real) if w else 0.0


@dataclass
class CampbellResult:
    row: np.ndarray
    error: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def _bidiagonal_rows(fading: FadingModel, gains, s0, beta, n):
    """Rows of ``e_1 - L_H(g (s0 I + beta N))`` for an array of gains ``g``."""
    return fading.complement_taylor(gains * s0, gains * beta, n)


def field_matrix_lt(sc: ShotNoiseScenario, s_block: JordanBlockSpec, x) -> np.ndarray:
    """First row of ``prod_i L_H(a_i ell(|x - y_i|) J)`` at the point ``x``."""
    return _field_rows(sc, s_block.eigenvalue, 1.0, s_block.size, np.atleast_2d(np.asarray(x, dtype=float)))[0]


def _field_rows(sc, s0, beta, n, pts):
    """Field rows ``L_H~`` at points of shape ``(m, 2)``; returns ``(m, n)``."""
    out = np.zeros((pts.shape[0], n), dtype=complex)
    out[:, 0] = 1.0
    for w, y in sc.active_terms:
        d = np.hypot(pts[:, 0] - y[0], pts[:, 1] - y[1])
        g = w * sc.path_loss.gain(d)
        out = toeplitz_mul(out, sc.fading.scaled_taylor(g * s0, g * beta, n))
    return out


def _probe(fn, radii):
    """max |fn| over a small cluster around each radius; shape (len(radii), n)."""
    rr = np.outer(radii, [1.0, 1.07, 1.19]).ravel()
    vals = np.abs(np.asarray(fn(rr)))
    if vals.ndim == 1:
        vals = vals[:, None]
    return vals.reshape(len(radii), 3, -1).max(axis=1)


def _check_end(fn, radii, current, tol, far: bool):
    """Raise ``DivergentIntegralError`` if ``fn`` is not integrable at one end.

    ``fn`` is the radial integrand (already including the ``r`` Jacobian).
    An entry passes when its local tail mass ``|fn(r)| r`` is negligible or
    when its log-slope shows integrable decay.
    """
    m = _probe(fn, np.asarray(radii))
    r1, r2 = radii
    mass = m[1] * r2
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.log(m[1] / m[0]) / np.log(r2 / r1)
    ok_mass = mass <= tol * (np.abs(current) + 1.0)
    ok_slope = slope < -1.0 - 1e-3 if far else slope > -1.0 + 1e-3
    ok = ok_mass | ok_slope | (m[1] == 0)
    if not np.all(ok):
        bad = int(np.flatnonzero(~ok)[0])
        where = "infinity" if far else "the inner boundary"
        raise DivergentIntegralError(
            f"integrand entry {bad} is not integrable near {where} "
            f"(local mass {mass[bad]:.3g}, log-slope {slope[bad]:.3g})",
            entry=bad,
            where=where,
        )


def tail_integrand(fn, split: float, p: float):
    """``fn`` pulled back to ``w in (0, 1]`` by ``r = split * w**-p``."""

    def mapped(w):
        with np.errstate(over="ignore", under="ignore", divide="ignore"):
            r = split * w ** (-p)
            jac = p * r / w
        finite = np.isfinite(r) & np.isfinite(jac)
        r = np.where(finite, r, split)
        vals = np.asarray(fn(r))
        if vals.ndim == 2:
            return np.where(finite[:, None], vals * np.where(finite, jac, 0.0)[:, None], 0.0)
        return np.where(finite, vals * np.where(finite, jac, 0.0), 0.0)

    return mapped


def integrate_radial(
    fn,
    inner: float,
    split: float,
    tail_exponent: float | None,
    q: QuadratureConfig,
    breakpoints: Sequence[float] = (),
):
    """Integrate a row-valued radial integrand over ``[inner, inf)``.

    ``fn(r)`` returns shape ``(m, n)`` and must already include the ``r dr``
    Jacobian and intensity. The interval is split at ``split``; the tail is
    mapped to ``(0, 1]`` by ``r = split * w**-p`` with ``p = 1/(alpha - 2)``,
    which makes an ``r**(1 - alpha)`` decay bounded in ``w``.

    Returns
    -------
    row, error, diagnostics
    """
    split = max(split, inner + 1e-12 * max(1.0, split), 1e-300)
    bps = sorted({float(b) for b in breakpoints if inner < b < split})
    # integrability is settled before any adaptive work so divergence is never
    # misreported as a quadrature failure
    scale = np.abs(np.asarray(fn(np.array([0.5 * (inner + split)]))))[0] * (split - inner)
    if inner == 0.0:
        _check_end(fn, [split * _NEAR_PROBES[0], split * _NEAR_PROBES[1]], scale, q.tail_truncation_tol, far=False)
    _check_end(fn, [split * _FAR_PROBES[0], split * _FAR_PROBES[1]], scale, q.tail_truncation_tol, far=True)
    head = integrate(fn, inner, split, q, breakpoints=bps)
    p = 1.0 / (tail_exponent - 2.0) if tail_exponent and tail_exponent > 2 else 1.0
    p = min(p, 50.0)

    tail = integrate(tail_integrand(fn, split, p), 0.0, 1.0, q)
    diag = {
        "split": split,
        "head_intervals": head.partition.size - 1,
        "tail_intervals": tail.partition.size - 1,
        "evaluations": head.evaluations + tail.evaluations,
        "tail_value": tail.value,
        "head_partition": head.partition,
        "tail_partition": tail.partition,
        "tail_map_power": p,
    }
    return head.value + tail.value, head.error + tail.error, diag


def _split_radius(sc: ShotNoiseScenario, scale: float) -> float:
    """Radius past which the integrand is in its asymptotic regime."""
    pl = sc.path_loss
    w = max((t[0] for t in sc.active_terms), default=0.0)
    spread = w * scale * max(sc.fading.mean(), 1e-300)
    r = pl.knee_radius
    if spread > 0:
        r = max(r, pl.radius_for_gain(1.0 / spread))
    return 2.0 * r + pl.inner_radius


def _radial_integrand(sc, s0, beta, n, hole_radius):
    lam = sc.intensity
    w = sc.active_terms[0][0]
    pl, fad = sc.path_loss, sc.fading

    def fn(r):
        g = w * pl.gain(r)
        rows = _bidiagonal_rows(fad, g, s0, beta, n)
        jac = 2.0 * np.pi * lam * r
        if hole_radius > 0:
            jac = np.where(r >= hole_radius, jac, 0.0)
        return rows * jac[:, None]

    return fn


def _planar_integrand(sc, s0, beta, n):
    """Angle-integrated integrand about the weighted centroid of the points."""
    terms = sc.active_terms
    wts = np.array([t[0] for t in terms])
    ys = np.array([t[1] for t in terms])
    c = (wts[:, None] * ys).sum(axis=0) / wts.sum()
    u, uw = gauss_legendre(ANGULAR_NODES, 0.0, 1.0)
    panel = (np.arange(ANGULAR_PANELS)[:, None] + u[None, :]).ravel() / ANGULAR_PANELS
    panel_w = np.tile(uw, ANGULAR_PANELS) / ANGULAR_PANELS
    lam = sc.intensity
    hole = sc.hole

    def fn(r):
        r = np.asarray(r, dtype=float)
        out = np.empty((r.size, n), dtype=complex)
        # angular window per radius: [start, start + length)
        start = np.zeros(r.size)
        length = np.full(r.size, 2 * np.pi)
        if hole is not None and hole[1] > 0:
            hc, rho = np.asarray(hole[0]), hole[1]
            d = float(np.hypot(*(hc - c)))
            phi = float(np.arctan2(hc[1] - c[1], hc[0] - c[0]))
            if d == 0.0:
                length = np.where(r < rho, 0.0, 2 * np.pi)
            else:
                with np.errstate(divide="ignore", invalid="ignore"):
                    cosv = (r**2 + d**2 - rho**2) / (2 * r * d)
                psi = np.arccos(np.clip(np.nan_to_num(cosv, nan=1.0, posinf=1.0, neginf=-1.0), -1.0, 1.0))
                length = np.where(cosv <= -1.0, 0.0, 2 * np.pi - 2 * psi)
                start = phi + psi
        chunk = max(1, _CHUNK // (panel.size * n))
        for i in range(0, r.size, chunk):
            sl = slice(i, i + chunk)
            theta = start[sl, None] + length[sl, None] * panel[None, :]
            pts = c + r[sl, None, None] * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
            rows = _field_rows(sc, s0, beta, n, pts.reshape(-1, 2)).reshape(theta.shape + (n,))
            rows = -rows
            rows[..., 0] += 1.0
            ang = np.einsum("mpk,p->mk", rows, panel_w) * length[sl, None]
            out[sl] = lam * r[sl, None] * ang
        return out

    d_all = np.hypot(ys[:, 0] - c[0], ys[:, 1] - c[1])
    bps = list(d_all)
    eps = sc.path_loss.inner_radius
    if eps > 0:
        bps += list(d_all + eps) + list(np.maximum(d_all - eps, 0))
    if hole is not None:
        dh = float(np.hypot(hole[0][0] - c[0], hole[0][1] - c[1]))
        bps += [dh + hole[1], abs(dh - hole[1])]
    return fn, float(d_all.max()), [b for b in bps if b > 0]


def campbell_row(
    sc: ShotNoiseScenario,
    s0: complex,
    beta: complex,
    n: int,
    q: QuadratureConfig | None = None,
) -> CampbellResult:
    """First row of ``lam int (I - L_H~(s0 I + beta N; x)) dx``.

    Raises
    ------
    DivergentIntegralError
        With the index of the first non-integrable entry.
    QuadratureError
        If the adaptive rule cannot meet the tolerance.
    """
    q = q or QuadratureConfig()
    s0 = complex(s0)
    beta = complex(beta)
    if not sc.active_terms:
        return CampbellResult(np.zeros(n, dtype=complex), np.zeros(n), {"route": "empty"})
    scale = max(abs(s0), abs(beta))
    if sc.is_isotropic():
        y = sc.active_terms[0][1]
        hole_r = sc.hole[1] if sc.hole is not None and sc.hole[0] == y else 0.0
        inner = max(hole_r, sc.path_loss.inner_radius)
        fn = _radial_integrand(sc, s0, beta, n, hole_r)
        split = max(_split_radius(sc, scale), 2.0 * inner)
        bps = [sc.path_loss.knee_radius, sc.path_loss.inner_radius]
        row, err, diag = integrate_radial(fn, inner, split, sc.path_loss.tail_exponent, q, bps)
        diag["route"] = "radial"
    else:
        fn, reach, bps = _planar_integrand(sc, s0, beta, n)
        split = max(_split_radius(sc, scale), 2.0 * reach) + reach
        row, err, diag = integrate_radial(fn, 0.0, split, sc.path_loss.tail_exponent, q, bps)
        diag["route"] = "planar"
    return CampbellResult(row, err, diag)


def moment_condition(sc: ShotNoiseScenario, order: int, q: QuadratureConfig | None = None):
    """Check ``int E[H~^k] dLambda < inf`` for ``k = 1..order``.

    Returns ``(first_divergent_order or None, integrals)``, where
    ``integrals[k-1] = int E[H~^k] dLambda / k!`` for the orders checked.
    Each term is checked on its own, which suffices since marks are
    nonnegative.
    """
    q = q or QuadratureConfig()
    out = np.zeros(order)
    for w, y in sc.active_terms:
        single = ShotNoiseScenario(sc.intensity, sc.path_loss, sc.fading, ((w, y),), sc.hole)
        try:
            res = campbell_row(single, 0.0, -1.0, order + 1, q)
        except DivergentIntegralError as exc:
            return exc.entry, out
        out = np.maximum(out, np.abs(res.row[1:]))
    if len(sc.active_terms) > 1:
        try:
            res = campbell_row(sc, 0.0, -1.0, order + 1, q)
            out = np.abs(res.row[1:])
        except DivergentIntegralError as exc:
            return exc.entry, out
    return None, out


def campbell_matrix_integral(
    sc: ShotNoiseScenario,
    s_block: JordanBlockSpec,
    q: QuadratureConfig | None = None,
    full_output: bool = False,
):
    """First row of ``int (I - L_H~(J; x)) Lambda(dx)`` at a Jordan block ``J``.

    Raises
    ------
    NonconvergentTransformError
        For ``Re(eigenvalue) < 0`` or when the moment condition fails at a
        purely imaginary nonzero eigenvalue.
    DivergentIntegralError
        When an entry's integrand is not integrable.
    """
    q = q or QuadratureConfig()
    lam = complex(s_block.eigenvalue)
    if lam.real < 0:
        raise NonconvergentTransformError(f"eigenvalue {lam} has negative real part")
    if lam.real == 0 and lam != 0 and s_block.size > 1:
        bad, _ = moment_condition(sc, s_block.size - 1, q)
        if bad is not None:
            raise NonconvergentTransformError(
                f"moment of order {bad} is infinite; transform undefined at eigenvalue {lam}"
            )
    res = campbell_row(sc, lam, 1.0, s_block.size, q)
    return res if full_output else res.row


def shot_noise_row(sc: ShotNoiseScenario, s0: complex, beta: complex, n: int, q: QuadratureConfig | None = None):
    """First row of ``L_I(s0 I + beta N)``.

    When the Campbell integral diverges at ``Re(s0) > 0`` the transform is the
    zero matrix; that branch warns and is never taken silently.
    """
    try:
        res = campbell_row(sc, s0, beta, n, q)
    except DivergentIntegralError as exc:
        if complex(s0).real > 0:
            warnings.warn(
                f"Campbell integral diverges ({exc}); returning the zero transform",
                RuntimeWarning,
                stacklevel=2,
            )
            return CampbellResult(np.zeros(n, dtype=complex), np.zeros(n), {"divergent": True, "entry": exc.entry})
        raise NonconvergentTransformError(
            f"Campbell integral diverges at Re(s) = 0 ({exc}); no transform value is defined"
        ) from exc
    row = expm_ut_toeplitz(-res.row)
    res.diagnostics["divergent"] = False
    return CampbellResult(row, res.error, res.diagnostics)


def shot_noise_matrix_lt(
    sc: ShotNoiseScenario,
    s_block: JordanBlockSpec,
    q: QuadratureConfig | None = None,
    full_output: bool = False,
):
    """First row of ``L_I(J) = exp(-int (I - L_H~(J; x)) Lambda(dx))``."""
    lam = complex(s_block.eigenvalue)
    if lam.real < 0:
        raise NonconvergentTransformError(f"eigenvalue {lam} has negative real part")
    if lam.real == 0 and lam != 0 and s_block.size > 1:
        bad, _ = moment_condition(sc, s_block.size - 1, q)
        if bad is not None:
            raise NonconvergentTransformError(f"moment of order {bad} is infinite")
    res = shot_noise_row(sc, lam, 1.0, s_block.size, q)
    return res if full_output else res.row


def finiteness_check(sc: ShotNoiseScenario, s_grid, q: QuadratureConfig | None = None):
    """Whether the scalar Campbell integral converges at every ``s`` in ``s_grid``.

    Returns
    -------
    ok : bool
    diagnostics : dict
        Per-``s`` value or failure reason.
    """
    q = q or QuadratureConfig()
    s_grid = np.atleast_1d(np.asarray(s_grid, dtype=float))
    if s_grid.size == 0:
        raise ValueError("s_grid must be nonempty")
    diag = {}
    ok = True
    for s in s_grid:
        try:
            res = campbell_row(sc, float(s), 1.0, 1, q)
            diag[float(s)] = {"finite": True, "value": float(res.row[0].real)}
        except (DivergentIntegralError, QuadratureError) as exc:
            ok = False
            diag[float(s)] = {"finite": False, "reason": str(exc)}
    return ok, diag
