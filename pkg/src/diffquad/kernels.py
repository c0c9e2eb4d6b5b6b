"""Spectral masks and the kernels they generate.

A kernel here is an eigen-sum ``sum_k m(lambda_k) phi_k(x) phi_k(y)`` for a
spectral multiplier ``m``:

* localized kernels ``Phi_N(H)`` use ``m(lam) = H(lam / N)`` with compact
  support, so the sum is finite and exact;
* the heat kernel ``K_t`` uses ``exp(-t lam^2)``;
* type-beta kernels ``G`` and ``G*`` use ``b(lam) = (1 + lam)^-beta`` and
  ``b(lam)^2`` (the latter without the constant term).

Non-compact multipliers are truncated at a level chosen so that a
certified bound on the discarded tail stays below ``tail_tolerance``; the
computation refuses rather than truncating silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from diffquad.errors import InvalidArgument, SpectrumExhausted
from diffquad.spaces import Space

DEFAULT_TAIL_TOL = 1e-10
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(160)


@lru_cache(maxsize=1)
def _bump_mass() -> float:
    return float(integrate.quad(_bump, 0.0, 1.0, epsabs=0, epsrel=1e-13)[0])


def _bump(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = (u > 0) & (u < 1)
    ui = u[inside]
    out[inside] = np.exp(-1.0 / (ui * (1.0 - ui)))
    return out


def _bump_cdf(u):
    """``int_0^u bump / int_0^1 bump`` for ``u`` in [0, 1], by Gauss-Legendre."""
    u = np.asarray(u, dtype=float)
    nodes = 0.5 * u[..., None] * (_GL_NODES + 1.0)
    return 0.5 * u * (_bump(nodes) @ _GL_WEIGHTS) / _bump_mass()


def cutoff_h(t):
    """C-infinity even cutoff: 1 on [0, 1/2], 0 beyond 1, decreasing between."""
    t = np.abs(np.asarray(t, dtype=float))
    out = np.where(t <= 0.5, 1.0, 0.0)
    mid = (t > 0.5) & (t < 1.0)
    if np.any(mid):
        u = 2.0 * (t[mid] - 0.5)
        # integrate from whichever end is closer to keep the small side accurate
        lo = u <= 0.5
        val = np.empty_like(u)
        val[lo] = 1.0 - _bump_cdf(u[lo])
        val[~lo] = _bump_cdf(1.0 - u[~lo])
        out = out.astype(float)
        out[mid] = val
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Mask:
    """Scalar profile on [0, inf) together with its support and smoothness."""

    kind: str
    evaluator: Callable = field(repr=False)
    support: float = math.inf
    beta: Optional[float] = None
    smoothness_S: float = math.inf

    def __call__(self, t):
        return self.evaluator(np.asarray(t, dtype=float))

    @property
    def compact(self) -> bool:
        return math.isfinite(self.support)


def cutoff_mask() -> Mask:
    return Mask("cutoff-h", cutoff_h, support=1.0)


def band_g() -> Mask:
    """``h(t) - h(2t)``, supported in [1/4, 1]."""
    return Mask("band-g", lambda t: cutoff_h(t) - cutoff_h(2.0 * t), support=1.0)


def band_gtilde() -> Mask:
    """``h(t/2) - h(4t)``; equals 1 wherever ``band_g`` is nonzero."""
    return Mask("band-Gtilde", lambda t: cutoff_h(0.5 * t) - cutoff_h(4.0 * t), support=2.0)


def beta_mask(beta: float) -> Mask:
    """``b(t) = (1 + |t|)^-beta`` (type beta with ``F_b == 1``)."""
    return Mask("beta", lambda t: (1.0 + np.abs(t)) ** (-beta), beta=float(beta))


def custom_mask(func: Callable, support: float = math.inf, smoothness_S: float = math.inf) -> Mask:
    return Mask("custom", func, support=support, smoothness_S=smoothness_S)


# ---------------------------------------------------------------------------
# tail certification


def tail_bound(space: Space, multiplier: Callable, L: float) -> float:
    """Bound on ``|sum_{lambda_k > L} m(lambda_k) phi_k(x) phi_k(y)|``.

    ``m`` must be nonnegative and nonincreasing on ``[L, inf)``.  On model
    spaces the Christoffel sum ``C(t)`` is exact at ``L`` and bounded above by
    a smooth ``C_b(t)``; Stieltjes integration by parts then gives
    ``m(L)(C_b(L) - C(L)) + int_L^inf C_b'(t) m(t) dt``.  Cauchy-Schwarz moves the
    diagonal bound to off-diagonal pairs.
    """
    if not space.analytic:
        raise SpectrumExhausted("tail bounds beyond the stored spectrum need an analytic space")
    mL = float(multiplier(np.array([L]))[0])
    gap = space.christoffel_growth(L) - space.christoffel_count(L)
    return mL * max(gap, 0.0) + _growth_integral(space, multiplier, L)


_TAIL_NODES, _TAIL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def _growth_integral(space, multiplier, L):
    """``int_L^inf C_b'(t) m(t) dt`` over dyadic intervals, with a geometric remainder."""
    a = max(float(L), 1.0)
    total = 0.0
    if L < 1.0:
        t = 0.5 * (1.0 - L) * (_TAIL_NODES + 1.0) + L
        vals = np.array([space.christoffel_growth_deriv(v) for v in t]) * multiplier(t)
        total += 0.5 * (1.0 - L) * float(vals @ _TAIL_WEIGHTS)
    prev = None
    for _ in range(4000):
        t = 0.5 * a * (_TAIL_NODES + 1.0) + a
        vals = np.array([space.christoffel_growth_deriv(v) for v in t]) * multiplier(t)
        term = 0.5 * a * float(vals @ _TAIL_WEIGHTS)
        total += term
        if prev is not None and prev > 0:
            ratio = term / prev
            if ratio < 0.95 and term * ratio / (1.0 - ratio) <= 1e-12 * total:
                return total + term * ratio / (1.0 - ratio)
        if term == 0.0:
            return total
        prev = term
        a *= 2.0
    ratio = term / prev
    if ratio >= 1.0:
        return math.inf
    return total + term * ratio / (1.0 - ratio)


_TRUNCATION_LIMIT = {"circle": 2 ** 23, "torus2": 2 ** 11, "sphere2": 2 ** 15}


def truncation_level(space: Space, multiplier: Callable, tol: float, key=None) -> tuple[int, float]:
    """Smallest integer level ``L`` whose certified tail is at most ``tol``."""
    if key is not None:
        return _cached_level(space, key, multiplier, tol)
    return _find_level(space, multiplier, tol)


_LEVEL_CACHE: dict = {}


def _cached_level(space, key, multiplier, tol):
    k = (type(space).__name__, key, tol)
    if k not in _LEVEL_CACHE:
        _LEVEL_CACHE[k] = _find_level(space, multiplier, tol)
    return _LEVEL_CACHE[k]


def _find_level(space, multiplier, tol):
    limit = _TRUNCATION_LIMIT.get(space.name, 2 ** 12)
    hi = 8
    while tail_bound(space, multiplier, hi) > tol:
        hi *= 2
        if hi > limit:
            raise SpectrumExhausted(
                f"tail bound cannot reach {tol:g} below truncation level {limit} on {space.name}")
    lo = hi // 2 if hi > 8 else 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_bound(space, multiplier, mid) <= tol:
            hi = mid
        else:
            lo = mid
    return hi, tail_bound(space, multiplier, hi)


# ---------------------------------------------------------------------------
# kernel handles


class KernelHandle:
    """A spectral kernel bound to a space, evaluable on point pairs.

    ``truncate="certified"`` extends analytic spaces past the stored spectrum
    until the tail bound meets ``tail_tolerance``; ``truncate="stored"`` sums
    the stored spectrum only (the form integrated exactly by reference rules)
    and records the tail bound without enforcing it.
    """

    def __init__(self, space: Space, multiplier: Callable, *, support: float = math.inf,
                 tail_tolerance: float = DEFAULT_TAIL_TOL, exclude_constant: bool = False,
                 truncate: str = "certified", key=None, label: str = "kernel"):
        if truncate not in ("certified", "stored"):
            raise InvalidArgument("truncate must be 'certified' or 'stored'")
        self.space = space
        self.multiplier = multiplier
        self.support = support
        self.tail_tolerance = tail_tolerance
        self.exclude_constant = exclude_constant
        self.label = label
        self.truncate = truncate
        if math.isfinite(support):
            space.require_complete(support, label)
            self.lam_max = support
            self.tail = 0.0
            self.mode = "zonal" if space.analytic else "spectral"
        elif truncate == "stored" or not space.analytic:
            self.lam_max = float(space.eigenvalues[-1])
            self.mode = "spectral"
            self.tail = self._stored_tail()
            if truncate == "certified" and self.tail > tail_tolerance:
                raise SpectrumExhausted(
                    f"{label}: tail bound {self.tail:.3g} exceeds tolerance {tail_tolerance:g}")
        else:
            self.lam_max, self.tail = truncation_level(space, multiplier, tail_tolerance, key)
            self.mode = "zonal"

    def _stored_tail(self) -> float:
        space = self.space
        if space.analytic:
            return tail_bound(space, self.multiplier, float(space.eigenvalues[-1]))
        m = space.size
        if space.dimension_count >= m:
            return 0.0
        # missing eigenfunctions have lambda >= the last stored one and sum (with
        # the stored ones) to M at every cloud point
        mlast = float(self.multiplier(space.eigenvalues[-1:])[0])
        stored = np.sum(space.vectors ** 2, axis=0)
        return mlast * float(np.max(m - stored))

    def coefficients(self) -> np.ndarray:
        """Multiplier over the stored spectrum (the spectral route)."""
        coef = np.asarray(self.multiplier(self.space.eigenvalues), dtype=float).copy()
        if math.isfinite(self.support):
            coef[self.space.eigenvalues >= self.support] = 0.0
        if self.exclude_constant:
            coef[0] = 0.0
        return coef

    def __call__(self, x, y=None, method: Optional[str] = None) -> np.ndarray:
        method = method or self.mode
        if method == "spectral":
            return self.space.spectral_matrix(self.coefficients(), x, y)
        out = self.space.zonal_matrix(self.multiplier, self.lam_max, x, y)
        if self.exclude_constant:
            out = out - float(self.multiplier(np.zeros(1))[0])
        return out

    def diag(self, x) -> np.ndarray:
        x = self.space.as_points(x)
        return np.array([self(x[i:i + 1])[0, 0] for i in range(x.shape[0])])


def localized(space: Space, H: Mask, N: float) -> KernelHandle:
    if N <= 0:
        raise InvalidArgument("N must be positive")
    if not H.compact:
        raise InvalidArgument("localized kernels need a compactly supported mask")
    return KernelHandle(space, lambda lam: H(lam / N), support=N * H.support,
                        label=f"Phi_{N:g}({H.kind})")


def heat(space: Space, t: float, tail_tolerance: float = DEFAULT_TAIL_TOL) -> KernelHandle:
    if not 0 < t <= 1:
        raise InvalidArgument("diffusion time must lie in (0, 1]")
    return KernelHandle(space, lambda lam: np.exp(-t * lam * lam), tail_tolerance=tail_tolerance,
                        key=("heat", t), label=f"K_{t:g}")


def beta_handle(space: Space, beta: float, tail_tolerance: float = DEFAULT_TAIL_TOL,
                star: bool = False, truncate: str = "certified") -> KernelHandle:
    power = 2.0 * beta if star else beta
    if power <= space.q:
        raise InvalidArgument(
            f"beta={beta:g} too small: the {'G*' if star else 'G'} series needs "
            f"{'2 beta' if star else 'beta'} > q = {space.q:g}")
    return KernelHandle(space, lambda lam: (1.0 + lam) ** (-power), tail_tolerance=tail_tolerance,
                        exclude_constant=star, truncate=truncate, key=("beta", power),
                        label=("G*" if star else "G") + f"[beta={beta:g}]")


def localized_kernel(space: Space, H: Mask, N: float, x, y) -> np.ndarray:
    """``Phi_N(H; x, y)`` as a ``(len(x), len(y))`` matrix."""
    return localized(space, H, N)(x, y)


def heat_kernel(space: Space, t: float, x, y, tail_tolerance: float = DEFAULT_TAIL_TOL) -> np.ndarray:
    return heat(space, t, tail_tolerance)(x, y)


def beta_kernel(space: Space, beta: float, x, y, tail_tolerance: float = DEFAULT_TAIL_TOL) -> np.ndarray:
    """``G(b; x, y)`` with ``b(t) = (1+t)^-beta``, constant term included."""
    return beta_handle(space, beta, tail_tolerance)(x, y)


def beta_kernel_star(space: Space, beta: float, x, y, tail_tolerance: float = DEFAULT_TAIL_TOL) -> np.ndarray:
    """``G*(x, y) = sum_{k >= 1} b(lambda_k)^2 phi_k(x) phi_k(y)``."""
    return beta_handle(space, beta, tail_tolerance, star=True)(x, y)


def christoffel(space: Space, N: float, x) -> np.ndarray:
    """``sum_{lambda_j < N} phi_j(x)^2`` at each point of ``x``."""
    space.require_complete(N, "christoffel")
    idx = space.indices_below(N, strict=True)
    return np.sum(space.basis(x)[:, idx] ** 2, axis=1)


# ---------------------------------------------------------------------------
# localization diagnostics


def ring_points(space: Space, center, r: float, n: int = 64) -> np.ndarray:
    """Points at distance ``r`` from ``center`` (all of them on the circle)."""
    c = space.as_points(center)[:1]
    if space.name == "circle":
        return np.array([[c[0, 0] + r], [c[0, 0] - r]])
    if space.name == "torus2":
        s = np.linspace(-r, r, max(2, n // 4), endpoint=False)
        edges = [np.column_stack([s, np.full_like(s, r)]), np.column_stack([np.full_like(s, r), -s]),
                 np.column_stack([-s, np.full_like(s, -r)]), np.column_stack([np.full_like(s, -r), s])]
        return c + np.concatenate(edges)
    if space.name == "sphere2":
        z = c[0]
        a = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = a - (a @ z) * z
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(z, e1)
        ang = 2 * math.pi * np.arange(n) / n
        return (math.cos(r) * z[None, :]
                + math.sin(r) * (np.cos(ang)[:, None] * e1 + np.sin(ang)[:, None] * e2))
    pts = space.probe_grid(0)
    d = space.distance(c, pts)[0]
    width = max(1e-12, 0.02 * max(r, 1e-3))
    return pts[np.abs(d - r) <= width]


def ball_samples(space: Space, center, radius: float, n_radii: int = 24, n_ring: int = 32) -> np.ndarray:
    parts = [space.as_points(center)[:1]]
    for r in np.linspace(0.0, radius, n_radii + 1)[1:]:
        ring = ring_points(space, center, r, n_ring)
        if len(ring):
            parts.append(ring)
    return np.concatenate(parts)


@dataclass
class LocalizationProfile:
    radii: np.ndarray
    sup_abs: np.ndarray
    bound: np.ndarray
    decay_exponent: float
    constant: float
    S: float
    N: float
    fit_mask: np.ndarray = field(repr=False)

    def rows(self):
        return list(zip(self.radii.tolist(), self.sup_abs.tolist(), self.bound.tolist()))


def fit_loglog_slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def localization_profile(space: Space, H: Mask, N: float, center, radii: Sequence[float],
                         S: float = 8.0, n_ring: int = 64, noise_floor: float = 1e-12) -> LocalizationProfile:
    """Empirical ``sup_{rho(x,y)=r} |Phi_N(x, y)|`` against ``c N^q / max(1, (N r)^S)``.

    Radii whose sup falls below ``noise_floor * Phi_N(x, x)`` sit at the
    rounding floor and are excluded from the exponent fit.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(radii < 0):
        raise InvalidArgument("radii must be nonnegative")
    kern = localized(space, H, N)
    c = space.as_points(center)[:1]
    diag = float(kern(c, c)[0, 0])
    sup = np.empty(radii.shape[0])
    for i, r in enumerate(radii):
        pts = c if r == 0 else ring_points(space, c, r, n_ring)
        sup[i] = float(np.max(np.abs(kern(c, pts)))) if len(pts) else 0.0
    scale = np.maximum(1.0, (N * radii) ** S)
    constant = float(np.max(sup * scale) / N ** space.q)
    bound = constant * N ** space.q / scale
    fit = (radii >= 4.0 / N) & (radii <= 1.0) & (sup > noise_floor * abs(diag))
    return LocalizationProfile(radii, sup, bound, fit_loglog_slope(radii[fit], sup[fit]),
                               constant, S, N, fit)


def phin_lower_bound_check(space: Space, m: float, beta_search: Sequence[float],
                           centers=None, floor: float = 0.1, sweep: int = 3):
    """Largest ``beta`` keeping ``min_{y in B(x, beta/m)} |Phi_m(x,y)| / m^q`` above ``floor``.

    The ratio is checked at ``m, m/2, ..., m/2^(sweep-1)`` over the given
    centers (default: eight probe points).  Returns ``(best_beta, ratio at m)``
    where ``best_beta`` is ``None`` if no candidate passes, together with the
    full table ``{beta: [ratio per m]}``.
    """
    if centers is None:
        centers = space.probe_grid(8)
    centers = space.as_points(centers)
    ms = [m / 2 ** i for i in range(sweep)]
    table = {}
    for beta in beta_search:
        ratios = []
        for mm in ms:
            kern = localized(space, cutoff_mask(), mm)
            worst = math.inf
            for c in centers:
                ys = ball_samples(space, c, beta / mm)
                worst = min(worst, float(np.min(np.abs(kern(c, ys)))))
            ratios.append(worst / mm ** space.q)
        table[float(beta)] = ratios
    passing = [b for b, r in table.items() if min(r) >= floor]
    best = max(passing) if passing else None
    ratio = table[best][0] if best is not None else 0.0
    return best, ratio, table
