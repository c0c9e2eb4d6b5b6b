"""Spectral-side analysis of functions on a space.

Functions are given either as :class:`SpectralFunction` (finitely many
coefficients against the stored eigenbasis) or as vectorized callables on
points.  All integrals against ``mu*`` go through the space's reference rule,
and ``p``-norms are reference-rule norms (the sup norm is the maximum over
reference nodes).

The distance ``dist(p; f, Pi_N)`` is represented throughout by
``||f - sigma_N(f)||_p``, which is within constant factors of it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from diffquad.errors import InvalidArgument, SpectrumExhausted
from diffquad.kernels import Mask, cutoff_mask
from diffquad.measures import PointMeasure
from diffquad.spaces import Space


@dataclass(frozen=True)
class SpectralFunction:
    """``sum_k coefficients[k] phi_k`` with ``k`` indexing the stored spectrum."""

    coefficients: dict = field(default_factory=dict)

    @classmethod
    def from_array(cls, coef) -> "SpectralFunction":
        coef = np.asarray(coef, dtype=float)
        return cls({int(k): float(coef[k]) for k in np.nonzero(coef)[0]})

    @classmethod
    def basis_function(cls, k: int, value: float = 1.0) -> "SpectralFunction":
        return cls({int(k): float(value)})

    def as_array(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        for k, v in self.coefficients.items():
            if k >= size:
                raise SpectrumExhausted(f"coefficient index {k} beyond the stored spectrum ({size})")
            out[k] = v
        return out

    def max_index(self) -> int:
        return max(self.coefficients, default=0)

    def __call__(self, space: Space, x) -> np.ndarray:
        return evaluate(space, self, x)

    def to_json(self) -> str:
        items = sorted(self.coefficients.items())
        return json.dumps({"coefficients": [[k, v] for k, v in items]}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SpectralFunction":
        doc = json.loads(text)
        return cls({int(k): float(v) for k, v in doc["coefficients"]})


FunctionLike = Union[SpectralFunction, Callable]


def evaluate(space: Space, f: FunctionLike, x) -> np.ndarray:
    if isinstance(f, SpectralFunction):
        idx = np.array(sorted(f.coefficients), dtype=int)
        if idx.size == 0:
            return np.zeros(space.as_points(x).shape[0])
        if idx[-1] >= space.dimension_count:
            raise SpectrumExhausted("coefficient index beyond the stored spectrum")
        vals = np.array([f.coefficients[k] for k in idx])
        return space.basis(x)[:, idx] @ vals
    return np.asarray(f(space.as_points(x)), dtype=float).reshape(-1)


def _ref(space: Space) -> PointMeasure:
    return space.reference_rule


def _ref_basis(space: Space) -> np.ndarray:
    cache = space.__dict__.setdefault("_ref_basis_cache", {})
    if "B" not in cache:
        cache["B"] = space.basis(_ref(space).points)
    return cache["B"]


def coefficient_array(space: Space, f: FunctionLike) -> np.ndarray:
    """All stored Fourier coefficients ``<f, phi_k>``."""
    if isinstance(f, SpectralFunction):
        return f.as_array(space.dimension_count)
    rule = _ref(space)
    vals = evaluate(space, f, rule.points)
    return _ref_basis(space).T @ (rule.weights * vals)


def fourier_coefficient(space: Space, f: FunctionLike, k: int) -> float:
    if not 0 <= k < space.dimension_count:
        raise SpectrumExhausted(f"index {k} outside the stored spectrum")
    if isinstance(f, SpectralFunction):
        return float(f.coefficients.get(int(k), 0.0))
    rule = _ref(space)
    return float(rule.weights @ (evaluate(space, f, rule.points) * _ref_basis(space)[:, k]))


def _norm_of_values(vals: np.ndarray, weights: np.ndarray, p) -> np.ndarray:
    """Reference-rule ``p``-norms of the columns of ``vals``."""
    a = np.abs(vals)
    if p == math.inf:
        return a.max(axis=0)
    if p == 1:
        return weights @ a
    if p == 2:
        return np.sqrt(weights @ (a * a))
    if p < 1:
        raise InvalidArgument("p must be >= 1")
    return (weights @ a ** p) ** (1.0 / p)


def parse_p(p) -> float:
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity", "oo"):
            return math.inf
        p = float(p)
    p = float(p)
    if p < 1:
        raise InvalidArgument("p must be >= 1")
    return p


def conjugate_exponent(p: float) -> float:
    if p == 1:
        return math.inf
    if p == math.inf:
        return 1.0
    return p / (p - 1.0)


def lp_norm(space: Space, f: FunctionLike, p) -> float:
    p = parse_p(p)
    rule = _ref(space)
    return float(_norm_of_values(evaluate(space, f, rule.points)[:, None], rule.weights, p)[0])


# ---------------------------------------------------------------------------
# summability operators


def filter_values(space: Space, H: Mask, N: float) -> np.ndarray:
    """``H(lambda_k / N)`` over the stored spectrum, after a completeness check."""
    if N <= 0:
        raise InvalidArgument("N must be positive")
    space.require_complete(N * H.support, "sigma_N")
    vals = np.asarray(H(space.eigenvalues / N), dtype=float)
    vals[space.eigenvalues >= N * H.support] = 0.0
    return vals


def sigma_coefficients(space: Space, f: FunctionLike, N: float, H: Optional[Mask] = None,
                       nu: Optional[PointMeasure] = None) -> np.ndarray:
    """Coefficients of ``sigma_N(H; nu; f)`` in the stored basis."""
    H = H or cutoff_mask()
    filt = filter_values(space, H, N)
    if nu is None:
        moments = coefficient_array(space, f)
    else:
        moments = space.basis(nu.points).T @ (nu.weights * evaluate(space, f, nu.points))
    return filt * moments


def sigma(space: Space, f: FunctionLike, N: float, x, H: Optional[Mask] = None,
          nu: Optional[PointMeasure] = None) -> np.ndarray:
    """``int f(y) Phi_N(H; x, y) dnu(y)`` at each point of ``x`` (``nu = mu*`` by default)."""
    coef = sigma_coefficients(space, f, N, H, nu)
    idx = np.nonzero(coef)[0]
    if idx.size == 0:
        return np.zeros(space.as_points(x).shape[0])
    return space.basis(x)[:, idx] @ coef[idx]


def tau(space: Space, f: FunctionLike, j: int, x) -> np.ndarray:
    """Dyadic piece: ``sigma_1`` for ``j = 0``, else ``sigma_{2^j} - sigma_{2^{j-1}}``."""
    if j < 0:
        raise InvalidArgument("j must be >= 0")
    if j == 0:
        return sigma(space, f, 1.0, x)
    coef = sigma_coefficients(space, f, 2.0 ** j) - sigma_coefficients(space, f, 2.0 ** (j - 1))
    return space.basis(x) @ coef


def bessel_apply(space: Space, r: float, P: SpectralFunction) -> SpectralFunction:
    """Coefficientwise ``(lambda_k + 1)^r``."""
    lam = space.eigenvalues
    return SpectralFunction({k: v * (lam[k] + 1.0) ** r for k, v in P.coefficients.items()})


def dg_apply(space: Space, beta: float, P: SpectralFunction) -> SpectralFunction:
    """Coefficientwise division by ``b(lambda_k) = (1 + lambda_k)^-beta``."""
    lam = space.eigenvalues
    return SpectralFunction({k: v * (1.0 + lam[k]) ** beta for k, v in P.coefficients.items()})


# ---------------------------------------------------------------------------
# approximation and smoothness


def _values_and_coefficients(space: Space, f: FunctionLike):
    rule = _ref(space)
    if isinstance(f, SpectralFunction):
        coef = f.as_array(space.dimension_count)
        return _ref_basis(space) @ coef, coef
    vals = evaluate(space, f, rule.points)
    return vals, _ref_basis(space).T @ (rule.weights * vals)


def degree_approx_error(space: Space, f: FunctionLike, N: float, p) -> float:
    """``||f - sigma_N(f)||_p`` (surrogate for the degree-N approximation error)."""
    p = parse_p(p)
    vals, coef = _values_and_coefficients(space, f)
    approx = _ref_basis(space) @ (filter_values(space, cutoff_mask(), N) * coef)
    return float(_norm_of_values((vals - approx)[:, None], _ref(space).weights, p)[0])


def jackson_surrogate(space: Space, f: FunctionLike, N: float, p, r: float) -> float:
    """``||f - sigma_N f||_p + N^-r ||Delta^r sigma_N f||_p`` (stands in for the K-functional)."""
    p = parse_p(p)
    vals, coef = _values_and_coefficients(space, f)
    filt = filter_values(space, cutoff_mask(), N)
    B = _ref_basis(space)
    w = _ref(space).weights
    err = _norm_of_values((vals - B @ (filt * coef))[:, None], w, p)[0]
    smooth = _norm_of_values((B @ (filt * coef * (space.eigenvalues + 1.0) ** r))[:, None], w, p)[0]
    return float(err + N ** (-r) * smooth)


@dataclass
class SmoothnessEstimate:
    gamma: float
    p: float
    norm_p: float
    dyadic_levels: list
    estimate: float

    def to_dict(self):
        return {"gamma": self.gamma, "p": self.p, "norm_p": self.norm_p,
                "dyadic_levels": [list(v) for v in self.dyadic_levels], "estimate": self.estimate}


def _auto_dyadic_max(space: Space, coef: np.ndarray) -> int:
    nz = np.nonzero(coef)[0]
    top = float(space.eigenvalues[nz].max()) if nz.size else 0.0
    # sigma_n reproduces Pi_{n/2}
    return max(0, int(math.ceil(math.log2(max(2.0 * top, 1.0)))) + 1)


def smoothness_norm(space: Space, f: FunctionLike, gamma: float, p,
                    dyadic_max: Optional[int] = None) -> SmoothnessEstimate:
    """``||f||_p + max_{n = 1, 2, ..., 2^dyadic_max} n^gamma ||f - sigma_n f||_p``."""
    if gamma <= 0:
        raise InvalidArgument("gamma must be positive")
    p = parse_p(p)
    if dyadic_max is None:
        if not isinstance(f, SpectralFunction):
            raise InvalidArgument("dyadic_max is required for sampled functions")
        dyadic_max = _auto_dyadic_max(space, f.as_array(space.dimension_count))
    vals, coef = _values_and_coefficients(space, f)
    poly = isinstance(f, SpectralFunction)
    norms = smoothness_norms_batch(space, None if poly else vals[:, None], coef[:, None], gamma, p,
                                   dyadic_max)
    est, base, levels = norms[0][0], norms[1][0], norms[2]
    return SmoothnessEstimate(gamma=float(gamma), p=p, norm_p=float(base),
                              dyadic_levels=[(float(n), float(v[0])) for n, v in levels],
                              estimate=float(est))


def smoothness_norms_batch(space: Space, vals: Optional[np.ndarray], coef: np.ndarray, gamma: float,
                           p: float, dyadic_max: int):
    """Vectorized smoothness estimates for the columns of ``coef``.

    ``vals`` holds the functions at the reference nodes; pass ``None`` for
    diffusion polynomials, whose residuals are then formed from coefficients.
    Returns ``(estimates, p_norms, [(n, n^gamma * err per column), ...])``.
    """
    w = _ref(space).weights
    active = np.nonzero(np.any(coef != 0, axis=1))[0]
    B = _ref_basis(space)[:, active]
    c = coef[active]
    if vals is None:
        vals = B @ c
        polynomial = True
    else:
        polynomial = False
    base = _norm_of_values(vals, w, p)
    best = np.zeros(coef.shape[1])
    levels = []
    for i in range(dyadic_max + 1):
        n = 2.0 ** i
        if polynomial:
            # only the active (stored) coefficients enter, so no completeness check
            lam = space.eigenvalues[active]
            filt = np.where(lam < n, cutoff_mask()(lam / n), 0.0)
        else:
            filt = filter_values(space, cutoff_mask(), n)[active]
        if polynomial:
            diff = B @ (c * (1.0 - filt)[:, None])
        else:
            diff = vals - B @ (c * filt[:, None])
        scaled = n ** gamma * _norm_of_values(diff, w, p)
        levels.append((n, scaled))
        best = np.maximum(best, scaled)
    return base + best, base, levels
