"""Pure numpy implementations of the hot series kernels.

These mirror :mod:`diffquad._core` one-to-one and are used whenever the
compiled extension is unavailable (or ``DIFFQUAD_PURE_PYTHON=1``).
"""

import numpy as np

_CHUNK = 4096


def cos_series(a, delta):
    """Evaluate ``sum_k a[k] * cos(k * delta)`` at every entry of ``delta``."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    delta = np.ascontiguousarray(delta, dtype=np.float64)
    out = np.zeros(delta.shape[0])
    for start in range(0, a.shape[0], _CHUNK):
        k = np.arange(start, min(start + _CHUNK, a.shape[0]), dtype=np.float64)
        out += np.cos(np.outer(delta, k)) @ a[start:start + k.shape[0]]
    return out


def legendre_series(c, t):
    """Evaluate ``sum_l c[l] * P_l(t)`` by the forward three-term recurrence."""
    c = np.ascontiguousarray(c, dtype=np.float64)
    t = np.clip(np.ascontiguousarray(t, dtype=np.float64), -1.0, 1.0)
    out = np.full(t.shape[0], c[0]) if c.shape[0] else np.zeros(t.shape[0])
    if c.shape[0] < 2:
        return out
    p_prev = np.ones_like(t)
    p = t.copy()
    out += c[1] * p
    for ell in range(1, c.shape[0] - 1):
        p_prev, p = p, ((2 * ell + 1) * t * p - ell * p_prev) / (ell + 1)
        out += c[ell + 1] * p
    return out


def cos_series_2d(coef, d1, d2):
    """Evaluate ``sum_{k1,k2} coef[k1,k2] cos(k1 d1) cos(k2 d2)`` pointwise."""
    coef = np.ascontiguousarray(coef, dtype=np.float64)
    d1 = np.ascontiguousarray(d1, dtype=np.float64)
    d2 = np.ascontiguousarray(d2, dtype=np.float64)
    k1 = np.arange(coef.shape[0], dtype=np.float64)
    k2 = np.arange(coef.shape[1], dtype=np.float64)
    out = np.empty(d1.shape[0])
    step = max(1, _CHUNK * 16 // max(coef.shape[0], coef.shape[1]))
    for start in range(0, d1.shape[0], step):
        sl = slice(start, start + step)
        c1 = np.cos(np.outer(d1[sl], k1))
        c2 = np.cos(np.outer(d2[sl], k2))
        out[sl] = np.einsum("ik,ik->i", c1 @ coef, c2)
    return out


def project_simplex(v):
    """Euclidean projection of ``v`` onto the probability simplex."""
    v = np.asarray(v, dtype=np.float64)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.shape[0] + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)
