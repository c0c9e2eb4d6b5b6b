"""Model data-defined spaces and the point-cloud ingestion path.

Every space carries a quasi-metric, a growth exponent ``q``, a stored
orthonormal eigensystem (eigenvalues ascending, ``phi_0 == 1``) and a
reference rule that integrates products of stored eigenfunctions exactly.

Points are numpy arrays of shape ``(m, coord_dim)``:

* circle: angles, ``coord_dim == 1``
* torus: angle pairs, ``coord_dim == 2``
* sphere: unit vectors in R^3, ``coord_dim == 3``
* point cloud: the cloud's own coordinates
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.spatial import cKDTree

from diffquad import _backend
from diffquad.errors import InvalidArgument, NumericFailure, RejectedEigenData, SpectrumExhausted
from diffquad.measures import PointMeasure, in_ball

TWO_PI = 2.0 * math.pi


def _geodesic_angle(a, b):
    d = np.abs(a - b) % TWO_PI
    return np.minimum(d, TWO_PI - d)


def _circle_basis(theta, max_index):
    """Columns ``1, sqrt2 cos(theta), sqrt2 sin(theta), ..., sqrt2 sin(K theta)``."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    k = np.arange(1, max_index + 1)
    out = np.empty((theta.shape[0], 2 * max_index + 1))
    out[:, 0] = 1.0
    arg = np.outer(theta, k)
    out[:, 1::2] = math.sqrt(2.0) * np.cos(arg)
    out[:, 2::2] = math.sqrt(2.0) * np.sin(arg)
    return out


@dataclass(frozen=True)
class SpectrumEntry:
    """One stored eigenpair; ``label`` identifies the analytic family member."""

    index: int
    lam: float
    label: tuple
    space: "Space" = field(repr=False, compare=False)

    def __call__(self, x):
        return self.space.basis(x)[:, self.index]


class Space:
    """Base class; subclasses fill in the geometry and the eigensystem."""

    name = "space"
    q: float
    coord_dim: int
    #: whether zonal eigen-sums can be extended past the stored spectrum
    analytic = False

    eigenvalues: np.ndarray
    labels: list
    #: every eigenvalue strictly below this value is stored
    complete_below: float

    # -- points -----------------------------------------------------------
    def as_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1, 1)
        if x.ndim == 1:
            x = x.reshape(-1, self.coord_dim) if self.coord_dim > 1 else x.reshape(-1, 1)
        if x.shape[1] != self.coord_dim:
            raise InvalidArgument(f"{self.name}: points must have {self.coord_dim} coordinates")
        return x

    # -- geometry ---------------------------------------------------------
    def distance(self, x, y) -> np.ndarray:
        """Pairwise quasi-metric, shape ``(len(x), len(y))``."""
        raise NotImplementedError

    def probe_grid(self, resolution: int) -> np.ndarray:
        raise NotImplementedError

    def random_points(self, rng: np.random.Generator, m: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def diameter(self) -> float:
        raise NotImplementedError

    # -- spectrum ---------------------------------------------------------
    def basis(self, x) -> np.ndarray:
        """Stored eigenfunctions at ``x``, shape ``(m, len(eigenvalues))``."""
        raise NotImplementedError

    @property
    def spectrum(self) -> list[SpectrumEntry]:
        return [SpectrumEntry(i, float(lam), lab, self)
                for i, (lam, lab) in enumerate(zip(self.eigenvalues, self.labels))]

    @property
    def dimension_count(self) -> int:
        return int(self.eigenvalues.shape[0])

    def indices_below(self, n: float, strict: bool = True) -> np.ndarray:
        lam = self.eigenvalues
        return np.nonzero(lam < n if strict else lam <= n)[0]

    def require_complete(self, n: float, what: str = "computation"):
        """Raise unless every eigenvalue below ``n`` is stored."""
        if n > self.complete_below:
            raise SpectrumExhausted(
                f"{what} needs eigenvalues below {n:g}; {self.name} stores them only below "
                f"{self.complete_below:g}")

    @cached_property
    def reference_rule(self) -> PointMeasure:
        raise NotImplementedError

    def spectral_matrix(self, coef, x, y) -> np.ndarray:
        """``sum_k coef[k] phi_k(x) phi_k(y)`` over the stored spectrum."""
        bx = self.basis(x)
        by = bx if y is None else self.basis(y)
        return (bx * np.asarray(coef)[None, :]) @ by.T

    # -- analytic extension (model spaces only) ---------------------------
    def zonal_matrix(self, mask: Callable, lam_max: float, x, y) -> np.ndarray:
        """``sum_{lambda_k <= lam_max} mask(lambda_k) phi_k(x) phi_k(y)`` via closed forms."""
        raise NotImplementedError

    def christoffel_count(self, t: float, strict: bool = False) -> float:
        """Exact ``sum_{lambda_k <= t} phi_k(x)^2`` (same for every x on model spaces)."""
        raise NotImplementedError

    def christoffel_growth(self, t: float) -> float:
        """Smooth upper bound ``C(t) >= sum_{lambda_k <= t} phi_k(x)^2`` and its derivative."""
        raise NotImplementedError

    def christoffel_growth_deriv(self, t: float) -> float:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# circle


class CircleSpace(Space):
    name = "circle"
    q = 1.0
    coord_dim = 1
    analytic = True

    def __init__(self, max_index: int):
        if int(max_index) < 1:
            raise InvalidArgument("circle_space: max_index must be >= 1")
        self.max_index = int(max_index)
        k = np.arange(1, self.max_index + 1)
        self.freq = np.concatenate([[0], np.repeat(k, 2)])
        self.eigenvalues = self.freq.astype(float)
        self.labels = [(0, "1")] + [(int(j), kind) for j in k for kind in ("cos", "sin")]
        self.complete_below = float(self.max_index + 1)

    def __repr__(self):
        return f"CircleSpace(max_index={self.max_index})"

    def distance(self, x, y):
        a = self.as_points(x)[:, 0]
        b = self.as_points(y)[:, 0]
        return _geodesic_angle(a[:, None], b[None, :])

    @property
    def diameter(self):
        return math.pi

    def basis(self, x):
        return _circle_basis(self.as_points(x)[:, 0], self.max_index)

    @cached_property
    def reference_rule(self):
        n = 4 * (self.max_index + 1)
        return PointMeasure(equispaced_circle(n), np.full(n, 1.0 / n))

    def probe_grid(self, resolution):
        return equispaced_circle(int(resolution))

    def random_points(self, rng, m):
        return rng.uniform(0.0, TWO_PI, size=(m, 1))

    def zonal_matrix(self, mask, lam_max, x, y):
        a = self.as_points(x)[:, 0]
        b = a if y is None else self.as_points(y)[:, 0]
        kmax = int(math.floor(lam_max))
        coef = np.asarray(mask(np.arange(kmax + 1, dtype=float)), dtype=float) * 2.0
        coef[0] *= 0.5
        delta = (a[:, None] - b[None, :]).reshape(-1)
        return _backend.cos_series(coef, delta).reshape(a.shape[0], b.shape[0])

    def christoffel_count(self, t, strict=False):
        if t < 0 or (strict and t == 0):
            return 0.0
        kmax = math.ceil(t) - 1 if strict else math.floor(t)
        return float(2 * kmax + 1)

    def christoffel_growth(self, t):
        return 2.0 * t + 1.0

    def christoffel_growth_deriv(self, t):
        return 2.0


def equispaced_circle(n: int, offset: float = 0.0) -> np.ndarray:
    return (offset + TWO_PI * np.arange(n) / n).reshape(-1, 1)


def circle_space(max_index: int) -> CircleSpace:
    return CircleSpace(max_index)


# ---------------------------------------------------------------------------
# 2-torus


class TorusSpace(Space):
    name = "torus2"
    q = 2.0
    coord_dim = 2
    analytic = True

    def __init__(self, max_index: int):
        if int(max_index) < 1:
            raise InvalidArgument("torus2_space: max_index must be >= 1")
        self.max_index = m = int(max_index)
        circ_freq = np.concatenate([[0], np.repeat(np.arange(1, m + 1), 2)])
        a, b = np.meshgrid(np.arange(2 * m + 1), np.arange(2 * m + 1), indexing="ij")
        a, b = a.ravel(), b.ravel()
        lam = np.hypot(circ_freq[a], circ_freq[b])
        keep = lam <= m + 1e-12
        order = np.lexsort((b[keep], a[keep], lam[keep]))
        self._ia = a[keep][order]
        self._ib = b[keep][order]
        self.eigenvalues = lam[keep][order]
        self.labels = [(int(circ_freq[i]), int(circ_freq[j]), int(i), int(j))
                       for i, j in zip(self._ia, self._ib)]
        norms = np.hypot(*np.meshgrid(np.arange(m + 2), np.arange(m + 2)))
        self.complete_below = float(norms[norms > m + 1e-12].min())

    def __repr__(self):
        return f"TorusSpace(max_index={self.max_index})"

    def distance(self, x, y):
        a = self.as_points(x)
        b = self.as_points(y)
        d0 = _geodesic_angle(a[:, None, 0], b[None, :, 0])
        d1 = _geodesic_angle(a[:, None, 1], b[None, :, 1])
        return np.maximum(d0, d1)

    @property
    def diameter(self):
        return math.pi

    def basis(self, x):
        p = self.as_points(x)
        c0 = _circle_basis(p[:, 0], self.max_index)
        c1 = _circle_basis(p[:, 1], self.max_index)
        return c0[:, self._ia] * c1[:, self._ib]

    @cached_property
    def reference_rule(self):
        n = 4 * (self.max_index + 1)
        t = TWO_PI * np.arange(n) / n
        g0, g1 = np.meshgrid(t, t, indexing="ij")
        pts = np.column_stack([g0.ravel(), g1.ravel()])
        return PointMeasure(pts, np.full(n * n, 1.0 / (n * n)))

    def probe_grid(self, resolution):
        side = max(1, int(math.ceil(math.sqrt(resolution))))
        t = TWO_PI * np.arange(side) / side
        g0, g1 = np.meshgrid(t, t, indexing="ij")
        return np.column_stack([g0.ravel(), g1.ravel()])

    def random_points(self, rng, m):
        return rng.uniform(0.0, TWO_PI, size=(m, 2))

    def zonal_matrix(self, mask, lam_max, x, y):
        a = self.as_points(x)
        b = a if y is None else self.as_points(y)
        kmax = int(math.floor(lam_max))
        k1, k2 = np.meshgrid(np.arange(kmax + 1), np.arange(kmax + 1), indexing="ij")
        lam = np.hypot(k1, k2)
        mult = np.where(k1 > 0, 2.0, 1.0) * np.where(k2 > 0, 2.0, 1.0)
        coef = np.where(lam <= lam_max, np.asarray(mask(lam), dtype=float) * mult, 0.0)
        d1 = (a[:, None, 0] - b[None, :, 0]).reshape(-1)
        d2 = (a[:, None, 1] - b[None, :, 1]).reshape(-1)
        return _backend.cos_series_2d(coef, d1, d2).reshape(a.shape[0], b.shape[0])

    def christoffel_count(self, t, strict=False):
        if t < 0:
            return 0.0
        r = int(math.floor(t)) + 1
        k1, k2 = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1))
        nrm = np.hypot(k1, k2)
        return float(np.count_nonzero(nrm < t if strict else nrm <= t + 1e-12))

    def christoffel_growth(self, t):
        # lattice points in a disc of radius t lie in squares inside radius t + 1/sqrt2
        return math.pi * (t + math.sqrt(0.5)) ** 2

    def christoffel_growth_deriv(self, t):
        return 2.0 * math.pi * (t + math.sqrt(0.5))


def torus2_space(max_index: int) -> TorusSpace:
    return TorusSpace(max_index)


# ---------------------------------------------------------------------------
# 2-sphere


def normalized_legendre(lmax: int, x: np.ndarray) -> np.ndarray:
    """``pbar[l, m]`` with ``mean_{[-1,1]} pbar[l,m]^2 == 1`` (no Condon-Shortley phase)."""
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    out = np.zeros((lmax + 1, lmax + 1) + x.shape)
    out[0, 0] = 1.0
    for m in range(1, lmax + 1):
        out[m, m] = math.sqrt((2 * m + 1) / (2 * m)) * s * out[m - 1, m - 1]
    for m in range(0, lmax):
        out[m + 1, m] = math.sqrt(2 * m + 3) * x * out[m, m]
    for m in range(0, lmax + 1):
        for ell in range(m + 2, lmax + 1):
            a = math.sqrt((4 * ell * ell - 1) / (ell * ell - m * m))
            b = math.sqrt(((ell - 1) ** 2 - m * m) / (4 * (ell - 1) ** 2 - 1))
            out[ell, m] = a * (x * out[ell - 1, m] - b * out[ell - 2, m])
    return out


def to_unit_vectors(colatitude, longitude) -> np.ndarray:
    colatitude = np.asarray(colatitude, dtype=float)
    longitude = np.asarray(longitude, dtype=float)
    st = np.sin(colatitude)
    return np.column_stack([st * np.cos(longitude), st * np.sin(longitude), np.cos(colatitude)])


def gauss_product_rule(n_gl: int, n_lon: int) -> PointMeasure:
    """Gauss-Legendre in cos(colatitude) times equispaced longitude, total mass 1."""
    x, w = np.polynomial.legendre.leggauss(n_gl)
    lon = TWO_PI * np.arange(n_lon) / n_lon
    xx, ll = np.meshgrid(x, lon, indexing="ij")
    ww = np.repeat(w / 2.0, n_lon) / n_lon
    return PointMeasure(to_unit_vectors(np.arccos(xx.ravel()), ll.ravel()), ww)


class SphereSpace(Space):
    name = "sphere2"
    q = 2.0
    coord_dim = 3
    analytic = True

    def __init__(self, max_degree: int):
        if int(max_degree) < 1:
            raise InvalidArgument("sphere2_space: max_degree must be >= 1")
        self.max_degree = L = int(max_degree)
        self.max_index = L
        self.degree = np.concatenate([np.full(2 * ell + 1, ell) for ell in range(L + 1)])
        self.order = np.concatenate([np.arange(-ell, ell + 1) for ell in range(L + 1)])
        self.eigenvalues = self.degree.astype(float)
        self.labels = [(int(ell), int(m)) for ell, m in zip(self.degree, self.order)]
        self.complete_below = float(L + 1)

    def __repr__(self):
        return f"SphereSpace(max_degree={self.max_degree})"

    def as_points(self, x):
        p = super().as_points(x)
        return p / np.linalg.norm(p, axis=1, keepdims=True)

    def distance(self, x, y):
        return np.arccos(np.clip(self.as_points(x) @ self.as_points(y).T, -1.0, 1.0))

    @property
    def diameter(self):
        return math.pi

    def basis(self, x):
        p = self.as_points(x)
        pbar = normalized_legendre(self.max_degree, p[:, 2])
        lon = np.arctan2(p[:, 1], p[:, 0])
        am = np.abs(self.order)
        trig = np.where(self.order[:, None] > 0, np.cos(am[:, None] * lon[None, :]),
                        np.sin(am[:, None] * lon[None, :]))
        scale = np.where(self.order == 0, 1.0, math.sqrt(2.0))
        vals = pbar[self.degree, am] * np.where(self.order[:, None] == 0, 1.0, trig) * scale[:, None]
        return vals.T

    @cached_property
    def reference_rule(self):
        L = self.max_degree
        # exact through degree 4L+1 in both factors
        return gauss_product_rule(2 * L + 1, 4 * L + 2)

    def probe_grid(self, resolution):
        n = max(1, int(resolution))
        i = np.arange(n) + 0.5
        golden = math.pi * (3.0 - math.sqrt(5.0))
        return to_unit_vectors(np.arccos(1.0 - 2.0 * i / n), golden * i)

    def random_points(self, rng, m):
        v = rng.standard_normal((m, 3))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def zonal_matrix(self, mask, lam_max, x, y):
        a = self.as_points(x)
        b = a if y is None else self.as_points(y)
        lmax = int(math.floor(lam_max))
        ell = np.arange(lmax + 1, dtype=float)
        coef = np.asarray(mask(ell), dtype=float) * (2.0 * ell + 1.0)
        t = np.clip(a @ b.T, -1.0, 1.0).reshape(-1)
        return _backend.legendre_series(coef, t).reshape(a.shape[0], b.shape[0])

    def christoffel_count(self, t, strict=False):
        if t < 0 or (strict and t == 0):
            return 0.0
        lmax = math.ceil(t) - 1 if strict else math.floor(t)
        return float((lmax + 1) ** 2)

    def christoffel_growth(self, t):
        return (t + 1.0) ** 2

    def christoffel_growth_deriv(self, t):
        return 2.0 * (t + 1.0)


def sphere2_space(max_degree: int) -> SphereSpace:
    return SphereSpace(max_degree)


# ---------------------------------------------------------------------------
# point clouds


@dataclass
class EigenData:
    """Eigensystem sampled on a point cloud, orthonormal under weights 1/M."""

    points: np.ndarray
    q: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # (K, M): row per eigenfunction
    distances: Optional[np.ndarray] = None  # (M, M)

    def __post_init__(self):
        self.points = np.asarray(self.points)
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        self.eigenvectors = np.atleast_2d(np.asarray(self.eigenvectors, dtype=float))
        if self.distances is not None:
            m = self.eigenvectors.shape[1]
            self.distances = np.asarray(self.distances, dtype=float).reshape(m, m)

    def gram_residual(self) -> float:
        v = self.eigenvectors
        m = v.shape[1]
        return float(np.max(np.abs(v @ v.T / m - np.eye(v.shape[0]))))

    def to_json(self) -> str:
        doc = {
            "q": float(self.q),
            "points": np.asarray(self.points, dtype=float).tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "eigenvectors": self.eigenvectors.tolist(),
        }
        if self.distances is not None:
            doc["distances"] = self.distances.ravel().tolist()
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EigenData":
        doc = json.loads(text)
        missing = {"q", "points", "eigenvalues", "eigenvectors"} - doc.keys()
        if missing:
            raise InvalidArgument(f"EigenData file lacks fields {sorted(missing)}")
        return cls(points=doc["points"], q=doc["q"], eigenvalues=doc["eigenvalues"],
                   eigenvectors=doc["eigenvectors"], distances=doc.get("distances"))


class PointCloudSpace(Space):
    name = "pointcloud"
    analytic = False

    def __init__(self, data: EigenData, gram_tol: float = 1e-6):
        v = data.eigenvectors
        m = v.shape[1]
        lam = data.eigenvalues
        if v.shape[0] != lam.shape[0]:
            raise RejectedEigenData("eigenvalue and eigenvector counts differ")
        if data.distances is None:
            try:
                pts = np.asarray(data.points, dtype=float)
            except (TypeError, ValueError) as exc:
                raise InvalidArgument("non-numeric points need a distance table") from exc
        else:
            try:
                pts = np.asarray(data.points, dtype=float)
            except (TypeError, ValueError):
                pts = np.arange(m, dtype=float)
        pts = pts.reshape(m, -1)
        if data.gram_residual() > gram_tol:
            raise RejectedEigenData(f"Gram deviation {data.gram_residual():.3g} exceeds {gram_tol:g}")
        if abs(lam[0]) > 1e-8 or np.ptp(v[0]) > 1e-8 * max(1.0, np.abs(v[0]).max()):
            raise RejectedEigenData("first eigenpair must be lambda=0 with a constant eigenvector")
        if np.any(np.diff(lam) < -1e-12):
            raise RejectedEigenData("eigenvalues must be nondecreasing")
        self.data = data
        self.q = float(data.q)
        self.coord_dim = pts.shape[1]
        self.points = pts
        # orient phi_0 to +1
        self.vectors = v * np.where(np.arange(v.shape[0]) == 0, np.sign(v[0, 0]), 1.0)[:, None]
        self.eigenvalues = lam.astype(float)
        self.labels = [(i,) for i in range(lam.shape[0])]
        self.complete_below = math.inf if lam.shape[0] >= m else float(lam[-1])
        self._tree = cKDTree(pts)
        self._scale = max(1.0, float(np.abs(pts).max()))

    def __repr__(self):
        return f"PointCloudSpace(M={self.points.shape[0]}, K={self.dimension_count})"

    @property
    def size(self):
        return self.points.shape[0]

    def index_of(self, x) -> np.ndarray:
        d, idx = self._tree.query(self.as_points(x))
        if np.any(d > 1e-9 * self._scale):
            raise InvalidArgument("point-cloud spaces are evaluable only at cloud points")
        return idx

    def distance(self, x, y):
        if self.data.distances is not None:
            return self.data.distances[np.ix_(self.index_of(x), self.index_of(y))]
        a = self.as_points(x)
        b = self.as_points(y)
        return np.sqrt(np.maximum(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1), 0.0))

    @property
    def diameter(self):
        return float(self.distance(self.points, self.points).max())

    def basis(self, x):
        return self.vectors[:, self.index_of(x)].T

    @cached_property
    def reference_rule(self):
        m = self.size
        return PointMeasure(self.points.copy(), np.full(m, 1.0 / m))

    def probe_grid(self, resolution):
        return self.points.copy()

    def random_points(self, rng, m):
        return self.points[rng.choice(self.size, size=m, replace=m > self.size)]

    def christoffel_count(self, t, strict=False):
        raise NotImplementedError("point-cloud Christoffel values depend on x; use kernels.christoffel")


def pointcloud_space(data: EigenData) -> PointCloudSpace:
    return PointCloudSpace(data)


def dense_laplacian_spectrum(points: Sequence, bandwidth: float, count: int, q: float = 1.0) -> EigenData:
    """Spectrum of the unnormalized graph Laplacian of a Gaussian affinity.

    The Laplacian ``D - W`` with ``W = exp(-|x-y|^2 / (2 bandwidth^2))`` is
    rescaled by ``2 / (bandwidth^2 * mean degree)`` so that on uniformly
    sampled manifolds its eigenvalues approximate those of the
    Laplace-Beltrami operator; reported eigenvalues are their square roots.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    m = pts.shape[0]
    if not 2 <= count <= m:
        raise InvalidArgument(f"count must lie in [2, {m}]")
    if m > 2000:
        raise InvalidArgument("dense eigensolver is limited to 2000 points")
    if bandwidth <= 0:
        raise InvalidArgument("bandwidth must be positive")
    if cKDTree(pts).query_pairs(1e-12 * max(1.0, np.abs(pts).max())):
        raise NumericFailure("duplicate points give a degenerate affinity")
    sq = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    w = np.exp(-sq / (2.0 * bandwidth ** 2))
    np.fill_diagonal(w, 0.0)
    deg = w.sum(axis=1)
    lap = np.diag(deg) - w
    try:
        vals, vecs = linalg.eigh(lap, subset_by_index=[0, count - 1])
    except linalg.LinAlgError as exc:
        raise NumericFailure(str(exc)) from exc
    vals = np.clip(vals, 0.0, None) * 2.0 / (bandwidth ** 2 * deg.mean())
    vecs = vecs.T * math.sqrt(m)
    vals[0] = 0.0
    vecs[0] = 1.0
    # re-orthonormalize the remaining vectors against the exact constant
    rest = vecs[1:] - vecs[1:].mean(axis=1, keepdims=True)
    if rest.shape[0]:
        qmat, _ = np.linalg.qr(rest.T)
        vecs[1:] = qmat.T * math.sqrt(m) * np.sign(np.sum(qmat.T * rest, axis=1))[:, None]
    return EigenData(points=pts, q=q, eigenvalues=np.sqrt(vals), eigenvectors=vecs)


def ball_points(space: Space, center, r: float, candidates) -> np.ndarray:
    """Candidates lying in the closed ball of radius ``r`` about ``center``."""
    cand = space.as_points(candidates)
    d = space.distance(space.as_points(center)[:1], cand)[0]
    return cand[in_ball(d, r)]
