"""Finitely supported signed measures and their geometric diagnostics.

Suprema over the whole space (regularity constants, mesh norms) are taken
over the support plus a quasi-uniform probe grid, so every reported value
is a lower estimate of the true supremum.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from diffquad.errors import InvalidArgument

#: closed balls absorb rounding in the metric
BALL_TOL = 1e-12
_ROW_CHUNK = 1024


def in_ball(dist, r):
    return dist <= r + BALL_TOL * max(1.0, r)


@dataclass(frozen=True, eq=False)
class PointMeasure:
    """Signed measure with mass ``weights[i]`` at ``points[i]``."""

    points: np.ndarray
    weights: np.ndarray
    space: Any = field(default=None, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.ndim == 1:
            pts = pts.reshape(w.shape[0], -1) if w.shape[0] else pts.reshape(0, 1)
        if pts.shape[0] != w.shape[0]:
            raise InvalidArgument("points and weights differ in length")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.shape[0]

    @property
    def total_variation(self) -> float:
        return float(np.abs(self.weights).sum())

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def bind(self, space) -> "PointMeasure":
        return PointMeasure(self.points, self.weights, space)

    def integrate(self, f) -> float:
        """``sum_i w_i f(x_i)`` for a vectorized callable or precomputed values."""
        vals = f(self.points) if callable(f) else np.asarray(f, dtype=float)
        return float(self.weights @ vals)

    # -- files ------------------------------------------------------------
    def to_dict(self) -> dict:
        return {"points": self.points.tolist(), "weights": self.weights.tolist()}

    def to_json(self) -> str:
        return dumps_stable(self.to_dict())

    @classmethod
    def from_json(cls, text: str, space=None) -> "PointMeasure":
        doc = json.loads(text)
        if "points" not in doc or "weights" not in doc:
            raise InvalidArgument("measure file needs 'points' and 'weights'")
        return cls(np.asarray(doc["points"], dtype=float), doc["weights"], space)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        dim = self.points.shape[1]
        writer.writerow(["index"] + [f"x{i}" for i in range(dim)] + ["weight"])
        for i, (p, w) in enumerate(zip(self.points, self.weights)):
            writer.writerow([i] + [repr(float(v)) for v in p] + [repr(float(w))])
        return buf.getvalue()


def _stable(obj):
    if isinstance(obj, dict):
        return {str(k): _stable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_stable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _stable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _encode(obj, indent: int) -> str:
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad} {json.dumps(k)}: {_encode(obj[k], indent + 1)}' for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        return "[" + ", ".join(_encode(v, indent) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        # strict JSON has no NaN/Infinity literals
        if obj != obj:
            return "null"
        if obj in (float("inf"), float("-inf")):
            return '"inf"' if obj > 0 else '"-inf"'
        return format(obj, ".17g")
    return json.dumps(obj)


def dumps_stable(obj) -> str:
    """JSON with sorted keys and 17-significant-digit floats.

    NaN is written as ``null`` and infinities as the strings ``"inf"`` and
    ``"-inf"``.
    """
    return _encode(_stable(obj), 0) + "\n"


def _space_of(nu, space):
    space = space if space is not None else nu.space
    if space is None:
        raise InvalidArgument("a space is required for metric queries")
    return space


def ball_masses(space, nu: PointMeasure, centers, r: float, signed: bool = False) -> np.ndarray:
    """``nu(B(x, r))`` (or ``|nu|``) for each row of ``centers``."""
    if r < 0:
        raise InvalidArgument("radius must be nonnegative")
    centers = space.as_points(centers)
    w = nu.weights if signed else np.abs(nu.weights)
    out = np.empty(centers.shape[0])
    if len(nu) == 0:
        out[:] = 0.0
        return out
    for start in range(0, centers.shape[0], _ROW_CHUNK):
        d = space.distance(centers[start:start + _ROW_CHUNK], nu.points)
        out[start:start + _ROW_CHUNK] = in_ball(d, r) @ w
    return out


def total_variation(nu: PointMeasure) -> float:
    return nu.total_variation


def ball_mass(nu: PointMeasure, x, r: float, signed: bool = False, space=None) -> float:
    space = _space_of(nu, space)
    return float(ball_masses(space, nu, space.as_points(x)[:1], r, signed)[0])


def default_probe_resolution(space) -> int:
    return 4 * space.dimension_count


@dataclass
class RegularityReport:
    d: float
    constant: float
    center_set_size: int
    probe_resolution: int
    per_center: np.ndarray = field(repr=False)

    def to_dict(self):
        return {"d": self.d, "constant": self.constant, "center_set_size": self.center_set_size,
                "probe_resolution": self.probe_resolution}


def regularity_constant(nu: PointMeasure, d: float, extra_centers=None, space=None,
                        probe_resolution: Optional[int] = None) -> RegularityReport:
    """Lower estimate of ``sup_x |nu|(B(x,d)) / d^q``."""
    if d <= 0:
        raise InvalidArgument("d must be positive")
    space = _space_of(nu, space)
    res = default_probe_resolution(space) if probe_resolution is None else int(probe_resolution)
    parts = [nu.points, space.probe_grid(res)]
    if extra_centers is not None and len(extra_centers):
        parts.append(space.as_points(extra_centers))
    centers = np.concatenate([space.as_points(p) for p in parts if len(p)])
    masses = ball_masses(space, nu, centers, d)
    per_center = masses / d ** space.q
    return RegularityReport(d=float(d), constant=float(per_center.max(initial=0.0)),
                            center_set_size=centers.shape[0], probe_resolution=res,
                            per_center=per_center)


def _nearest_distance(space, probes, nodes) -> np.ndarray:
    out = np.empty(probes.shape[0])
    for start in range(0, probes.shape[0], _ROW_CHUNK):
        out[start:start + _ROW_CHUNK] = space.distance(probes[start:start + _ROW_CHUNK], nodes).min(axis=1)
    return out


def mesh_norm(space, nodes, probe_resolution: Optional[int] = None) -> float:
    """Largest probe-to-nearest-node distance (covering radius estimate)."""
    nodes = space.as_points(nodes)
    if nodes.shape[0] == 0:
        raise InvalidArgument("mesh norm of an empty set")
    res = default_probe_resolution(space) if probe_resolution is None else int(probe_resolution)
    return float(_nearest_distance(space, space.probe_grid(res), nodes).max())


def min_separation(space, nodes) -> float:
    """Exact minimum pairwise distance."""
    nodes = space.as_points(nodes)
    if nodes.shape[0] < 2:
        raise InvalidArgument("separation needs at least two points")
    best = np.inf
    for start in range(0, nodes.shape[0], _ROW_CHUNK):
        d = space.distance(nodes[start:start + _ROW_CHUNK], nodes)
        rows = np.arange(start, min(start + _ROW_CHUNK, nodes.shape[0]))
        d[np.arange(rows.shape[0]), rows] = np.inf
        best = min(best, float(d.min()))
    return best


def eta_regular_measure(space, nodes) -> PointMeasure:
    """Mass ``eta^q`` at every node, where ``eta`` is the minimal separation."""
    nodes = space.as_points(nodes)
    eta = min_separation(space, nodes)
    return PointMeasure(nodes, np.full(nodes.shape[0], eta ** space.q), space)
