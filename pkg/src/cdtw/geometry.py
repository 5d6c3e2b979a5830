"""Points, curves, polygonal norms as gauges, and arc-length parametrization.

A polygonal norm is the gauge (Minkowski functional) of a linearly
transformed regular k-gon with an even number of vertices, so it is a
genuine norm: positively homogeneous, symmetric, and linear on each of
the k cones spanned by consecutive polygon vertices.  That cone-wise
linearity is what the rest of the package exploits.

Everything is 2D and binary64.  Geometric comparisons use an absolute
tolerance of ``EPS_GEOM`` scaled by the relevant instance diameter.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    InvalidCurve,
    InvalidEpsilon,
    InvalidK,
    OutOfDomain,
    SingularTransform,
    Undefined,
)

TWO_PI = 2.0 * math.pi

# Base absolute tolerance; callers scale it by a bounding-box diameter.
EPS_GEOM = 1e-9


@dataclass(frozen=True, slots=True)
class Point2:
    """A point or vector in the plane."""

    x: float
    y: float

    def __add__(self, other: "Point2") -> "Point2":
        return Point2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Point2") -> "Point2":
        return Point2(self.x - other.x, self.y - other.y)

    def __mul__(self, scalar: float) -> "Point2":
        return Point2(self.x * scalar, self.y * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Point2":
        return Point2(-self.x, -self.y)

    def __iter__(self):
        yield self.x
        yield self.y

    def dot(self, other: "Point2") -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Point2") -> float:
        return self.x * other.y - self.y * other.x

    def norm2(self) -> float:
        return math.hypot(self.x, self.y)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


def as_point(p) -> Point2:
    """Coerce a Point2 or a length-2 sequence into a Point2."""
    if isinstance(p, Point2):
        return p
    x, y = p
    return Point2(float(x), float(y))


@dataclass(frozen=True)
class Curve:
    """Polygonal curve given by its vertex sequence (n+1 vertices, n >= 1)."""

    vertices: tuple[Point2, ...]

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise InvalidCurve("curve needs at least two vertices")
        for v in self.vertices:
            if not v.is_finite():
                raise InvalidCurve(f"non-finite vertex {v}")
        for a, b in zip(self.vertices, self.vertices[1:]):
            if a.x == b.x and a.y == b.y:
                raise InvalidCurve(f"repeated consecutive vertex {a}")

    @property
    def n_segments(self) -> int:
        return len(self.vertices) - 1

    def segment(self, i: int) -> tuple[Point2, Point2]:
        return self.vertices[i], self.vertices[i + 1]

    def translated(self, v: Point2) -> "Curve":
        return Curve(tuple(p + v for p in self.vertices))

    def scaled(self, lam: float) -> "Curve":
        return Curve(tuple(Point2(p.x * lam, p.y * lam) for p in self.vertices))


def make_curve(points: Sequence) -> Curve:
    return Curve(tuple(as_point(p) for p in points))


class PolygonalNorm:
    """Gauge of psi(R_k) for a regular k-gon R_k and an invertible linear psi.

    Evaluation uses the cone decomposition: with theta_r = r*2*pi/k and
    w = psi^{-1}(z), the cone index is ceil(ang(w) / theta_1) for the
    east-counterclockwise angle ang(w) in (0, 2*pi], and on cone r

        gauge(z) = a_r * w_1 + b_r * w_2,
        a_r = (sin theta_r - sin theta_{r-1}) / sin theta_1,
        b_r = (cos theta_{r-1} - cos theta_r) / sin theta_1.

    Both cones adjacent to a boundary ray give the same value there, so
    the tie direction of the ceiling is value-neutral.
    """

    __slots__ = (
        "k",
        "psi",
        "psi_inv",
        "vertices",
        "unit_vertices",
        "cone_coeffs",
        "theta1",
        "_rows",
        "_psi_inv_np",
        "_cone_a_np",
        "_cone_b_np",
    )

    def __init__(self, k: int, psi: tuple[tuple[float, float], tuple[float, float]]):
        (p11, p12), (p21, p22) = psi
        det = p11 * p22 - p12 * p21
        scale = max(abs(p11), abs(p12), abs(p21), abs(p22), 1.0)
        if abs(det) <= 1e-12 * scale * scale:
            raise SingularTransform(f"psi is singular (det={det})")
        self.k = k
        self.psi = ((p11, p12), (p21, p22))
        self.psi_inv = ((p22 / det, -p12 / det), (-p21 / det, p11 / det))
        self.theta1 = TWO_PI / k

        cos = [math.cos(r * self.theta1) for r in range(k + 1)]
        sin = [math.sin(r * self.theta1) for r in range(k + 1)]
        self.vertices = tuple(
            Point2(p11 * cos[r] + p12 * sin[r], p21 * cos[r] + p22 * sin[r])
            for r in range(1, k + 1)
        )
        s1 = sin[1]
        self.cone_coeffs = tuple(
            ((sin[r] - sin[r - 1]) / s1, (cos[r - 1] - cos[r]) / s1)
            for r in range(1, k + 1)
        )
        # Gauge as a linear functional of z itself (coefficients composed
        # with psi_inv), one row per cone; used on integration hot paths.
        (i11, i12), (i21, i22) = self.psi_inv
        self._rows = tuple(
            (a * i11 + b * i21, a * i12 + b * i22) for a, b in self.cone_coeffs
        )
        self._psi_inv_np = np.array(self.psi_inv)
        self._cone_a_np = np.array([a for a, _ in self.cone_coeffs])
        self._cone_b_np = np.array([b for _, b in self.cone_coeffs])

    def __repr__(self) -> str:
        return f"PolygonalNorm(k={self.k}, psi={self.psi})"

    # -- scalar evaluation ------------------------------------------------

    def cone_index(self, z) -> int:
        """Index r in {1,...,k} of the cone containing psi^{-1}(z), z != 0."""
        zx, zy = (z.x, z.y) if isinstance(z, Point2) else (z[0], z[1])
        (i11, i12), (i21, i22) = self.psi_inv
        wx = i11 * zx + i12 * zy
        wy = i21 * zx + i22 * zy
        if wx == 0.0 and wy == 0.0:
            raise Undefined("cone index of the origin is undefined")
        ang = math.atan2(wy, wx)
        if ang <= 0.0:
            ang += TWO_PI
        rho = math.ceil(ang / self.theta1)
        return min(max(rho, 1), self.k)

    def gauge(self, z) -> float:
        """Value of the gauge at z; zero exactly at the origin."""
        zx, zy = (z.x, z.y) if isinstance(z, Point2) else (z[0], z[1])
        (i11, i12), (i21, i22) = self.psi_inv
        wx = i11 * zx + i12 * zy
        wy = i21 * zx + i22 * zy
        if wx == 0.0 and wy == 0.0:
            return 0.0
        ang = math.atan2(wy, wx)
        if ang <= 0.0:
            ang += TWO_PI
        rho = min(max(math.ceil(ang / self.theta1), 1), self.k)
        a, b = self.cone_coeffs[rho - 1]
        return a * wx + b * wy

    def gauge_row(self, rho: int) -> tuple[float, float]:
        """Linear functional (gx, gy) with gauge(z) = gx*z.x + gy*z.y on cone rho."""
        return self._rows[rho - 1]

    # -- vectorized evaluation (oracle paths) ------------------------------

    def gauge_many(self, z: np.ndarray) -> np.ndarray:
        """Gauge of an (n, 2) array of vectors."""
        w = z @ self._psi_inv_np.T
        ang = np.arctan2(w[:, 1], w[:, 0])
        ang = np.where(ang <= 0.0, ang + TWO_PI, ang)
        rho = np.ceil(ang / self.theta1).astype(np.int64)
        np.clip(rho, 1, self.k, out=rho)
        return self._cone_a_np[rho - 1] * w[:, 0] + self._cone_b_np[rho - 1] * w[:, 1]


def make_polygonal_norm(k: int, psi=None) -> PolygonalNorm:
    """Construct the polygonal norm for an even k >= 4 and invertible psi."""
    if not isinstance(k, int) or k < 4 or k % 2 != 0:
        raise InvalidK(f"k must be an even integer >= 4, got {k!r}")
    if psi is None:
        psi_t = ((1.0, 0.0), (0.0, 1.0))
    else:
        rows = [[float(c) for c in row] for row in psi]
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise SingularTransform("psi must be a 2x2 matrix")
        psi_t = ((rows[0][0], rows[0][1]), (rows[1][0], rows[1][1]))
    return PolygonalNorm(k, psi_t)


def gauge(norm: PolygonalNorm, z) -> float:
    return norm.gauge(z)


def cone_index(norm: PolygonalNorm, z) -> int:
    return norm.cone_index(z)


def sandwich_factor(k: int) -> float:
    """Multiplicative gap 1/cos(pi/k)^2 between gauge CDTW and Euclidean CDTW."""
    c = math.cos(math.pi / k)
    return 1.0 / (c * c)


def choose_k_for_epsilon(eps: float) -> int:
    """Smallest-by-rule even k with sandwich factor at most 1 + eps.

    For eps >= 1 the square (k = 4) already achieves factor 2; otherwise
    k = 2*ceil(pi * eps^(-1/2)) suffices.
    """
    if not (isinstance(eps, (int, float)) and eps > 0):
        raise InvalidEpsilon(f"eps must be positive, got {eps!r}")
    if eps >= 1.0:
        return 4
    k = 2 * math.ceil(math.pi / math.sqrt(eps))
    while sandwich_factor(k) > 1.0 + eps:  # fp safety; the rule already suffices
        k += 2
    return k


@dataclass(frozen=True)
class ArcLenParam:
    """Constant-speed parametrization of a curve by arc length under a norm."""

    curve: Curve
    norm: PolygonalNorm
    prefix_lengths: tuple[float, ...]
    total: float

    def _locate(self, s: float) -> float:
        tol = EPS_GEOM * max(self.total, 1.0)
        if s < -tol or s > self.total + tol:
            raise OutOfDomain(f"s={s} outside [0, {self.total}]")
        return min(max(s, 0.0), self.total)

    def segment_of(self, s: float) -> int:
        """Index of the segment containing s (the later one at vertices)."""
        s = self._locate(s)
        i = bisect_right(self.prefix_lengths, s) - 1
        return min(max(i, 0), self.curve.n_segments - 1)

    def point_at(self, s: float) -> Point2:
        s = self._locate(s)
        i = self.segment_of(s)
        a, b = self.curve.segment(i)
        seg_len = self.prefix_lengths[i + 1] - self.prefix_lengths[i]
        frac = (s - self.prefix_lengths[i]) / seg_len
        return Point2(a.x + frac * (b.x - a.x), a.y + frac * (b.y - a.y))

    def points_at(self, s: np.ndarray) -> np.ndarray:
        """Vectorized point_at; returns an (n, 2) array."""
        pre = np.array(self.prefix_lengths)
        xs = np.array([v.x for v in self.curve.vertices])
        ys = np.array([v.y for v in self.curve.vertices])
        s = np.clip(s, 0.0, self.total)
        return np.column_stack((np.interp(s, pre, xs), np.interp(s, pre, ys)))

    def segment_direction(self, i: int) -> Point2:
        """Direction of segment i normalized to gauge 1."""
        a, b = self.curve.segment(i)
        d = b - a
        return d * (1.0 / self.norm.gauge(d))


def arc_len_param(curve: Curve, norm: PolygonalNorm) -> ArcLenParam:
    """Arc-length parametrization of a curve under the given norm."""
    prefix = [0.0]
    for a, b in zip(curve.vertices, curve.vertices[1:]):
        prefix.append(prefix[-1] + norm.gauge(b - a))
    return ArcLenParam(curve, norm, tuple(prefix), prefix[-1])
