"""Stochastic scene sampling and exact line-of-sight queries.

The scene model is 2D: a base station at the origin, users and reflecting
surfaces scattered as Poisson point processes on the cell disc, and
blockages as a line Boolean process (PPP centers, uniform random length and
orientation).  Blockage centers are sampled on an enlarged disc so segments
centered outside the cell can still obstruct links inside it.

Object-level APIs (Point2D / Segment2D / Scene) define the contracts; the
array-level helpers (``sample_disc_points``, ``sample_blockage_arrays``,
``los_mask``) are the same math vectorized for the Monte Carlo engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Point2D",
    "Segment2D",
    "Scene",
    "sample_poisson_count",
    "sample_ppp_disc",
    "sample_blockages",
    "segments_intersect",
    "is_los",
    "sample_disc_points",
    "sample_blockage_arrays",
    "los_mask",
    "segment_hit_mask",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("coordinates must be finite")

    def dist_to(self, other: "Point2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Segment2D:
    """A blockage: center point, length, orientation angle in [0, 2pi)."""

    center: Point2D
    length: float
    orientation: float

    def __post_init__(self) -> None:
        if self.length <= 0:
            raise ValueError("length must be positive")
        object.__setattr__(self, "orientation", self.orientation % _TWO_PI)

    @property
    def endpoints(self) -> tuple[Point2D, Point2D]:
        dx = 0.5 * self.length * math.cos(self.orientation)
        dy = 0.5 * self.length * math.sin(self.orientation)
        return (Point2D(self.center.x - dx, self.center.y - dy),
                Point2D(self.center.x + dx, self.center.y + dy))


@dataclass(frozen=True)
class Scene:
    """One realization of the cell: immutable, safe to share across workers.

    Users and reflectors must lie inside the cell disc; each blockage center
    may exceed the cell radius by at most half its own length (the sampling
    margin that removes edge bias in LoS statistics near the boundary).
    """

    cell_radius: float
    blockages: tuple[Segment2D, ...]
    ris_points: tuple[Point2D, ...]
    user_points: tuple[Point2D, ...]
    bs: Point2D = field(default_factory=lambda: Point2D(0.0, 0.0))

    def __post_init__(self) -> None:
        if self.cell_radius <= 0:
            raise ValueError("cell_radius must be positive")
        tol = 1e-9 * self.cell_radius
        origin = Point2D(0.0, 0.0)
        for p in (*self.ris_points, *self.user_points):
            if p.dist_to(origin) > self.cell_radius + tol:
                raise ValueError("point outside the cell disc")
        for seg in self.blockages:
            if seg.center.dist_to(origin) > self.cell_radius + 0.5 * seg.length + tol:
                raise ValueError("blockage center violates the sampling margin")


def sample_poisson_count(density: float, area: float, rng: np.random.Generator) -> int:
    """Number of points of a PPP with the given density in the given area."""
    if density < 0 or area < 0:
        raise ValueError("density and area must be nonnegative")
    return int(rng.poisson(density * area))


def sample_disc_points(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """(n, 2) i.i.d. uniform points on a disc centered at the origin."""
    r = radius * np.sqrt(rng.random(n))
    a = rng.random(n) * _TWO_PI
    return np.column_stack([r * np.cos(a), r * np.sin(a)])


def sample_ppp_disc(density: float, radius: float,
                    rng: np.random.Generator) -> list[Point2D]:
    """PPP realization on a disc: Poisson count, then uniform positions."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    n = sample_poisson_count(density, math.pi * radius * radius, rng)
    pts = sample_disc_points(n, radius, rng)
    return [Point2D(float(x), float(y)) for x, y in pts]


def sample_blockage_arrays(density: float, region_radius: float, l_min: float,
                           l_max: float, rng: np.random.Generator):
    """Array form of the blockage process.

    Returns (centers[n,2], lengths[n], angles[n]).  Draw order is fixed:
    count, centers, lengths, angles; callers relying on common random
    numbers depend on it.
    """
    if not (0 < l_min <= l_max):
        raise ValueError("require 0 < l_min <= l_max")
    n = sample_poisson_count(density, math.pi * region_radius ** 2, rng)
    centers = sample_disc_points(n, region_radius, rng)
    lengths = rng.uniform(l_min, l_max, n)
    angles = rng.random(n) * _TWO_PI
    return centers, lengths, angles


def sample_blockages(density: float, region_radius: float, l_min: float,
                     l_max: float, rng: np.random.Generator) -> list[Segment2D]:
    centers, lengths, angles = sample_blockage_arrays(
        density, region_radius, l_min, l_max, rng)
    return [Segment2D(Point2D(float(c[0]), float(c[1])), float(ln), float(an))
            for c, ln, an in zip(centers, lengths, angles)]


def _cross(ox, oy, ax, ay, bx, by) -> float:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _on_segment(px, py, qx, qy, rx, ry) -> bool:
    # r known collinear with p-q: is it within the bounding box?
    return (min(px, qx) <= rx <= max(px, qx)
            and min(py, qy) <= ry <= max(py, qy))


def segments_intersect(a1, a2, b1, b2) -> bool:
    """True iff the closed segments a1-a2 and b1-b2 share at least one point.

    Endpoints count: a touch is an intersection.  Arguments are Point2D or
    any (x, y) pair.
    """
    ax1, ay1 = (a1.x, a1.y) if isinstance(a1, Point2D) else (a1[0], a1[1])
    ax2, ay2 = (a2.x, a2.y) if isinstance(a2, Point2D) else (a2[0], a2[1])
    bx1, by1 = (b1.x, b1.y) if isinstance(b1, Point2D) else (b1[0], b1[1])
    bx2, by2 = (b2.x, b2.y) if isinstance(b2, Point2D) else (b2[0], b2[1])

    d1 = _cross(bx1, by1, bx2, by2, ax1, ay1)
    d2 = _cross(bx1, by1, bx2, by2, ax2, ay2)
    d3 = _cross(ax1, ay1, ax2, ay2, bx1, by1)
    d4 = _cross(ax1, ay1, ax2, ay2, bx2, by2)

    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) \
            and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0:
        return True
    if d1 == 0 and _on_segment(bx1, by1, bx2, by2, ax1, ay1):
        return True
    if d2 == 0 and _on_segment(bx1, by1, bx2, by2, ax2, ay2):
        return True
    if d3 == 0 and _on_segment(ax1, ay1, ax2, ay2, bx1, by1):
        return True
    if d4 == 0 and _on_segment(ax1, ay1, ax2, ay2, bx2, by2):
        return True
    return False


def is_los(p, q, blockages) -> bool:
    """True iff the link p-q crosses no blockage segment."""
    for seg in blockages:
        e1, e2 = seg.endpoints
        if segments_intersect(p, q, e1, e2):
            return False
    return True


def los_mask(link_a: np.ndarray, link_b: np.ndarray,
             seg_a: np.ndarray, seg_b: np.ndarray) -> np.ndarray:
    """Vectorized LoS test: links (n,2)-(n,2) vs blockages (m,2)-(m,2).

    Returns a boolean (n,) mask, True where the link meets no blockage.
    Closed-segment semantics match ``segments_intersect``.
    """
    n = link_a.shape[0]
    m = seg_a.shape[0]
    if n == 0 or m == 0:
        return np.ones(n, dtype=bool)
    pa = link_a[:, None, :]
    pb = link_b[:, None, :]
    qa = seg_a[None, :, :]
    qb = seg_b[None, :, :]

    def cross(o, a, b):
        return ((a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1])
                - (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0]))

    d1 = cross(qa, qb, pa)
    d2 = cross(qa, qb, pb)
    d3 = cross(pa, pb, qa)
    d4 = cross(pa, pb, qb)
    proper = (((d1 > 0) != (d2 > 0)) & ((d3 > 0) != (d4 > 0))
              & (d1 != 0) & (d2 != 0) & (d3 != 0) & (d4 != 0))

    def within(p, q, r):
        return ((np.minimum(p[..., 0], q[..., 0]) <= r[..., 0])
                & (r[..., 0] <= np.maximum(p[..., 0], q[..., 0]))
                & (np.minimum(p[..., 1], q[..., 1]) <= r[..., 1])
                & (r[..., 1] <= np.maximum(p[..., 1], q[..., 1])))

    touch = (((d1 == 0) & within(qa, qb, pa)) | ((d2 == 0) & within(qa, qb, pb))
             | ((d3 == 0) & within(pa, pb, qa)) | ((d4 == 0) & within(pa, pb, qb)))
    return ~(proper | touch).any(axis=1)


def segment_hit_mask(p, q, seg_a: np.ndarray, seg_b: np.ndarray) -> np.ndarray:
    """Which of m segments intersect the single link p-q: boolean (m,).

    Same closed-segment semantics as ``los_mask``; useful when hits must be
    attributed to individual segments (e.g. grouping by scene).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    m = seg_a.shape[0]
    if m == 0:
        return np.zeros(0, dtype=bool)
    pa = np.broadcast_to(p, (m, 2))
    pb = np.broadcast_to(q, (m, 2))

    def cross(o, a, b):
        return ((a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1])
                - (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0]))

    d1 = cross(seg_a, seg_b, pa)
    d2 = cross(seg_a, seg_b, pb)
    d3 = cross(pa, pb, seg_a)
    d4 = cross(pa, pb, seg_b)
    proper = (((d1 > 0) != (d2 > 0)) & ((d3 > 0) != (d4 > 0))
              & (d1 != 0) & (d2 != 0) & (d3 != 0) & (d4 != 0))

    def within(a, b, r):
        return ((np.minimum(a[..., 0], b[..., 0]) <= r[..., 0])
                & (r[..., 0] <= np.maximum(a[..., 0], b[..., 0]))
                & (np.minimum(a[..., 1], b[..., 1]) <= r[..., 1])
                & (r[..., 1] <= np.maximum(a[..., 1], b[..., 1])))

    touch = (((d1 == 0) & within(seg_a, seg_b, pa))
             | ((d2 == 0) & within(seg_a, seg_b, pb))
             | ((d3 == 0) & within(pa, pb, seg_a))
             | ((d4 == 0) & within(pa, pb, seg_b)))
    return proper | touch
