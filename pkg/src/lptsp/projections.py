"""Lines in lp^n: metric projection, J-projection, and flat-set ordering.

The metric projection minimizes the convex map t -> |x - (a + t d)|_p.  Its
p-th power has a strictly increasing derivative in t, so the minimizer is
found by safeguarded bisection on the derivative inside a bracket that
provably contains it; projections are unique for 1 < p < inf.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lp_core import (
    LpSpace,
    LpVector,
    PointsLike,
    as_point_array,
    duality_map_array,
    lp_norm_array,
)

__all__ = [
    "FlatnessViolation",
    "Line",
    "OrderedFlatSet",
    "SeparationViolation",
    "chain_variation",
    "dist_to_line",
    "dist_to_segment",
    "j_perp",
    "j_projection",
    "line_params",
    "metric_projection",
    "order_flat_set",
    "segment_dists",
]

UNIT_TOL = 1e-12


class FlatnessViolation(ValueError):
    """A point sits farther from the reference line than flatness allows."""


class SeparationViolation(ValueError):
    """Two points of a supposedly separated set are too close."""


@dataclass(frozen=True)
class Line:
    """Affine line anchor + t * direction with |direction|_p = 1."""

    anchor: LpVector
    direction: LpVector

    def __post_init__(self) -> None:
        if self.anchor.space != self.direction.space:
            raise ValueError("anchor and direction live in different spaces")
        n = self.direction.norm()
        if abs(n - 1.0) > UNIT_TOL:
            raise ValueError(f"direction must be lp-unit (|d| = {n})")

    @property
    def space(self) -> LpSpace:
        return self.anchor.space

    @classmethod
    def through(cls, a: LpVector, b: LpVector) -> "Line":
        d = b - a
        n = d.norm()
        if n == 0.0:
            raise ValueError("coincident points do not define a line")
        return cls(a, LpVector(d.coords / n, a.space))

    def point_at(self, t: float) -> LpVector:
        return LpVector(self.anchor.coords + t * self.direction.coords, self.space)


def line_params(
    P: np.ndarray,
    anchor: np.ndarray,
    direction: np.ndarray,
    p: float,
    iters: int = 58,
) -> tuple[np.ndarray, np.ndarray]:
    """Minimizing parameters and distances to a line for a batch of points.

    Returns (t_star, dist) arrays of shape (n,).  For p != 2 the derivative
    of sum |r_i - t d_i|^p is strictly increasing, so bisection inside the
    certified bracket |t - t_l2| <= 2 |r - t_l2 d|_p converges to the unique
    minimizer; any t evaluated along the way gives an upper bound for dist.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    r = P - anchor[None, :]
    dd = float(np.dot(direction, direction))
    t2 = r @ direction / dd
    if p == 2.0:
        res = r - t2[:, None] * direction[None, :]
        return t2, np.sqrt(np.sum(res * res, axis=1))
    dnorm = float(lp_norm_array(direction, p))
    g2 = lp_norm_array(r - t2[:, None] * direction[None, :], p, axis=1)
    R = 2.0 * g2 / dnorm + 1e-300
    lo = t2 - R
    hi = t2 + R

    def dphi(t: np.ndarray) -> np.ndarray:
        u = r - t[:, None] * direction[None, :]
        return -np.sum(np.sign(u) * np.abs(u) ** (p - 1.0) * direction[None, :], axis=1)

    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        neg = dphi(mid) < 0.0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    t = 0.5 * (lo + hi)
    dist = lp_norm_array(r - t[:, None] * direction[None, :], p, axis=1)
    # the l2 foot is itself a valid candidate; keep whichever is smaller
    better = g2 < dist
    t = np.where(better, t2, t)
    dist = np.minimum(dist, g2)
    return t, dist


def dist_to_line(x: LpVector, L: Line) -> tuple[float, float]:
    """(distance, t_star) of a point to a line; distance <= |x - anchor|."""
    if x.space != L.space:
        raise ValueError("point and line in different spaces")
    t, d = line_params(x.coords[None, :], L.anchor.coords, L.direction.coords, L.space.p)
    return float(d[0]), float(t[0])


def metric_projection(x: LpVector, L: Line) -> LpVector:
    """Nearest point of L (unique for 1 < p < inf)."""
    _, t = dist_to_line(x, L)
    return L.point_at(t)


def j_projection(x: LpVector, L: Line) -> LpVector:
    """Affine J-projection anchor + <J(d), x - anchor> d.

    Fixes L pointwise, is 1-Lipschitz onto L, and its complement part is at
    most twice the metric distance.  Independent of the anchor chosen on L.
    """
    if x.space != L.space:
        raise ValueError("point and line in different spaces")
    jd = duality_map_array(L.direction.coords, L.space.p)
    t = float(np.dot(jd, x.coords - L.anchor.coords))
    return L.point_at(t)


def j_perp(x: LpVector, L: Line) -> LpVector:
    """Complement part x - j_projection(x, L); pairs to zero with J(d)."""
    return x - j_projection(x, L)


def segment_dists(P: np.ndarray, a: np.ndarray, b: np.ndarray, p: float) -> np.ndarray:
    """Distances from points to the segment [a, b] (parameter clamped)."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    v = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    vn = float(lp_norm_array(v, p))
    if vn == 0.0:
        return lp_norm_array(P - a[None, :], p, axis=1)
    t, _ = line_params(P, a, v, p)
    t = np.clip(t, 0.0, 1.0)
    return lp_norm_array(P - a[None, :] - t[:, None] * v[None, :], p, axis=1)


def dist_to_segment(x: LpVector, a: LpVector, b: LpVector) -> float:
    return float(segment_dists(x.coords[None, :], a.coords, b.coords, x.space.p)[0])


@dataclass
class OrderedFlatSet:
    """A delta-separated set within alpha*delta of a line, linearly ordered."""

    points: list[LpVector]
    line: Line
    order: list[int]
    alpha: float
    delta: float
    params: np.ndarray  # metric-projection parameter per point, in input order


def order_flat_set(
    V: PointsLike,
    L: Line,
    delta: float,
    alpha: float,
) -> OrderedFlatSet:
    """Order a flat separated set along L by metric-projection parameter.

    Refuses when alpha >= 1/6 (the order is only canonical below that), and
    cross-checks the J-projection order when alpha < 1/8.
    """
    P, space = as_point_array(V)
    if space != L.space:
        raise ValueError("points and line in different spaces")
    if alpha >= 1.0 / 6.0:
        raise FlatnessViolation(f"alpha = {alpha} >= 1/6; ordering not well-defined")
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    n = P.shape[0]
    if n >= 2:
        D = lp_norm_array(P[:, None, :] - P[None, :, :], space.p, axis=2)
        np.fill_diagonal(D, np.inf)
        dmin = float(D.min())
        if dmin < delta * (1.0 - 1e-12):
            i, j = np.unravel_index(int(D.argmin()), D.shape)
            raise SeparationViolation(
                f"points {i} and {j} at distance {dmin} < delta = {delta}"
            )
    t, dist = line_params(P, L.anchor.coords, L.direction.coords, space.p)
    worst = float(dist.max()) if n else 0.0
    if worst > alpha * delta * (1.0 + 1e-9):
        k = int(dist.argmax())
        raise FlatnessViolation(
            f"point {k} at distance {worst} > alpha*delta = {alpha * delta}"
        )
    order = list(np.argsort(t, kind="stable"))
    if alpha < 1.0 / 8.0 and n >= 2:
        jd = duality_map_array(L.direction.coords, space.p)
        tj = (P - L.anchor.coords[None, :]) @ jd
        jorder = list(np.argsort(tj, kind="stable"))
        if jorder != order and jorder != order[::-1]:
            raise AssertionError(
                "metric and J-projection orders disagree on a flat set with alpha < 1/8"
            )
    vectors = [LpVector(row, space) for row in P]
    return OrderedFlatSet(vectors, L, order, alpha, delta, t)


def chain_variation(ordered: OrderedFlatSet, s: float = 1.0) -> float:
    """Sum of |v_{i+1} - v_i|^s along the order."""
    if s < 1.0:
        raise ValueError("s must be >= 1")
    P = np.stack([v.coords for v in ordered.points])
    p = ordered.line.space.p
    idx = ordered.order
    if len(idx) < 2:
        return 0.0
    gaps = lp_norm_array(P[idx][1:] - P[idx][:-1], p, axis=1)
    return float(np.sum(gaps ** s))
