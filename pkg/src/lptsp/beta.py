"""Jones beta numbers for finite point sets via min-max line fitting.

beta(E, Q) = inf over lines of sup over E in Q of dist(x, L) / diam Q, with
diam Q = 2 * radius.  The optimizer certifies an upper bound (any candidate
line gives one); a lower bound comes from a Lipschitz grid argument in the
plane and from triple-excess sampling in higher dimensions, and the spread
is reported as ``certified_gap``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .lp_core import (
    LpSpace,
    LpVector,
    PointsLike,
    as_point_array,
    conjugate_exponent,
    lp_norm_array,
)
from .projections import Line, line_params

__all__ = ["Ball", "BetaResult", "LineFit", "beta", "beta_bilip_check", "fit_line_min_sup", "sup_dist_to_line"]


@dataclass(frozen=True)
class Ball:
    """Closed ball; radius > 0."""

    center: LpVector
    radius: float

    def __post_init__(self) -> None:
        if not (self.radius > 0.0) or not math.isfinite(self.radius):
            raise ValueError(f"radius must be positive and finite, got {self.radius}")

    @property
    def space(self) -> LpSpace:
        return self.center.space

    @property
    def diam(self) -> float:
        return 2.0 * self.radius

    def dilate(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)

    def select(self, points: np.ndarray) -> np.ndarray:
        """Indices of points inside the closed ball."""
        d = lp_norm_array(points - self.center.coords[None, :], self.space.p, axis=1)
        return np.flatnonzero(d <= self.radius)


@dataclass
class BetaResult:
    value: float
    witness_line: Line
    method: str
    certified_gap: float
    sup_dist: float
    n_points: int


@dataclass
class LineFit:
    """Best-found line for a point cloud: sup distance, witness, lower bound."""

    sup_dist: float
    line: Line
    method: str
    lower_bound: float


def sup_dist_to_line(P: np.ndarray, line: Line, iters: int = 58) -> float:
    if P.shape[0] == 0:
        return 0.0
    _, d = line_params(P, line.anchor.coords, line.direction.coords, line.space.p, iters=iters)
    return float(d.max())


def _make_line(anchor: np.ndarray, direction: np.ndarray, space: LpSpace) -> Line:
    n = float(lp_norm_array(direction, space.p))
    return Line(LpVector(anchor, space), LpVector(direction / n, space))


def _fit_2d(P: np.ndarray, space: LpSpace, n_grid: int = 720) -> LineFit:
    """Planar fit: every line is a hyperplane {<u, z> = c}, and for a fixed
    Euclidean-unit normal u the optimal offset is the midrange of <u, x_i>,
    giving sup dist = halfwidth / |u|_{p'}.  Golden refinement around the
    best grid angles; the grid also yields a certified lower bound through a
    Lipschitz constant of the objective in the angle.
    """
    p = space.p
    q = conjugate_exponent(p)
    c0 = P.mean(axis=0)
    X = P - c0

    def halfwidth_over_dual(theta: np.ndarray) -> np.ndarray:
        u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        f = X @ u.T if u.ndim == 2 else X @ u
        w = f.max(axis=0) - f.min(axis=0)
        return 0.5 * w / lp_norm_array(u, q, axis=-1)

    thetas = np.linspace(0.0, np.pi, n_grid, endpoint=False)
    vals = halfwidth_over_dual(thetas)
    order = np.argsort(vals)
    best_val, best_theta = math.inf, 0.0
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    h = math.pi / n_grid
    for k in order[:3]:
        lo, hi = thetas[k] - h, thetas[k] + h
        c = hi - gr * (hi - lo)
        d = lo + gr * (hi - lo)
        fc = float(halfwidth_over_dual(np.asarray([c]))[0])
        fd = float(halfwidth_over_dual(np.asarray([d]))[0])
        for _ in range(48):
            if fc < fd:
                hi, d, fd = d, c, fc
                c = hi - gr * (hi - lo)
                fc = float(halfwidth_over_dual(np.asarray([c]))[0])
            else:
                lo, c, fc = c, d, fd
                d = lo + gr * (hi - lo)
                fd = float(halfwidth_over_dual(np.asarray([d]))[0])
        th, v = (c, fc) if fc < fd else (d, fd)
        if v < best_val:
            best_val, best_theta = v, th
    # witness line for the best angle
    u = np.array([math.cos(best_theta), math.sin(best_theta)])
    f = X @ u
    c_mid = 0.5 * (f.max() + f.min())
    anchor = c0 + c_mid * u
    direction = np.array([-u[1], u[0]])
    # Lipschitz lower bound over the angle grid
    R2 = float(np.sqrt((X * X).sum(axis=1)).max())
    m_dual = min(1.0, 2.0 ** (1.0 / q - 0.5))
    c_dual = max(1.0, 2.0 ** (1.0 / q - 0.5))
    lip = R2 / m_dual + R2 * c_dual / (m_dual * m_dual)
    lower = max(0.0, float(vals.min()) - lip * (h / 2.0))
    return LineFit(best_val, _make_line(anchor, direction, space), "grid2d+golden", min(lower, best_val))


def _triple_excess_lower(P: np.ndarray, p: float, seed: int) -> float:
    """Certified lower bound for min-max line distance from triangle excess.

    For any line, ordering a triple by its projections shows the middle
    point's chain excess is at most 6 times the max distance to the line;
    minimizing over the three middle choices removes the order dependence.
    """
    n = P.shape[0]
    if n < 3:
        return 0.0
    if n <= 24:
        triples = np.array(list(itertools.combinations(range(n), 3)))
    else:
        rng = np.random.default_rng(seed)
        triples = rng.integers(0, n, size=(600, 3))
        triples = triples[(triples[:, 0] != triples[:, 1]) & (triples[:, 1] != triples[:, 2]) & (triples[:, 0] != triples[:, 2])]
        if triples.size == 0:
            return 0.0
    A, B, C = P[triples[:, 0]], P[triples[:, 1]], P[triples[:, 2]]
    ab = lp_norm_array(A - B, p, axis=1)
    bc = lp_norm_array(B - C, p, axis=1)
    ac = lp_norm_array(A - C, p, axis=1)
    exc = np.stack([ab + bc - ac, ab + ac - bc, bc + ac - ab])
    return float(np.maximum(exc.min(axis=0), 0.0).max() / 6.0)


def _candidate_lines(P: np.ndarray, space: LpSpace, seed: int, max_pairs: int = 12) -> list[Line]:
    n = P.shape[0]
    cands: list[Line] = []
    c0 = P.mean(axis=0)
    if n <= 13:
        pairs = list(itertools.combinations(range(n), 2))
    else:
        rng = np.random.default_rng(seed)
        pairs = set()
        # diameter-realizing pair among a capped subsample
        sub = rng.permutation(n)[: min(n, 96)]
        D = lp_norm_array(P[sub][:, None, :] - P[sub][None, :, :], space.p, axis=2)
        i, j = np.unravel_index(int(D.argmax()), D.shape)
        pairs.add((int(sub[i]), int(sub[j])))
        while len(pairs) < max_pairs:
            a, b = rng.integers(0, n, size=2)
            if a != b:
                pairs.add((int(min(a, b)), int(max(a, b))))
        pairs = sorted(pairs)
    for i, j in pairs:
        d = P[j] - P[i]
        nrm = float(lp_norm_array(d, space.p))
        if nrm > 0.0:
            cands.append(_make_line(P[i], d, space))
    X = P - c0
    if n >= 2:
        _, _, vt = np.linalg.svd(X, full_matrices=False)
        if float(lp_norm_array(vt[0], space.p)) > 0.0:
            cands.append(_make_line(c0, vt[0], space))
    return cands


def _fit_nd(P: np.ndarray, space: LpSpace, effort: str, seed: int) -> LineFit:
    p = space.p
    cands = _candidate_lines(P, space, seed)
    iters_eval = 50 if effort == "high" else 20
    scored = sorted(
        (sup_dist_to_line(P, L, iters=iters_eval), k) for k, L in enumerate(cands)
    )
    best_sup, best_k = scored[0]
    best_line = cands[best_k]
    method = "candidates"
    if effort == "high":
        c0 = P.mean(axis=0)
        scale = max(float(lp_norm_array(P - c0[None, :], p, axis=1).max()), 1e-12)

        def objective(z: np.ndarray) -> float:
            a = c0 + z[: space.dim] * scale
            d = z[space.dim:]
            nd = float(lp_norm_array(d, p))
            if nd < 1e-9:
                return 1e9
            _, dist = line_params(P, a, d / nd, p, iters=44)
            return float(dist.max())

        refined = []
        for sup0, k in scored[:3]:
            L = cands[k]
            z0 = np.concatenate([(L.anchor.coords - c0) / scale, L.direction.coords])
            res = minimize(
                objective,
                z0,
                method="Nelder-Mead",
                options={"maxfev": 260 * space.dim, "xatol": 1e-10, "fatol": 1e-12},
            )
            refined.append((float(res.fun), res.x))
        refined.sort(key=lambda t: t[0])
        if refined[0][0] < best_sup:
            best_sup = refined[0][0]
            z = refined[0][1]
            d = z[space.dim:]
            best_line = _make_line(c0 + z[: space.dim] * scale, d, space)
            method = "candidates+nelder-mead"
    best_sup = sup_dist_to_line(P, best_line)
    lower = min(_triple_excess_lower(P, p, seed), best_sup)
    return LineFit(best_sup, best_line, method, lower)


def fit_line_min_sup(E: PointsLike, space: LpSpace | None = None, effort: str = "high", seed: int = 0) -> LineFit:
    """Minimize the sup distance of a point cloud to a line.

    effort "high" refines candidates (near-global in small instances); "fast"
    evaluates candidate lines only.  Both return certified upper bounds.
    """
    P, space = as_point_array(E, space)
    n = P.shape[0]
    if n == 0:
        raise ValueError("empty point set")
    if n == 1:
        e0 = np.zeros(space.dim)
        e0[0] = 1.0
        return LineFit(0.0, _make_line(P[0], e0, space), "degenerate", 0.0)
    if n == 2:
        d = P[1] - P[0]
        if float(lp_norm_array(d, space.p)) == 0.0:
            e0 = np.zeros(space.dim)
            e0[0] = 1.0
            return LineFit(0.0, _make_line(P[0], e0, space), "degenerate", 0.0)
        return LineFit(0.0, _make_line(P[0], d, space), "exact2", 0.0)
    if _exactly_collinear(P):
        k = int(lp_norm_array(P - P[0], space.p, axis=1).argmax())
        return LineFit(0.0, _make_line(P[0], P[k] - P[0], space), "collinear", 0.0)
    if space.dim == 2:
        return _fit_2d(P, space)
    return _fit_nd(P, space, effort, seed)


def _exactly_collinear(P: np.ndarray) -> bool:
    v = P - P[0]
    r = np.abs(v).sum(axis=1)
    k = int(r.argmax())
    if r[k] == 0.0:
        return True
    d = v[k]
    cross = v * 0.0
    # rank-1 test: v_i parallel to d for all i (exact arithmetic on floats)
    cross = v[:, :, None] * d[None, None, :] - d[None, :, None] * v[:, None, :]
    return bool(np.all(cross == 0.0))


def beta(
    E: PointsLike,
    Q: Ball,
    space: LpSpace | None = None,
    effort: str = "high",
    seed: int = 0,
    members: np.ndarray | None = None,
) -> BetaResult:
    """Jones beta number of E in the window Q (diam Q = 2 * radius).

    Empty or singleton intersections give 0 by convention.  ``members`` may
    carry precomputed indices of E in Q (e.g. from a KD-tree).
    """
    P, space = as_point_array(E, space)
    if space != Q.space:
        raise ValueError("points and ball in different spaces")
    idx = Q.select(P) if members is None else np.asarray(members, dtype=int)
    sub = P[idx]
    if sub.shape[0] <= 1:
        e0 = np.zeros(space.dim)
        e0[0] = 1.0
        anchor = sub[0] if sub.shape[0] == 1 else Q.center.coords
        line = _make_line(anchor, e0, space)
        return BetaResult(0.0, line, "empty" if sub.shape[0] == 0 else "singleton", 0.0, 0.0, sub.shape[0])
    fit = fit_line_min_sup(PointSetView(sub, space), effort=effort, seed=seed)
    value = min(fit.sup_dist / Q.diam, 1.0)
    gap = max(0.0, (fit.sup_dist - fit.lower_bound) / Q.diam)
    return BetaResult(value, fit.line, fit.method, gap, fit.sup_dist, sub.shape[0])


class PointSetView:
    """Minimal PointsLike view over an existing array (no copy)."""

    def __init__(self, points: np.ndarray, space: LpSpace):
        self.points = points
        self.space = space


def beta_bilip_check(
    E: PointsLike,
    Q: Ball,
    p1: float,
    p2: float,
    effort: str = "high",
    seed: int = 0,
) -> dict:
    """Compare beta numbers of the same window under two lp norms.

    Window membership is decided by the p1 ball; the p2 window diameter of a
    p1-ball has the closed form 2 r max(1, n^(1/p2 - 1/p1)).  The equivalence
    constant is C = n^|1/p1 - 1/p2| and the sandwich
    C^-2 beta_p1 <= beta_p2 <= C^2 beta_p1 is verified with optimizer slack.
    """
    P, space = as_point_array(E)
    n = space.dim
    if abs(space.p - p1) > 1e-12:
        raise ValueError("E must be given in the p1 space")
    C = n ** abs(1.0 / p1 - 1.0 / p2)
    res1 = beta(PointSetView(P, space), Q, effort=effort, seed=seed)
    idx = Q.select(P)
    space2 = LpSpace(p2, n)
    diam2 = Q.diam * max(1.0, n ** (1.0 / p2 - 1.0 / p1))
    if len(idx) <= 1:
        b2 = 0.0
    else:
        fit2 = fit_line_min_sup(PointSetView(P[idx], space2), effort=effort, seed=seed)
        b2 = min(fit2.sup_dist / diam2, 1.0)
    slack = 1e-6
    ok = (C ** -2) * res1.value - slack <= b2 <= (C ** 2) * res1.value + slack
    return {
        "C": C,
        "beta_p1": res1.value,
        "beta_p2": b2,
        "sandwich_holds": bool(ok),
    }
