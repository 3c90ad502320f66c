"""Snowflake-like curve generators.

Two modes, both replacing every segment by four equal-length segments with a
bump of relative height eta:

* planar  -- bump along the left Euclidean normal in R^2, s = 1/4 + eta^2;
* lp      -- bump along a fresh coordinate e_{k+1} in lp, with s in
             [1/4, 1/2) solving s^p = (1/2 - s)^p + eta^p.

The vertex cloud at generation n (4^n + 1 points, equal segment length
r_n = s_1 ... s_n) is the object every downstream module consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .beta import Ball, beta
from .lp_core import LpSpace, LpVector, lp_norm_array

__all__ = [
    "HeightSchedule",
    "SnowflakeCurve",
    "curve_points_on_grid",
    "generate",
    "length_pnorm",
    "length_product",
    "length_qnorm",
    "lq_growth_bound",
    "refine",
    "schedule_constant",
    "schedule_prop1",
    "schedule_prop2",
    "schedule_prop3",
    "schedule_prop4",
    "schedule_tpq",
    "solve_s",
    "triangle_excess_exponents",
    "vertex_beta_bounds_check",
]

PLANAR_ETA_CAP = 1.0 / math.sqrt(12.0)
LP_QUANT_ETA_CAP = 1.0 / 16.0
MAX_GENERATION = {"planar": 12, "lp": 10}


@dataclass(frozen=True)
class HeightSchedule:
    """Relative bump heights eta_i, i >= 1.

    kind "constant": eta_i = eta_bar.
    kind "log_type": eta_i^p_sched = delta / (F(i) * log(i + i0)^a) where
    F(i) = i + i0 when shift_first_factor else i.
    """

    kind: Literal["constant", "log_type"]
    eta_bar: float = 0.0
    a: int = 1
    delta: float = 1.0
    i0: float = 0.0
    p_sched: float = 2.0
    shift_first_factor: bool = True
    label: str = "custom"

    def eta(self, i: int) -> float:
        if i < 1:
            raise ValueError("generation index starts at 1")
        if self.kind == "constant":
            return self.eta_bar
        first = (i + self.i0) if self.shift_first_factor else float(i)
        val = self.delta / (first * math.log(i + self.i0) ** self.a)
        return val ** (1.0 / self.p_sched)

    def etas(self, n: int) -> np.ndarray:
        return np.array([self.eta(i) for i in range(1, n + 1)])


def schedule_constant(eta_bar: float) -> HeightSchedule:
    return HeightSchedule("constant", eta_bar=eta_bar, label=f"const({eta_bar:g})")


def schedule_prop2() -> HeightSchedule:
    """4 eta_i^2 = 1/((i+15) log(i+15))."""
    return HeightSchedule("log_type", a=1, delta=0.25, i0=15.0, p_sched=2.0, label="prop2")


def schedule_prop4() -> HeightSchedule:
    """4 eta_i^2 = 1/((i+2) log(i+2)^2)."""
    return HeightSchedule("log_type", a=2, delta=0.25, i0=2.0, p_sched=2.0, label="prop4")


def _min_i0(p: float, a: int, delta: float, shift: bool, cap: float = LP_QUANT_ETA_CAP) -> int:
    i0 = 1
    while True:
        first = (1 + i0) if shift else 1.0
        val = (delta / (first * math.log(1 + i0) ** a)) ** (1.0 / p)
        if val <= cap:
            return i0
        i0 = i0 * 2 if val > 2 * cap else i0 + 1


def schedule_prop3(p: float, delta: float = 1.0) -> HeightSchedule:
    """eta_i^p = delta/((i+i0) log(i+i0)), smallest i0 with eta_1 <= 1/16."""
    i0 = _refine_min_i0(p, 1, delta, True)
    return HeightSchedule("log_type", a=1, delta=delta, i0=float(i0), p_sched=p, label="prop3")


def schedule_prop1(p: float, delta: float = 1.0) -> HeightSchedule:
    """eta_i^p = delta/((i+i0) log(i+i0)^2), smallest i0 with eta_1 <= 1/16."""
    i0 = _refine_min_i0(p, 2, delta, True)
    return HeightSchedule("log_type", a=2, delta=delta, i0=float(i0), p_sched=p, label="prop1")


def schedule_tpq(p: float, delta: float = 1.0) -> HeightSchedule:
    """eta_i^p = delta/(i log(i+i0)), smallest i0 with eta_1 <= 1/16."""
    i0 = _refine_min_i0(p, 1, delta, False)
    return HeightSchedule(
        "log_type", a=1, delta=delta, i0=float(i0), p_sched=p, shift_first_factor=False, label="tpq"
    )


def _refine_min_i0(p: float, a: int, delta: float, shift: bool) -> int:
    """Smallest integer i0 >= 1 with eta_1 <= 1/16 (doubling then bisect)."""
    cap = LP_QUANT_ETA_CAP

    def eta1(i0: int) -> float:
        first = (1 + i0) if shift else 1.0
        return (delta / (first * math.log(1 + i0) ** a)) ** (1.0 / p)

    hi = 1
    while eta1(hi) > cap:
        hi *= 2
        if hi > 10 ** 30:
            # cap unreachable by integers in float range; solve in floats
            break
    if hi <= 10 ** 30:
        lo = max(1, hi // 2)
        while lo < hi:
            mid = (lo + hi) // 2
            if eta1(mid) <= cap:
                hi = mid
            else:
                lo = mid + 1
        return hi
    # continuous fallback (needed for small p where i0 ~ exp(16^p))
    target = delta / cap ** p
    x = target
    for _ in range(80):
        if shift:
            x = target / math.log(1 + x) ** a if a else target
        else:
            x = math.exp(target ** (1.0 / a)) if a == 1 else x
    return int(math.ceil(x))


@dataclass
class SnowflakeCurve:
    mode: Literal["planar", "lp"]
    p: float
    generation: int
    vertex_array: np.ndarray          # (4^n + 1, dim)
    vertex_birth: np.ndarray          # generation each vertex first appeared
    s_factors: list[float]
    r_n: float
    schedule: HeightSchedule
    space: LpSpace = field(init=False)

    def __post_init__(self) -> None:
        self.space = LpSpace(self.p if self.mode == "lp" else 2.0, self.vertex_array.shape[1])

    @property
    def n_vertices(self) -> int:
        return self.vertex_array.shape[0]

    @property
    def vertices(self) -> list[LpVector]:
        return [LpVector(row, self.space) for row in self.vertex_array]

    def edge_lengths(self) -> np.ndarray:
        return lp_norm_array(np.diff(self.vertex_array, axis=0), self.space.p, axis=1)

    def new_vertex_indices(self, i: int) -> np.ndarray:
        """Indices of vertices born exactly at generation i."""
        return np.flatnonzero(self.vertex_birth == i)


def solve_s(p: float, eta: float) -> float:
    """Unique s in [1/4, 1/2) with s^p = (1/2 - s)^p + eta^p.

    Bisection on the strictly increasing residual down to machine width,
    then a secant polish; |residual| < 1e-14 on return.
    """
    if not (1.0 < p < math.inf):
        raise ValueError("p must satisfy 1 < p < inf")
    if not (0.0 <= eta < 0.5):
        raise ValueError(f"eta must lie in [0, 1/2), got {eta}")
    if eta == 0.0:
        return 0.25

    def res(s: float) -> float:
        return s ** p - (0.5 - s) ** p - eta ** p

    lo, hi = 0.25, 0.5 - 1e-17
    if res(lo) > 0.0:
        return lo
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if res(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    r_lo, r_hi = res(lo), res(hi)
    if r_hi != r_lo:
        s_sec = lo - r_lo * (hi - lo) / (r_hi - r_lo)
        if lo <= s_sec <= hi and abs(res(s_sec)) <= abs(res(s)):
            s = s_sec
    if abs(res(s)) >= 1e-14:
        raise ArithmeticError(f"bisection failed to reach tolerance at p={p}, eta={eta}")
    return s


def refine(
    a_pt: np.ndarray,
    b_pt: np.ndarray,
    eta: float,
    mode: str,
    p: float,
    bump_axis: int | None = None,
) -> np.ndarray:
    """One segment -> five points; all four edges have length s|v|.

    planar: bump along the left Euclidean normal of the oriented segment.
    lp: bump along coordinate ``bump_axis`` (must be zero on both endpoints).
    """
    a_pt = np.asarray(a_pt, dtype=float)
    b_pt = np.asarray(b_pt, dtype=float)
    v = b_pt - a_pt
    if mode == "planar":
        ln = float(math.hypot(v[0], v[1]))
        if ln == 0.0:
            raise ValueError("zero-length segment")
        s = 0.25 + eta * eta
        normal = np.array([-v[1], v[0]]) / ln
        bump = eta * ln * normal
        p_eff = 2.0
    elif mode == "lp":
        ln = float(lp_norm_array(v, p))
        if ln == 0.0:
            raise ValueError("zero-length segment")
        s = solve_s(p, eta)
        if bump_axis is None:
            raise ValueError("lp mode needs a bump axis")
        bump = np.zeros_like(a_pt)
        bump[bump_axis] = eta * ln
        p_eff = p
    else:
        raise ValueError(f"unknown mode {mode!r}")
    pts = np.stack([
        a_pt,
        a_pt + s * v,
        a_pt + 0.5 * v + bump,
        a_pt + (1.0 - s) * v,
        b_pt,
    ])
    edges = lp_norm_array(np.diff(pts, axis=0), p_eff, axis=1)
    if not np.allclose(edges, s * ln, rtol=1e-9, atol=0.0):
        raise AssertionError("refined edges are not all of length s|v|")
    return pts


def generate(
    schedule: HeightSchedule,
    mode: Literal["planar", "lp"],
    p: float = 2.0,
    n: int = 0,
    max_generation: int | None = None,
) -> SnowflakeCurve:
    """Generation-n curve (4^n + 1 vertices, equal edges, birth tags)."""
    cap = max_generation if max_generation is not None else MAX_GENERATION[mode]
    if n > cap:
        raise ValueError(f"generation {n} exceeds configured cap {cap}")
    etas = schedule.etas(n)
    if mode == "planar":
        if np.any(etas > PLANAR_ETA_CAP + 1e-15):
            raise ValueError("planar mode needs eta_i <= 1/sqrt(12)")
        dim0 = 2
    else:
        if np.any(etas >= 0.5):
            raise ValueError("lp mode needs eta_i < 1/2")
        dim0 = max(2, n + 1)
    V = np.zeros((2, dim0))
    V[1, 0] = 1.0
    birth = np.zeros(2, dtype=int)
    s_factors: list[float] = []
    for i in range(1, n + 1):
        eta = float(etas[i - 1])
        if mode == "planar":
            s = 0.25 + eta * eta
            a = V[:-1]
            b = V[1:]
            v = b - a
            ln = np.sqrt((v * v).sum(axis=1))
            normal = np.stack([-v[:, 1], v[:, 0]], axis=1) / ln[:, None]
            bump = eta * ln[:, None] * normal
        else:
            s = solve_s(p, eta)
            a = V[:-1]
            b = V[1:]
            v = b - a
            ln = lp_norm_array(v, p, axis=1)
            bump = np.zeros_like(a)
            bump[:, i] = eta * ln
        m = a.shape[0]
        newV = np.empty((4 * m + 1, V.shape[1]))
        newV[0::4] = V
        newV[1::4] = a + s * v
        newV[2::4] = a + 0.5 * v + bump
        newV[3::4] = a + (1.0 - s) * v
        new_birth = np.empty(4 * m + 1, dtype=int)
        new_birth[0::4] = birth
        new_birth[1::4] = i
        new_birth[2::4] = i
        new_birth[3::4] = i
        V, birth = newV, new_birth
        s_factors.append(float(s))
    r_n = float(np.prod(s_factors)) if s_factors else 1.0
    curve = SnowflakeCurve(mode, p if mode == "lp" else 2.0, n, V, birth, s_factors, r_n, schedule)
    _check_generation(curve)
    return curve


def _check_generation(curve: SnowflakeCurve) -> None:
    edges = curve.edge_lengths()
    if curve.n_vertices > 1 and not np.allclose(edges, curve.r_n, rtol=1e-12, atol=1e-300):
        raise AssertionError("edge lengths drifted from r_n")
    # injectivity spot check: no two vertices coincide
    order = np.lexsort(curve.vertex_array.T)
    Vs = curve.vertex_array[order]
    if curve.n_vertices > 1 and bool(np.any(np.all(np.diff(Vs, axis=0) == 0.0, axis=1))):
        raise AssertionError("coincident vertices found")


def length_product(schedule: HeightSchedule, mode: str, p: float, n: int) -> list[float]:
    """Polygonal lp length of each generation 1..n: products of 4 s_i."""
    out = []
    L = 1.0
    for i in range(1, n + 1):
        eta = schedule.eta(i)
        s = (0.25 + eta * eta) if mode == "planar" else solve_s(p, eta)
        L *= 4.0 * s
        out.append(L)
    return out


def length_pnorm(curve: SnowflakeCurve) -> float:
    """Sum of lp edge lengths (= 4^n r_n)."""
    return float(curve.edge_lengths().sum())


def length_qnorm(curve: SnowflakeCurve, q: float) -> float:
    """Sum of lq edge lengths, coordinate-exact."""
    return float(lp_norm_array(np.diff(curve.vertex_array, axis=0), q, axis=1).sum())


def lq_growth_bound(schedule: HeightSchedule, p: float, q: float, n: int) -> list[float]:
    """Evaluated exponential upper bound for the lq length of generations 1..n.

    Per-refinement growth 1 + C_q (eta_i / i^(1/q - 1/p))^q with C_q = 8^q / q
    (the bump-to-edge ratio in lq is at most 8 eta (i)^{1/p-1/q} for edges in
    i + 1 active coordinates).
    """
    if q < p:
        raise ValueError("bound applies to q >= p")
    Cq = 8.0 ** q / q
    out = []
    total = 0.0
    for i in range(1, n + 1):
        total += Cq * (schedule.eta(i) / i ** (1.0 / q - 1.0 / p)) ** q
        out.append(math.exp(total))
    return out


def curve_points_on_grid(curve: SnowflakeCurve, denom: int) -> np.ndarray:
    """Evaluate the piecewise-linear parameterization at j/denom, j=0..denom.

    denom must be a multiple of 4^generation so segment endpoints land on
    vertices exactly.
    """
    base = 4 ** curve.generation
    if denom % base != 0:
        raise ValueError("denom must be a multiple of 4^generation")
    sub = denom // base
    V = curve.vertex_array
    out = np.empty((denom + 1, V.shape[1]))
    out[::sub] = V
    if sub > 1:
        for r in range(1, sub):
            w = r / sub
            out[r::sub] = (1 - w) * V[:-1] + w * V[1:]
    return out


def vertex_beta_bounds_check(
    curve: SnowflakeCurve,
    j: int | None = None,
    tol: float = 1e-5,
    effort: str = "high",
    seed: int = 0,
) -> dict:
    """Per-vertex beta numbers in windows B(v, r_j) against the eta brackets.

    For a vertex born at generation i the beta number of the vertex cloud in
    B(v, r_j) must lie in [c eta_i - tol, 2 eta_i + tol] with c = sqrt(3)/4
    (planar) or 1/4 (lp); endpoints (birth 0) give ~0.  The window radius is
    inflated by 1e-9 relatively so the two neighbors at distance exactly r_j
    stay inside under roundoff.
    """
    if j is None:
        j = curve.generation
    if j > curve.generation:
        raise ValueError("j must not exceed the curve generation")
    r_j = float(np.prod(curve.s_factors[:j])) if j else 1.0
    c_low = math.sqrt(3.0) / 4.0 if curve.mode == "planar" else 0.25
    rows = []
    all_ok = True
    etas = curve.schedule.etas(max(j, 1))
    P = curve.vertex_array
    space = curve.space
    from scipy.spatial import cKDTree

    tree = cKDTree(P)
    radius = r_j * (1.0 + 1e-9)
    for idx in range(curve.n_vertices):
        i = int(curve.vertex_birth[idx])
        if i > j:
            continue
        center = LpVector(P[idx], space)
        members = np.asarray(
            sorted(tree.query_ball_point(P[idx], radius, p=space.p)), dtype=int
        )
        res = beta(_View(P, space), Ball(center, radius), effort=effort, seed=seed, members=members)
        eta_i = 0.0 if i == 0 else float(etas[i - 1])
        lo = c_low * eta_i - tol
        hi = 2.0 * eta_i + tol
        ok = lo <= res.value <= hi
        all_ok &= ok
        rows.append(
            {"vertex": idx, "birth": i, "eta": eta_i, "beta": res.value, "lo": lo, "hi": hi, "ok": bool(ok)}
        )
    return {"r_j": r_j, "c_low": c_low, "rows": rows, "all_ok": bool(all_ok)}


class _View:
    def __init__(self, points: np.ndarray, space: LpSpace):
        self.points = points
        self.space = space


def _stable_axial_excess(p: float, l: float, h: float) -> float:
    """Excess of the isosceles triangle with horizontal base l and height h."""
    u = (2.0 * h / l) ** p
    return l * math.expm1(math.log1p(u) / p)


def _stable_diagonal_excess(p: float, l: float, h: float) -> float:
    """Excess of the triangle with base along the diagonal direction.

    Base c = l * 2^(-1/p) (1,1), apex at c/2 + h * 2^(-1/p) (-1, 1); the
    offset direction is lp-unit and realizes the distance to the base line.
    """
    u = 2.0 * h / l
    k_minus_1 = 0.5 * (math.expm1(p * math.log1p(u)) + math.expm1(p * math.log1p(-u)))
    return l * math.expm1(math.log1p(k_minus_1) / p)


def triangle_excess_exponents(
    p: float,
    base: Literal["axial", "diagonal"],
    h_grid: np.ndarray,
    l: float = 1.0,
) -> dict:
    """Fit log(excess) ~ slope * log(h) + log(coeff) over the height grid.

    Exact excess values come from cancellation-free closed forms (the naive
    norm difference loses all digits once excess ~ h^5 ~ 1e-15).
    """
    h = np.asarray(h_grid, dtype=float)
    if np.any(h <= 0) or np.any(h >= l / 2):
        raise ValueError("heights must lie in (0, l/2)")
    if base == "axial":
        exc = np.array([_stable_axial_excess(p, l, hh) for hh in h])
    elif base == "diagonal":
        exc = np.array([_stable_diagonal_excess(p, l, hh) for hh in h])
    else:
        raise ValueError("base must be 'axial' or 'diagonal'")
    slope, logc = np.polyfit(np.log(h / l), np.log(exc / l), 1)
    return {
        "base": base,
        "p": p,
        "heights": h.tolist(),
        "excess": exc.tolist(),
        "slope": float(slope),
        "coefficient": float(math.exp(logc)),
    }
