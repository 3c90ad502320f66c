"""Modulus of smoothness and modulus of convexity for lp spaces.

Closed forms for l2, leading-order terms for general p, and sampled numeric
estimators with a strict one-sidedness discipline:

* ``rho_numeric``  is a sup over sampled unit pairs  -> certified LOWER bound;
* ``delta_numeric`` is an inf over sampled unit pairs -> certified UPPER bound;
* ``rho_upper``    is a calibrated upper envelope used wherever an inequality
  needs the modulus of smoothness from above.

Estimators search two-dimensional sections; for lp the known extremal pairs
are two-dimensional, and the estimators are validated against the p = 2
closed forms and the leading terms in the test suite.
"""

from __future__ import annotations

import math

import numpy as np

from .lp_core import LpVector, lp_norm_array
from .projections import segment_dists

__all__ = [
    "delta_l2",
    "delta_lp_main_term",
    "delta_numeric",
    "delta_numeric_batch",
    "rho_l2",
    "rho_lp_main_term",
    "rho_numeric",
    "rho_upper",
    "triangle_excess_bound_check",
]


def rho_l2(t: float) -> float:
    """sqrt(1 + t^2) - 1, evaluated stably for small t."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    return float(t * t / (math.sqrt(1.0 + t * t) + 1.0))


def delta_l2(eps: float) -> float:
    """1 - sqrt(1 - eps^2/4), evaluated stably; domain 0 <= eps <= 2."""
    if not (0.0 <= eps <= 2.0):
        raise ValueError("eps must lie in [0, 2]")
    u = eps * eps / 4.0
    return float(u / (1.0 + math.sqrt(max(1.0 - u, 0.0))))


def rho_lp_main_term(p: float, t: float) -> float:
    """Leading term of the smoothness modulus: t^p/p below 2, (p-1)t^2/2 above."""
    if p <= 1.0:
        raise ValueError("p must be > 1")
    if t < 0.0:
        raise ValueError("t must be >= 0")
    if p <= 2.0:
        return float(t ** p / p)
    return float(0.5 * (p - 1.0) * t * t)


def delta_lp_main_term(p: float, eps: float) -> float:
    """Leading term of the convexity modulus: (p-1)eps^2/8 below 2, eps^p/(p 2^p) above."""
    if p <= 1.0:
        raise ValueError("p must be > 1")
    if eps < 0.0:
        raise ValueError("eps must be >= 0")
    if p <= 2.0:
        return float((p - 1.0) * eps * eps / 8.0)
    return float(eps ** p / (p * 2.0 ** p))


def _unit(theta: np.ndarray, p: float) -> np.ndarray:
    """Point(s) on the lp unit circle at Euclidean angle theta."""
    v = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    return v / lp_norm_array(v, p, axis=-1)[..., None]


def rho_numeric(p: float, t: float, dim: int = 2, seed: int = 0, n_grid: int = 64) -> float:
    """Sampled value of the smoothness modulus at t (certified lower bound).

    Grid sweep over angle pairs on the 2-d section followed by coordinate
    golden-section ascent from the best cell.
    """
    if dim != 2:
        raise ValueError("estimator searches 2-dimensional sections only")
    if t <= 0.0:
        if t == 0.0:
            return 0.0
        raise ValueError("t must be >= 0")

    def val(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
        x = _unit(theta, p)
        y = t * _unit(phi, p)
        return 0.5 * (lp_norm_array(x + y, p, axis=-1) + lp_norm_array(x - y, p, axis=-1)) - 1.0

    th = np.linspace(0.0, np.pi, n_grid, endpoint=False)
    ph = np.linspace(0.0, np.pi, n_grid, endpoint=False)
    V = val(th[:, None], ph[None, :])
    i, j = np.unravel_index(int(V.argmax()), V.shape)
    best = float(V[i, j])
    a, b = th[i], ph[j]
    h = np.pi / n_grid
    for _ in range(3):
        a, fa = _golden_max(lambda u: float(val(np.asarray(u), np.asarray(b))), a - h, a + h)
        b, fb = _golden_max(lambda u: float(val(np.asarray(a), np.asarray(u))), b - h, b + h)
        best = max(best, fa, fb)
        h *= 0.25
    return best


def _golden_max(f, lo: float, hi: float, iters: int = 40) -> tuple[float, float]:
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - gr * (hi - lo)
    d = lo + gr * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - gr * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + gr * (hi - lo)
            fd = f(d)
    return (c, fc) if fc > fd else (d, fd)


def delta_numeric_batch(
    p: float,
    eps: np.ndarray,
    n_theta: int = 25,
    bisect_iters: int = 48,
    refine_iters: int = 26,
) -> np.ndarray:
    """Upper estimates of the convexity modulus at each eps (vectorized).

    For each base angle theta the partner on the unit circle at lp distance
    exactly eps is found by bisection (chord length grows monotonically along
    the circle), then the best theta is refined by golden section.  Every
    evaluated pair is feasible for the defining infimum, so the minimum over
    samples upper-bounds the modulus.
    """
    eps = np.asarray(eps, dtype=float)
    scalar = eps.ndim == 0
    eps = np.atleast_1d(eps)
    if np.any((eps < 0.0) | (eps > 2.0)):
        raise ValueError("eps must lie in [0, 2]")
    out = np.zeros_like(eps)
    pos = eps > 0.0
    if np.any(pos):
        e = eps[pos]

        def obj(theta: np.ndarray) -> np.ndarray:
            x = _unit(theta, p)
            lo = theta.copy()
            hi = theta + np.pi
            for _ in range(bisect_iters):
                mid = 0.5 * (lo + hi)
                closer = lp_norm_array(x - _unit(mid, p), p, axis=-1) < e
                lo = np.where(closer, mid, lo)
                hi = np.where(closer, hi, mid)
            y = _unit(0.5 * (lo + hi), p)
            return 1.0 - 0.5 * lp_norm_array(x + y, p, axis=-1)

        thetas = np.linspace(0.0, np.pi, n_theta, endpoint=False)
        vals = np.stack([obj(np.full(e.shape, th)) for th in thetas])
        kbest = vals.argmin(axis=0)
        t0 = thetas[kbest]
        h = np.pi / n_theta
        a, b = t0 - h, t0 + h
        gr = (math.sqrt(5.0) - 1.0) / 2.0
        c = b - gr * (b - a)
        d = a + gr * (b - a)
        fc, fd = obj(c), obj(d)
        for _ in range(refine_iters):
            left = fc < fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            c = b - gr * (b - a)
            d = a + gr * (b - a)
            fc, fd = obj(c), obj(d)
        out[pos] = np.minimum(vals.min(axis=0), np.minimum(fc, fd))
    out = np.maximum(out, 0.0)
    return float(out[0]) if scalar else out


def delta_numeric(p: float, eps: float, dim: int = 2) -> float:
    """Upper estimate of the convexity modulus at a single eps."""
    if dim != 2:
        raise ValueError("estimator searches 2-dimensional sections only")
    return float(delta_numeric_batch(p, np.asarray(eps)))


def rho_upper(p: float, t: float) -> float:
    """Calibrated upper envelope for the smoothness modulus of lp.

    min(t, 2 * leading term) for t <= 1/2, else t; rho(t) <= t always holds,
    and the factor-2 envelope over the leading term is validated against
    rho_numeric on a grid in the test suite.
    """
    if p <= 1.0:
        raise ValueError("p must be > 1")
    if t < 0.0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return 0.0
    if t > 0.5:
        return float(t)
    return float(min(t, 2.0 * rho_lp_main_term(p, t)))


def triangle_excess_bound_check(
    x: LpVector, y: LpVector, z: LpVector, r: float
) -> tuple[float, float, bool]:
    """Check excess(x, y, z) >= 2 r delta(dist(y, [x, z]) / r).

    Requires r >= max(|x - y|, |y - z|).  delta_numeric upper-estimates the
    modulus, so a pass is the strongest checkable form of the bound.
    """
    space = x.space
    if y.space != space or z.space != space:
        raise ValueError("mixed spaces")
    p = space.p
    dxy = float(lp_norm_array(x.coords - y.coords, p))
    dyz = float(lp_norm_array(y.coords - z.coords, p))
    dxz = float(lp_norm_array(x.coords - z.coords, p))
    if r < max(dxy, dyz) * (1.0 - 1e-12):
        raise ValueError(f"r = {r} < max(|x-y|, |y-z|) = {max(dxy, dyz)}")
    excess = dxy + dyz - dxz
    h = float(segment_dists(y.coords[None, :], x.coords, z.coords, p)[0])
    ratio = min(h / r, 2.0) if r > 0 else 0.0
    bound = 2.0 * r * delta_numeric(p, ratio)
    return excess, bound, bool(excess >= bound - 1e-12)
