"""Finite-dimensional lp vectors, norms, conjugate exponents, duality mapping.

Everything downstream (projections, line fitting, nets, curve generators)
works over truncations lp^n with exponent 1 < p < infinity.  Point clouds are
carried as (n_points, dim) float arrays next to an LpSpace; the LpVector
wrapper is the one-point convenience view used at API boundaries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "LpSpace",
    "LpVector",
    "PointSet",
    "as_point_array",
    "conjugate_exponent",
    "duality_map",
    "duality_map_array",
    "lp_diameter",
    "lp_dist",
    "lp_norm",
    "lp_norm_array",
    "pairing",
    "vector_from_json",
    "vector_to_json",
]


@dataclass(frozen=True)
class LpSpace:
    """Ambient space lp^dim with real exponent p in (1, inf) and dim >= 2."""

    p: float
    dim: int

    def __post_init__(self) -> None:
        if not (1.0 < self.p < math.inf) or not math.isfinite(self.p):
            raise ValueError(f"exponent p must satisfy 1 < p < inf, got {self.p}")
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")

    @property
    def conjugate(self) -> float:
        return conjugate_exponent(self.p)

    def dual(self) -> "LpSpace":
        return LpSpace(self.conjugate, self.dim)


@dataclass(frozen=True)
class LpVector:
    """A point of an LpSpace; coordinates are finite and immutable."""

    coords: np.ndarray
    space: LpSpace

    def __post_init__(self) -> None:
        arr = np.asarray(self.coords, dtype=float)
        if arr.shape != (self.space.dim,):
            raise ValueError(
                f"coords shape {arr.shape} does not match space dim {self.space.dim}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("coords must be finite (no NaN/Inf)")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "coords", arr)

    def norm(self) -> float:
        return lp_norm(self)

    def __add__(self, other: "LpVector") -> "LpVector":
        _check_same_space(self.space, other.space)
        return LpVector(self.coords + other.coords, self.space)

    def __sub__(self, other: "LpVector") -> "LpVector":
        _check_same_space(self.space, other.space)
        return LpVector(self.coords - other.coords, self.space)

    def __mul__(self, c: float) -> "LpVector":
        return LpVector(self.coords * c, self.space)

    __rmul__ = __mul__


@dataclass
class PointSet:
    """A finite point cloud: (n, dim) array plus its LpSpace.

    Bulk operations (beta numbers, nets, Jones sums) use this form; lists of
    LpVector convert via ``PointSet.from_vectors``.
    """

    points: np.ndarray
    space: LpSpace

    def __post_init__(self) -> None:
        arr = np.asarray(self.points, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != self.space.dim:
            raise ValueError(f"points must be (n, {self.space.dim}), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("points must be finite")
        self.points = arr

    @classmethod
    def from_vectors(cls, vectors: Sequence[LpVector]) -> "PointSet":
        if not vectors:
            raise ValueError("empty vector list")
        space = vectors[0].space
        for v in vectors:
            _check_same_space(space, v.space)
        return cls(np.stack([v.coords for v in vectors]), space)

    def __len__(self) -> int:
        return self.points.shape[0]

    def vectors(self) -> list[LpVector]:
        return [LpVector(row, self.space) for row in self.points]


PointsLike = Union[PointSet, Sequence[LpVector]]


def as_point_array(E: PointsLike, space: LpSpace | None = None) -> tuple[np.ndarray, LpSpace]:
    """Normalize a point collection to (array, space).

    Accepts PointSet (or any object exposing .points/.space), a raw array
    plus an explicit space, or a sequence of LpVector.
    """
    if hasattr(E, "points") and hasattr(E, "space"):
        return np.asarray(E.points, dtype=float), E.space
    if isinstance(E, np.ndarray):
        if space is None:
            raise ValueError("raw arrays need an explicit LpSpace")
        return np.asarray(E, dtype=float), space
    ps = PointSet.from_vectors(list(E))
    return ps.points, ps.space


def _check_same_space(a: LpSpace, b: LpSpace) -> None:
    if a != b:
        raise ValueError(f"mixed spaces: {a} vs {b}")


def conjugate_exponent(p: float) -> float:
    """Conjugate p' with 1/p + 1/p' = 1.  Rejects p <= 1."""
    if p <= 1.0:
        raise ValueError(f"conjugate exponent needs p > 1, got {p}")
    return p / (p - 1.0)


def lp_norm_array(X: np.ndarray, p: float, axis: int = -1) -> np.ndarray:
    """lp norm along an axis with max-rescaling.

    Factoring out max|x_i| keeps |x_i/M|^p in range for extreme p, so large
    clouds at p = 5 do not underflow.
    """
    if p == 2.0:
        return np.sqrt(np.sum(np.asarray(X, dtype=float) ** 2, axis=axis))
    A = np.abs(np.asarray(X, dtype=float))
    M = A.max(axis=axis, keepdims=True)
    safe = np.where(M > 0.0, M, 1.0)
    Y = (A / safe) ** p
    return np.squeeze(M, axis=axis) * np.sum(Y, axis=axis) ** (1.0 / p)


def lp_norm(x: Union[LpVector, np.ndarray], p: float | None = None) -> float:
    """Norm of a single vector; p comes from the LpVector when omitted."""
    if isinstance(x, LpVector):
        p = x.space.p
        arr = x.coords
    else:
        if p is None:
            raise ValueError("p required for raw arrays")
        arr = np.asarray(x, dtype=float)
    return float(lp_norm_array(arr, p))


def lp_dist(x: Union[LpVector, np.ndarray], y: Union[LpVector, np.ndarray], p: float | None = None) -> float:
    if isinstance(x, LpVector) and isinstance(y, LpVector):
        _check_same_space(x.space, y.space)
        return float(lp_norm_array(x.coords - y.coords, x.space.p))
    if p is None:
        raise ValueError("p required for raw arrays")
    return float(lp_norm_array(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), p))


def pairing(f: Union[LpVector, np.ndarray], x: Union[LpVector, np.ndarray]) -> float:
    """Natural pairing <f, x> of a dual vector with a primal vector."""
    fa = f.coords if isinstance(f, LpVector) else np.asarray(f, dtype=float)
    xa = x.coords if isinstance(x, LpVector) else np.asarray(x, dtype=float)
    return float(np.dot(fa, xa))


def duality_map_array(x: np.ndarray, p: float) -> np.ndarray:
    """Normalized duality map J into lp', J(x) = |x|^(2-p) * (|x_i|^(p-2) x_i).

    Satisfies |J(x)|_{p'} = |x|_p and <J(x), x> = |x|_p^2; J(0) = 0.
    """
    x = np.asarray(x, dtype=float)
    n = lp_norm_array(x, p)
    if n == 0.0:
        return np.zeros_like(x)
    y = np.sign(x) * np.abs(x) ** (p - 1.0)
    return float(n) ** (2.0 - p) * y


def duality_map(x: LpVector) -> LpVector:
    """J(x) as a vector of the dual space lp'^n."""
    return LpVector(duality_map_array(x.coords, x.space.p), x.space.dual())


def lp_diameter(points: np.ndarray, p: float, block: int = 192) -> float:
    """Exact diameter of a point cloud, with block pruning for large n.

    Consecutive blocks get axis-aligned bounding boxes; a block pair is
    skipped when the box-to-box upper bound cannot beat the current best.
    Exact because the per-coordinate interval bound dominates all pairs.
    """
    P = np.asarray(points, dtype=float)
    n = P.shape[0]
    if n < 2:
        return 0.0
    if n <= 2 * block:
        return float(_diam_bruteforce(P, p))
    nb = (n + block - 1) // block
    blocks = [P[i * block:(i + 1) * block] for i in range(nb)]
    los = np.stack([b.min(axis=0) for b in blocks])
    his = np.stack([b.max(axis=0) for b in blocks])
    # initial lower bound: farthest pair among block corner representatives
    reps = np.concatenate([los, his])
    best = _diam_bruteforce(reps[np.random.default_rng(0).permutation(len(reps))[:256]], p) if len(reps) > 256 else _diam_bruteforce(reps, p)
    # box-to-box upper bounds
    pairs = []
    for i in range(nb):
        gap_lo = np.maximum(los[i] - his[i + 1:], 0.0)
        gap_hi = np.maximum(los[i + 1:] - his[i], 0.0)
        span = np.maximum(his[i + 1:] - los[i], his[i] - los[i + 1:])
        ub = lp_norm_array(np.maximum(span, np.maximum(gap_lo, gap_hi)), p, axis=1)
        for j_off, u in enumerate(ub):
            pairs.append((float(u), i, i + 1 + j_off))
    pairs.sort(reverse=True)
    for u, i, j in pairs:
        if u <= best:
            break
        d = _cross_diam(blocks[i], blocks[j], p)
        if d > best:
            best = d
    # within-block pairs
    for b in blocks:
        ub = float(lp_norm_array(b.max(axis=0) - b.min(axis=0), p))
        if ub > best:
            d = _diam_bruteforce(b, p)
            if d > best:
                best = d
    return float(best)


def _diam_bruteforce(P: np.ndarray, p: float) -> float:
    n = P.shape[0]
    if n < 2:
        return 0.0
    best = 0.0
    step = max(1, int(2.0e6 // max(n, 1)))
    for i0 in range(0, n, step):
        chunk = P[i0:i0 + step]
        D = lp_norm_array(chunk[:, None, :] - P[None, :, :], p, axis=2)
        best = max(best, float(D.max()))
    return best


def _cross_diam(Aa: np.ndarray, Bb: np.ndarray, p: float) -> float:
    D = lp_norm_array(Aa[:, None, :] - Bb[None, :, :], p, axis=2)
    return float(D.max())


def vector_to_json(x: LpVector) -> str:
    """Serialize as {"p": ..., "coords": [...]}."""
    return json.dumps({"p": x.space.p, "coords": [float(c) for c in x.coords]})


def vector_from_json(s: str) -> LpVector:
    obj = json.loads(s)
    coords = np.asarray(obj["coords"], dtype=float)
    return LpVector(coords, LpSpace(float(obj["p"]), len(coords)))
