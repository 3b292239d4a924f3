"""Finite atomic probability measures on R^1 / R^2 and distances between them.

A :class:`DiscreteMeasure` is a list of weighted atoms.  Arrays are stored
read-only so measures behave as immutable values and can be shared freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    AllZeroWeights,
    DegenerateBox,
    DimensionMismatch,
    EmptyDirections,
    NegativeWeight,
    NotNormalized,
)

NORMALIZATION_TOL = 1e-9


def as_points(points, dim: int | None = None) -> np.ndarray:
    """Coerce ``points`` to a finite float array of shape ``(n, d)``.

    A flat sequence is read as ``n`` one-dimensional points unless ``dim``
    says otherwise.
    """
    arr = np.array(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1) if dim is not None and dim > 1 else arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionMismatch(f"points must be 1-D or 2-D arrays, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    # fold -0.0 into 0.0 so equal atoms compare and print identically
    return arr + 0.0


def normalize(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0:
        raise AllZeroWeights("no weights given")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    if np.any(w < 0):
        raise NegativeWeight(f"negative weight {w.min()!r}")
    total = math.fsum(w)
    if total == 0:
        raise AllZeroWeights("weights sum to zero")
    return w / total


class DiscreteMeasure:
    """Probability measure ``sum_i w_i * delta(x_i)``.

    Parameters
    ----------
    atoms : array_like, shape (n, d) or (n,)
        Atom positions; a flat array means ``d = 1``.
    weights : array_like, shape (n,)
        Non-negative masses.  Their sum must be within ``1e-9`` of one.
    dim : int, optional
        Dimension, required to disambiguate a single 2-D atom given flat.
    normalize : bool
        Divide by the exact sum when it differs from one.  Loaders that
        must reproduce stored weights bit-for-bit pass ``False``.

    Attributes
    ----------
    mass : float
        Exact (compensated) sum of the weights as supplied.
    """

    __slots__ = ("atoms", "weights", "mass")

    def __init__(self, atoms, weights, dim: int | None = None, normalize: bool = True):
        pts = as_points(atoms, dim)
        w = np.array(weights, dtype=float).ravel()
        if w.shape[0] != pts.shape[0]:
            raise ValueError(f"{pts.shape[0]} atoms but {w.shape[0]} weights")
        if pts.shape[0] == 0:
            raise AllZeroWeights("a measure needs at least one atom")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise NegativeWeight(f"negative weight {w.min()!r}")
        mass = math.fsum(w)
        if abs(mass - 1.0) > NORMALIZATION_TOL:
            raise NotNormalized(f"total mass {mass!r} is not 1 within {NORMALIZATION_TOL}")
        if normalize and mass != 1.0:
            w = w / mass
        pts.setflags(write=False)
        w.setflags(write=False)
        self.atoms = pts
        self.weights = w
        self.mass = mass

    @classmethod
    def from_mass(cls, atoms, weights, dim: int | None = None) -> "DiscreteMeasure":
        """Build from an arbitrary positive finite mass, renormalizing it.

        The raw total is kept in ``mass``.
        """
        w = np.array(weights, dtype=float).ravel()
        raw = math.fsum(w)
        m = cls(atoms, normalize(w), dim=dim)
        m.mass = raw
        return m

    @classmethod
    def dirac(cls, point) -> "DiscreteMeasure":
        pt = np.atleast_1d(np.asarray(point, dtype=float))
        return cls(pt.reshape(1, -1), [1.0])

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def __len__(self) -> int:
        return self.atoms.shape[0]

    def __repr__(self) -> str:
        if len(self) <= 6:
            body = ", ".join(
                f"{tuple(a) if self.dim > 1 else a[0]!r}: {w!r}" for a, w in zip(self.atoms, self.weights)
            )
            return f"DiscreteMeasure({{{body}}})"
        return f"DiscreteMeasure(<{len(self)} atoms in R^{self.dim}>)"

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.atoms.min(axis=0), self.atoms.max(axis=0)


def mixture(measures: Sequence[DiscreteMeasure], coefs: Sequence[float]) -> DiscreteMeasure:
    """Convex combination ``sum_k c_k m_k`` as one measure (no merging)."""
    if not measures:
        raise ValueError("empty mixture")
    dim = measures[0].dim
    if any(m.dim != dim for m in measures):
        raise DimensionMismatch("mixture of measures with different dimensions")
    atoms = np.concatenate([m.atoms for m in measures])
    weights = np.concatenate([c * m.weights for m, c in zip(measures, coefs)])
    return DiscreteMeasure(atoms, weights, dim=dim)


def merge_atoms(atoms: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort ``(n, d)`` atoms lexicographically and sum weights of identical ones.

    Works on raw arrays, so it also serves sub-probability partial sums.
    """
    # weight as the last tie-break makes the summation order independent of input order
    order = np.lexsort((weights, *atoms.T[::-1]))
    a = atoms[order]
    w = weights[order]
    new_group = np.empty(a.shape[0], dtype=bool)
    new_group[:1] = True
    new_group[1:] = np.any(a[1:] != a[:-1], axis=1)
    starts = np.flatnonzero(new_group)
    return a[starts], np.add.reduceat(w, starts)


def canonicalize(m: DiscreteMeasure, merge_tol: float = 0.0) -> DiscreteMeasure:
    """Merge atoms closer than ``merge_tol`` (max-norm) and sort them.

    Clusters are formed greedily in lexicographic order: each unassigned
    atom anchors a cluster of all later unassigned atoms within
    ``merge_tol`` of it and the merged atom sits at the anchor.  Anchors
    are therefore more than ``merge_tol`` apart, which makes the operation
    idempotent.
    """
    if merge_tol < 0:
        raise ValueError("merge_tol must be non-negative")
    if merge_tol == 0:
        a, w = merge_atoms(m.atoms, m.weights)
        return DiscreteMeasure(a, w, normalize=False)
    order = np.lexsort(m.atoms.T[::-1])
    a = m.atoms[order]
    w = m.weights[order]
    n = a.shape[0]

    group = np.full(n, -1, dtype=np.int64)
    x = a[:, 0]
    anchors = []
    i = 0
    while i < n:
        if group[i] >= 0:
            i += 1
            continue
        gid = len(anchors)
        anchors.append(i)
        hi = np.searchsorted(x, x[i] + merge_tol, side="right")
        window = slice(i, hi)
        close = group[window] < 0
        if a.shape[1] > 1:
            close &= np.all(np.abs(a[window, 1:] - a[i, 1:]) <= merge_tol, axis=1)
        group[window][close] = gid
        i += 1
    merged = np.bincount(group, weights=w, minlength=len(anchors))
    return DiscreteMeasure(a[anchors], merged, normalize=False)


def same_measure(a: DiscreteMeasure, b: DiscreteMeasure) -> bool:
    """Exact equality of canonical forms."""
    ca, cb = canonicalize(a), canonicalize(b)
    return (
        ca.atoms.shape == cb.atoms.shape
        and bool(np.array_equal(ca.atoms, cb.atoms))
        and bool(np.array_equal(ca.weights, cb.weights))
    )


def _require_dim(m: DiscreteMeasure, d: int) -> None:
    if m.dim != d:
        raise DimensionMismatch(f"expected a measure on R^{d}, got R^{m.dim}")


def _sorted_cdf(m: DiscreteMeasure):
    x = m.atoms[:, 0]
    order = np.lexsort((m.weights, x))
    cum = np.cumsum(m.weights[order])
    # dividing by the last partial sum pins the CDF to exactly 1 at the top atom
    return x[order], cum / cum[-1]


def _cdf_at(xs_sorted, cum, points) -> np.ndarray:
    idx = np.searchsorted(xs_sorted, points, side="right")
    out = np.zeros(len(points))
    hit = idx > 0
    out[hit] = cum[idx[hit] - 1]
    return out


def cdf_eval(m: DiscreteMeasure, x: float) -> float:
    """Mass of ``(-inf, x]``."""
    _require_dim(m, 1)
    xs, cum = _sorted_cdf(m)
    return float(_cdf_at(xs, cum, np.array([x], dtype=float))[0])


def _cdf_pair(a: DiscreteMeasure, b: DiscreteMeasure):
    _require_dim(a, 1)
    _require_dim(b, 1)
    xa, ca = _sorted_cdf(a)
    xb, cb = _sorted_cdf(b)
    grid = np.union1d(xa, xb)
    return grid, _cdf_at(xa, ca, grid), _cdf_at(xb, cb, grid)


def wasserstein1_1d(a: DiscreteMeasure, b: DiscreteMeasure) -> float:
    """Exact W1 on the line, the integral of ``|F_a - F_b|``."""
    grid, fa, fb = _cdf_pair(a, b)
    if grid.size < 2:
        return 0.0
    return float(np.sum(np.abs(fa[:-1] - fb[:-1]) * np.diff(grid)))


def ks_distance(a: DiscreteMeasure, b: DiscreteMeasure) -> float:
    grid, fa, fb = _cdf_pair(a, b)
    return float(np.max(np.abs(fa - fb)))


def project(m: DiscreteMeasure, direction) -> DiscreteMeasure:
    """Push ``m`` forward under ``x -> <x, direction>``."""
    u = np.asarray(direction, dtype=float)
    return DiscreteMeasure(m.atoms @ u, m.weights, normalize=False)


def even_directions(k: int = 16) -> np.ndarray:
    """``k`` unit vectors with angles evenly spaced over ``[0, pi)``."""
    theta = np.pi * np.arange(k) / k
    return np.column_stack([np.cos(theta), np.sin(theta)])


def sliced_w1_2d(a: DiscreteMeasure, b: DiscreteMeasure, directions=None) -> float:
    _require_dim(a, 2)
    _require_dim(b, 2)
    dirs = even_directions() if directions is None else np.asarray(directions, dtype=float).reshape(-1, 2)
    if dirs.shape[0] == 0:
        raise EmptyDirections("at least one projection direction is required")
    if np.any(np.abs(np.linalg.norm(dirs, axis=1) - 1.0) > 1e-9):
        raise ValueError("projection directions must be unit vectors")
    return float(np.mean([wasserstein1_1d(project(a, u), project(b, u)) for u in dirs]))


def distance(a: DiscreteMeasure, b: DiscreteMeasure, directions=None) -> float:
    """W1 in one dimension, sliced W1 in two."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"R^{a.dim} vs R^{b.dim}")
    if a.dim == 1:
        return wasserstein1_1d(a, b)
    return sliced_w1_2d(a, b, directions)


@dataclass(frozen=True)
class GridMeasure:
    """Histogram of a measure over a regular grid on an axis-aligned box.

    ``cells`` has shape ``resolution`` (axis order x, y).
    """

    lo: np.ndarray
    hi: np.ndarray
    resolution: tuple
    cells: np.ndarray
    escaped_mass: float

    @property
    def dim(self) -> int:
        return len(self.resolution)

    def total(self) -> float:
        return math.fsum(self.cells.ravel()) + self.escaped_mass


def parse_box(box, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Accept ``(lo, hi)`` in 1-D or ``[(lo_x, hi_x), (lo_y, hi_y)]``."""
    arr = np.asarray(box, dtype=float).reshape(-1, 2)
    if arr.shape[0] != dim:
        raise DimensionMismatch(f"box has {arr.shape[0]} axes, measure has {dim}")
    lo, hi = arr[:, 0].copy(), arr[:, 1].copy()
    if not np.all(np.isfinite(arr)) or np.any(hi <= lo):
        raise DegenerateBox(f"box {arr.tolist()} is degenerate")
    return lo, hi


def discretize_to_grid(m: DiscreteMeasure, box, resolution) -> GridMeasure:
    """Bin atoms into cells ``[lo, hi)`` per axis; the last cell is closed.

    Atoms outside the closed box are counted in ``escaped_mass``.
    """
    lo, hi = parse_box(box, m.dim)
    res = tuple(int(r) for r in np.broadcast_to(np.asarray(resolution), (m.dim,)))
    if any(r < 1 for r in res):
        raise ValueError("resolution must be >= 1 per axis")
    pts = m.atoms
    inside = np.all((pts >= lo) & (pts <= hi), axis=1)
    rel = (pts[inside] - lo) / (hi - lo)
    idx = np.floor(rel * np.asarray(res)).astype(np.int64)
    idx = np.minimum(idx, np.asarray(res) - 1)
    flat = np.ravel_multi_index(tuple(idx.T), res) if idx.size else np.zeros(0, dtype=np.int64)
    cells = np.bincount(flat, weights=m.weights[inside], minlength=int(np.prod(res))).reshape(res)
    escaped = math.fsum(m.weights[~inside])
    cells.setflags(write=False)
    return GridMeasure(lo, hi, res, cells, escaped)
