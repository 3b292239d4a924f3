"""Iterated function systems with condensation.

Maps act on arrays of points of shape ``(n, d)``.  Address strings are
tuples of 1-based symbols; ``(s1, s2, ..., sK)`` names the composition
``f_s1 o f_s2 o ... o f_sK``, so the last symbol is applied first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyIFS,
    InvalidProbabilities,
    OrbitalError,
    SymbolOutOfRange,
    UnknownNamedMap,
)
from .measure import NORMALIZATION_TOL, DiscreteMeasure, as_points

PROB_TOL = 1e-12


@dataclass(frozen=True)
class Affine1D:
    """``x -> a*x + b``."""

    a: float
    b: float

    dim = 1

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("affine coefficients must be finite")

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return self.a * pts + self.b

    def affine(self):
        return np.array([[self.a]]), np.array([self.b])

    def lipschitz(self) -> float:
        return abs(self.a)


@dataclass(frozen=True)
class Affine2D:
    """``x -> A @ x + t`` with ``A`` given row-major."""

    A: tuple
    t: tuple

    dim = 2

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        t = np.asarray(self.t, dtype=float)
        if A.shape != (2, 2) or t.shape != (2,):
            raise DimensionMismatch("Affine2D needs a 2x2 matrix and a 2-vector")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(t))):
            raise ValueError("affine coefficients must be finite")
        object.__setattr__(self, "A", tuple(map(tuple, A.tolist())))
        object.__setattr__(self, "t", tuple(t.tolist()))

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        A, t = self.affine()
        return pts @ A.T + t

    def affine(self):
        return np.array(self.A), np.array(self.t)

    def lipschitz(self) -> float:
        # operator norm induced by the max-norm
        return float(np.max(np.sum(np.abs(np.array(self.A)), axis=1)))


@dataclass(frozen=True)
class _Registered:
    dim: int
    n_params: int
    fn: Callable
    lipschitz: Callable | None = None


def _sine(x, amp, freq, shift):
    return amp * np.sin(freq * x) + shift


def _tanh(x, scale, shift):
    return scale * np.tanh(x) + shift


def _logistic(x, r):
    return r * x * (1.0 - x)


def _sinusoidal2d(x, scale):
    return scale * np.sin(x)


NAMED_MAPS: dict[str, _Registered] = {
    "sine": _Registered(1, 3, _sine, lambda amp, freq, shift: abs(amp * freq)),
    "tanh": _Registered(1, 2, _tanh, lambda scale, shift: abs(scale)),
    "logistic": _Registered(1, 1, _logistic),
    "sinusoidal2d": _Registered(2, 1, _sinusoidal2d, lambda scale: abs(scale)),
}


@dataclass(frozen=True)
class NamedNonlinear:
    """A continuous map looked up by name in :data:`NAMED_MAPS`."""

    name: str
    params: tuple = field(default=())

    def __post_init__(self):
        entry = NAMED_MAPS.get(self.name)
        if entry is None:
            raise UnknownNamedMap(f"unknown named map {self.name!r}; known: {sorted(NAMED_MAPS)}")
        params = tuple(float(v) for v in self.params)
        if len(params) != entry.n_params:
            raise ValueError(f"map {self.name!r} takes {entry.n_params} parameters, got {len(params)}")
        if not all(math.isfinite(v) for v in params):
            raise ValueError("map parameters must be finite")
        object.__setattr__(self, "params", params)

    @property
    def dim(self) -> int:
        return NAMED_MAPS[self.name].dim

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return NAMED_MAPS[self.name].fn(pts, *self.params)

    def affine(self):
        return None

    def lipschitz(self) -> float | None:
        lip = NAMED_MAPS[self.name].lipschitz
        return None if lip is None else float(lip(*self.params))


MapSpec = Union[Affine1D, Affine2D, NamedNonlinear]


def apply_map(m: MapSpec, x) -> np.ndarray:
    """Image of a single point; returns an array of shape ``(d,)``."""
    pt = as_points(np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1))
    if pt.shape[1] != m.dim:
        raise DimensionMismatch(f"map acts on R^{m.dim}, point is in R^{pt.shape[1]}")
    return m(pt)[0]


@dataclass(frozen=True)
class IFS:
    maps: tuple
    probs: np.ndarray

    def __post_init__(self):
        maps = tuple(self.maps)
        if len(maps) == 0:
            raise EmptyIFS("an IFS needs at least one map")
        probs = np.array(self.probs, dtype=float).ravel()
        if probs.shape[0] != len(maps):
            raise InvalidProbabilities(f"{len(maps)} maps but {probs.shape[0]} probabilities")
        if not np.all(probs > 0):
            raise InvalidProbabilities("every map probability must be > 0")
        if abs(math.fsum(probs) - 1.0) > PROB_TOL:
            raise InvalidProbabilities(f"map probabilities sum to {math.fsum(probs)!r}, not 1")
        dims = {m.dim for m in maps}
        if len(dims) != 1:
            raise DimensionMismatch(f"maps of mixed dimensions {sorted(dims)}")
        probs.setflags(write=False)
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return len(self.maps)

    @property
    def dim(self) -> int:
        return self.maps[0].dim

    def is_affine(self) -> bool:
        return all(m.affine() is not None for m in self.maps)


@dataclass(frozen=True)
class CondensationSystem:
    """IFS plus condensation measure ``mu0`` injected with probability ``p``."""

    ifs: IFS
    mu0: DiscreteMeasure
    p: float
    q: float | None = None

    def __post_init__(self):
        p = float(self.p)
        q = 1.0 - p if self.q is None else float(self.q)
        if not p > 0:
            raise InvalidProbabilities("p must be > 0")
        if q < 0:
            raise InvalidProbabilities("q must be >= 0")
        if abs(p + q - 1.0) > PROB_TOL:
            raise InvalidProbabilities(f"p + q = {p + q!r}, not 1")
        if self.mu0.dim != self.ifs.dim:
            raise DimensionMismatch(f"mu0 lives in R^{self.mu0.dim}, maps act on R^{self.ifs.dim}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def dim(self) -> int:
        return self.ifs.dim

    def with_p(self, p: float) -> "CondensationSystem":
        return CondensationSystem(self.ifs, self.mu0, p)

    def with_mu0(self, mu0: DiscreteMeasure) -> "CondensationSystem":
        return CondensationSystem(self.ifs, mu0, self.p, self.q)


def as_address(a, n: int | None = None) -> tuple:
    """Normalize an address; strings like ``"121"`` are split into digits."""
    if isinstance(a, str):
        sym = tuple(int(c) for c in a)
    else:
        sym = tuple(int(s) for s in a)
    if n is not None:
        bad = [s for s in sym if not 1 <= s <= n]
        if bad:
            raise SymbolOutOfRange(f"symbols {bad} outside 1..{n}")
    return sym


def apply_address(ifs: IFS, address, x) -> np.ndarray:
    """``f_s1(f_s2(...f_sK(x)))``; ``x`` may be one point or an ``(n, d)`` array."""
    sym = as_address(address, ifs.n)
    single = np.ndim(x) <= 1
    pts = as_points(np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1) if single else x, ifs.dim)
    for s in reversed(sym):
        pts = ifs.maps[s - 1](pts)
    return pts[0] if single else pts


def address_weight(sys: CondensationSystem, address) -> float:
    sym = as_address(address, sys.ifs.n)
    w = sys.p
    for s in sym:
        w *= sys.q * sys.ifs.probs[s - 1]
    return float(w)


def validate_system(
    maps: Sequence[MapSpec],
    map_probs: Sequence[float],
    p: float,
    q: float | None = None,
    mu0=None,
) -> CondensationSystem:
    """Check raw ingredients and build a :class:`CondensationSystem`.

    Probabilities within ``1e-9`` of their constraints are renormalized.
    All problems are collected before raising; the exception class is that
    of the first violation and ``.violations`` lists every
    ``(field, reason)`` pair.
    """
    violations: list[tuple[str, str]] = []
    kinds: list[type] = []

    def bad(kind, path, reason):
        kinds.append(kind)
        violations.append((path, reason))

    maps = list(maps or [])
    if not maps:
        bad(EmptyIFS, "maps", "at least one map is required")
    dims = {m.dim for m in maps}
    if len(dims) > 1:
        bad(DimensionMismatch, "maps", f"maps of mixed dimensions {sorted(dims)}")

    probs = np.asarray(map_probs if map_probs is not None else [], dtype=float).ravel()
    if maps and probs.shape[0] != len(maps):
        bad(InvalidProbabilities, "map_probs", f"expected {len(maps)} probabilities, got {probs.shape[0]}")
    for i, v in enumerate(probs):
        if not (math.isfinite(v) and v > 0):
            bad(InvalidProbabilities, f"map_probs[{i}]", "must be > 0")
    if probs.size and np.all(np.isfinite(probs)):
        s = math.fsum(probs)
        if abs(s - 1.0) > NORMALIZATION_TOL:
            bad(InvalidProbabilities, "map_probs", f"sum is {s!r}, must be 1")
        else:
            probs = probs / s

    try:
        p = float(p)
    except (TypeError, ValueError):
        bad(InvalidProbabilities, "p", "must be a number")
        p = float("nan")
    if not (math.isfinite(p) and p > 0):
        bad(InvalidProbabilities, "p", "must be > 0")
    if q is None:
        q = 1.0 - p
    else:
        q = float(q)
        if not (math.isfinite(q) and q >= 0):
            bad(InvalidProbabilities, "q", "must be >= 0")
        elif math.isfinite(p):
            s = p + q
            if abs(s - 1.0) > NORMALIZATION_TOL:
                bad(InvalidProbabilities, "q", f"p + q = {s!r}, must be 1")
            else:
                p = p / s
                q = 1.0 - p
    if math.isfinite(p) and p > 1.0:
        bad(InvalidProbabilities, "p", "must be <= 1")

    measure = None
    if mu0 is None:
        bad(OrbitalError, "mu0", "a condensation measure is required")
    else:
        measure = mu0 if isinstance(mu0, DiscreteMeasure) else mu0.to_measure()
        if len(dims) == 1 and measure.dim not in dims:
            bad(DimensionMismatch, "mu0", f"mu0 lives in R^{measure.dim}, maps act on R^{dims.pop()}")

    if violations:
        msg = "; ".join(f"{path}: {reason}" for path, reason in violations)
        raise kinds[0](msg, violations)
    return CondensationSystem(IFS(tuple(maps), probs), measure, p, q)
