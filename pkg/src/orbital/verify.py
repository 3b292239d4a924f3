"""Numerical checks of the fixed-point equation and the escape-of-mass study.

Distances are W1 on the line and sliced W1 (16 evenly spaced directions by
default) in the plane.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidMu0Support
from .ifs import IFS, Affine1D, CondensationSystem
from .measure import (
    DiscreteMeasure,
    cdf_eval,
    discretize_to_grid,
    distance,
    parse_box,
    wasserstein1_1d,
)
from .sampler import Mu0Spec, PointMass
from .export import padded_bounds
from .series import depth_for_tolerance, enumerate_series, truncate
from .transfer import condensation_step

EXERCISE_MAP = Affine1D(0.5, 0.5)


def fixed_point_residual(sys: CondensationSystem, m: DiscreteMeasure, directions=None) -> float:
    """Distance between ``m`` and ``p*mu0 + q*M(m)``; zero exactly at the orbital measure."""
    if m.dim != sys.dim:
        raise DimensionMismatch(f"measure in R^{m.dim}, system in R^{sys.dim}")
    return distance(m, condensation_step(sys, m), directions)


def _max_pairwise(measures: Sequence[DiscreteMeasure], directions=None) -> float:
    return max((distance(a, b, directions) for a, b in itertools.combinations(measures, 2)), default=0.0)


def uniqueness_trajectory(
    sys: CondensationSystem,
    starts: Sequence[DiscreteMeasure],
    steps: int,
    prune_tol: float = 0.0,
    directions=None,
) -> list[float]:
    """Max pairwise distance between the iterates of every start, for steps 0..``steps``."""
    if len(starts) < 2:
        raise ValueError("need at least two starting measures")
    for s in starts:
        if s.dim != sys.dim:
            raise DimensionMismatch(f"start in R^{s.dim}, system in R^{sys.dim}")
    current = list(starts)
    out = [_max_pairwise(current, directions)]
    for _ in range(steps):
        current = [condensation_step(sys, nu, prune_tol) for nu in current]
        out.append(_max_pairwise(current, directions))
    return out


def uniqueness_probe(
    sys: CondensationSystem,
    starts: Sequence[DiscreteMeasure],
    steps: int,
    prune_tol: float = 0.0,
    directions=None,
) -> float:
    """Apply the condensation step ``steps`` times to every start and return
    the largest pairwise distance between the results."""
    return uniqueness_trajectory(sys, starts, steps, prune_tol, directions)[-1]


def _box_image(ifs: IFS, lo: np.ndarray, hi: np.ndarray):
    corners = np.array(list(itertools.product(*zip(lo, hi))))
    imgs = np.concatenate([f(corners) for f in ifs.maps])
    return imgs.min(axis=0), imgs.max(axis=0)


def invariant_box(sys: CondensationSystem, extra: Iterable[DiscreteMeasure] = (), hint=None, iterations: int = 200):
    """A box containing ``mu0``, the ``extra`` measures and its own images.

    Such a box contains the support of every iterate of the condensation
    step started inside it.  Returns ``(lo, hi)`` or ``None`` when no box
    can be certified (non-affine maps without a Lipschitz bound, or a map
    that is not a max-norm contraction and no valid ``hint``).
    """
    pts = np.concatenate([sys.mu0.atoms] + [m.atoms for m in extra])
    s_lo, s_hi = pts.min(axis=0), pts.max(axis=0)
    ifs = sys.ifs
    affine = ifs.is_affine()
    if hint is not None:
        lo, hi = parse_box(hint, sys.dim)
        if not (np.all(s_lo >= lo) and np.all(s_hi <= hi)) or not affine:
            return None
        i_lo, i_hi = _box_image(ifs, lo, hi)
        if np.all(i_lo >= lo) and np.all(i_hi <= hi):
            return lo, hi
        return None

    lips = [f.lipschitz() for f in ifs.maps]
    if any(l is None for l in lips):
        return None
    if any(l >= 1 for l in lips):
        return _grown_box(ifs, s_lo, s_hi, iterations) if affine else None
    c = (s_lo + s_hi) / 2
    radius = float(np.max(s_hi - s_lo) / 2)
    for f, lip in zip(ifs.maps, lips):
        shift = float(np.max(np.abs(f(c[None])[0] - c)))
        radius = max(radius, shift / (1.0 - lip))
    lo, hi = c - radius, c + radius
    if not affine:
        return lo, hi
    # hull(S u images(B)) of an invariant box B is again invariant and smaller
    for _ in range(iterations):
        i_lo, i_hi = _box_image(ifs, lo, hi)
        n_lo, n_hi = np.minimum(s_lo, i_lo), np.maximum(s_hi, i_hi)
        if np.array_equal(n_lo, lo) and np.array_equal(n_hi, hi):
            break
        lo, hi = n_lo, n_hi
    return lo, hi


def _grown_box(ifs, s_lo, s_hi, iterations):
    # without contraction, accept hull(S u images(B)) only once it stops growing
    lo, hi = s_lo, s_hi
    for _ in range(iterations):
        i_lo, i_hi = _box_image(ifs, lo, hi)
        n_lo, n_hi = np.minimum(lo, i_lo), np.maximum(hi, i_hi)
        if np.array_equal(n_lo, lo) and np.array_equal(n_hi, hi):
            return lo, hi
        lo, hi = n_lo, n_hi
    return None


def box_diameter(lo, hi) -> float:
    return float(np.linalg.norm(np.asarray(hi) - np.asarray(lo)))


@dataclass
class ResolutionGap:
    resolution: tuple
    partition_sum: float
    gap: float
    coarsening_gap: float | None


@dataclass
class AdditivityReport:
    partition_sum: float
    total: float
    max_abs_gap: float
    escaped_mass: float
    by_resolution: list = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return self.escaped_mass == 0.0


def additivity_check(m: DiscreteMeasure, box, resolution) -> AdditivityReport:
    """Check that cell masses add up to the total at every resolution.

    Where every axis resolution is even, the grid is also coarsened by 2 and
    each merged cell is compared with a direct binning at half resolution.
    """
    parse_box(box, m.dim)
    resolutions = [resolution] if np.isscalar(resolution) else list(resolution)
    total = math.fsum(m.weights)
    rows = []
    for res in resolutions:
        g = discretize_to_grid(m, box, res)
        part = g.total()
        coarse_gap = None
        if all(r % 2 == 0 for r in g.resolution):
            merged = g.cells
            for axis in range(g.dim):
                shape = list(merged.shape)
                shape[axis : axis + 1] = [shape[axis] // 2, 2]
                merged = merged.reshape(shape).sum(axis=axis + 1)
            direct = discretize_to_grid(m, box, tuple(r // 2 for r in g.resolution)).cells
            coarse_gap = float(np.max(np.abs(merged - direct)))
        rows.append(ResolutionGap(g.resolution, part, abs(part - total), coarse_gap))
    gaps = [r.gap for r in rows] + [r.coarsening_gap for r in rows if r.coarsening_gap is not None]
    g0 = discretize_to_grid(m, box, resolutions[0])
    return AdditivityReport(
        partition_sum=rows[0].partition_sum,
        total=total,
        max_abs_gap=max(gaps),
        escaped_mass=g0.escaped_mass,
        by_resolution=rows,
    )


def exercise_system(p: float, mu0: DiscreteMeasure) -> CondensationSystem:
    """Single map ``x -> 1/2 + x/2`` with condensation ``mu0``."""
    return CondensationSystem(IFS((EXERCISE_MAP,), [1.0]), mu0, p)


def _exercise_mu0(mu0: Mu0Spec | DiscreteMeasure, n_atoms: int) -> DiscreteMeasure:
    m = mu0 if isinstance(mu0, DiscreteMeasure) else mu0.to_measure(n_atoms)
    if m.dim != 1:
        raise DimensionMismatch("the escape study lives on the line")
    x = m.atoms[:, 0][m.weights > 0]
    if np.any(x < 0) or np.any(x >= 0.5):
        raise InvalidMu0Support("mu0 must put all its mass in [0, 1/2)")
    return m


def _check_p(p: float) -> None:
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p!r}")


@dataclass(frozen=True)
class EscapeRow:
    p: float
    mass: float
    ratio: float
    depth: int


def exercise_escape_study(
    p_values: Sequence[float],
    x: float,
    mu0: Mu0Spec | DiscreteMeasure = PointMass((0.0,)),
    depth: int | None = None,
    tol: float = 1e-12,
    n_atoms: int = 64,
) -> list[EscapeRow]:
    """Mass ``mu_p([0, x])`` of the orbital measure for each ``p``.

    With ``mu0`` carried by ``[0, 1/2)`` every application of the map pushes
    mass towards 1, and ``mu_p([0, x]) / p`` approaches a finite sum, so the
    mass of ``[0, x]`` vanishes linearly as ``p -> 0``.
    """
    if not 0 <= x < 1:
        raise ValueError("x must lie in [0, 1)")
    m0 = _exercise_mu0(mu0, n_atoms)
    rows = []
    for p in p_values:
        _check_p(p)
        sys = exercise_system(p, m0)
        d = depth if depth is not None else depth_for_tolerance(sys.q, tol)
        mu = enumerate_series(sys, d).measure
        mass = cdf_eval(mu, x)
        rows.append(EscapeRow(p, mass, mass / p, d))
    return rows


@dataclass(frozen=True)
class ClosedIntervalRow:
    p: float
    w1_to_one: float
    depth: int


def exercise_closed_interval_probe(
    p_values: Sequence[float],
    mu0: Mu0Spec | DiscreteMeasure = PointMass((0.0,)),
    depth: int | None = None,
    tol: float = 1e-12,
    n_atoms: int = 64,
) -> list[ClosedIntervalRow]:
    """W1 distance from ``mu_p`` to the point mass at 1.

    On ``[0, 1]`` the point 1 is fixed by the map, so ``delta_1`` is
    invariant; the table shows how close ``mu_p`` gets to it.
    """
    m0 = _exercise_mu0(mu0, n_atoms)
    one = DiscreteMeasure.dirac(1.0)
    rows = []
    for p in p_values:
        _check_p(p)
        sys = exercise_system(p, m0)
        d = depth if depth is not None else depth_for_tolerance(sys.q, tol)
        mu = enumerate_series(sys, d).measure
        rows.append(ClosedIntervalRow(p, wasserstein1_1d(mu, one), d))
    return rows


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: float | None
    passed: bool
    detail: str = ""


ADDITIVITY_RESOLUTIONS = tuple(2**k for k in range(1, 11))


def _probe_steps(n_maps: int, start_atoms: int, depth: int, max_atoms: int) -> int:
    if n_maps == 1:
        return depth
    steps, total, level = 0, start_atoms, start_atoms
    while steps < depth:
        level *= n_maps
        if total + level > max_atoms:
            break
        total += level
        steps += 1
    return steps


def verify_report(
    sys: CondensationSystem,
    depth: int,
    route: str = "enum",
    weight_floor: float = 0.0,
    prune_tol: float = 1e-15,
    max_atoms: int = 200_000,
) -> list[Check]:
    """Residual, uniqueness and additivity checks for one system.

    Quantitative bounds need a certified invariant box; without one the
    raw numbers are reported and the check passes vacuously.  The
    uniqueness probe runs ``depth`` steps, fewer for multi-map systems when
    the atom count would exceed ``max_atoms``.
    """
    kw = {"weight_floor": weight_floor} if route == "enum" else {"prune_tol": prune_tol}
    trunc = truncate(sys, depth, route, **kw)
    box = invariant_box(sys)
    diam = box_diameter(*box) if box is not None else None
    checks = []

    res = fixed_point_residual(sys, trunc.measure)
    bound = None if diam is None else 2 * (trunc.tail_bound + trunc.pruned_mass) * diam
    checks.append(Check("residual", res, bound, bound is None or res <= bound, f"depth={trunc.depth}"))

    if box is not None:
        corners = [DiscreteMeasure.dirac(box[0]), DiscreteMeasure.dirac(box[1])]
    else:
        lo, hi = sys.mu0.bounds()
        corners = [DiscreteMeasure.dirac(lo), DiscreteMeasure.dirac(hi + 1.0)]
    starts = [sys.mu0] + corners
    steps = _probe_steps(sys.ifs.n, max(len(s) for s in starts), depth, max_atoms)
    gap = uniqueness_probe(sys, starts, steps)
    ubound = None if diam is None else 2 * sys.q**steps * diam + 1e-9
    checks.append(Check("uniqueness", gap, ubound, ubound is None or gap <= ubound, f"steps={steps}"))

    abox = padded_bounds(trunc.measure)
    rep = additivity_check(trunc.measure, abox, [(r,) * sys.dim for r in ADDITIVITY_RESOLUTIONS])
    ok = rep.max_abs_gap <= 1e-12 and rep.escaped_mass == 0.0
    checks.append(Check("additivity", rep.max_abs_gap, 1e-12, ok, f"escaped={rep.escaped_mass:.3g}"))
    return checks
