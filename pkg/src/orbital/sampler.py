"""Random sampling from orbital measures.

Two samplers are provided.

* :func:`sample_orbital` reads the orbital series as a mixture: draw an
  address length ``L`` with ``P(L = n) = p q^n``, draw ``L`` i.i.d. symbols,
  draw ``x`` from ``mu0`` and return ``f_s1 o ... o f_sL (x)``.  There is no
  truncation error.
* :func:`chaos_game_restart` runs the chain that restarts from ``mu0`` with
  probability ``p`` and otherwise applies a randomly chosen map.  Between
  restarts the maps are applied in forward order; since the symbols are
  i.i.d. the law of the composition is the same as in the series.

Both work in fixed-size chunks, each with its own random stream, so output
is reproducible and independent of the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import rng as _rng
from .errors import DegenerateSpec, DimensionMismatch, EmptyBatch
from .ifs import Affine1D, Affine2D, CondensationSystem
from .measure import DiscreteMeasure, as_points


@dataclass(frozen=True)
class PointMass:
    point: tuple

    def __post_init__(self):
        pt = np.atleast_1d(np.asarray(self.point, dtype=float))
        if pt.ndim != 1 or not np.all(np.isfinite(pt)):
            raise DegenerateSpec("point mass needs a finite point")
        object.__setattr__(self, "point", tuple(pt.tolist()))

    @property
    def dim(self) -> int:
        return len(self.point)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.tile(np.asarray(self.point), (size, 1))

    def to_measure(self, n_atoms: int | None = None) -> DiscreteMeasure:
        return DiscreteMeasure.dirac(self.point)


@dataclass(frozen=True)
class UniformInterval:
    lo: float
    hi: float

    dim = 1

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.hi > self.lo):
            raise DegenerateSpec(f"interval [{self.lo}, {self.hi}) is degenerate")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        return (self.lo + u * (self.hi - self.lo)).reshape(-1, 1)

    def to_measure(self, n_atoms: int = 64) -> DiscreteMeasure:
        """Cell midpoints of an ``n_atoms``-cell partition, equal weights."""
        x = self.lo + (np.arange(n_atoms) + 0.5) * (self.hi - self.lo) / n_atoms
        return DiscreteMeasure(x, np.full(n_atoms, 1.0 / n_atoms))


@dataclass(frozen=True)
class UniformBox:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)) or np.any(hi <= lo):
            raise DegenerateSpec(f"box {lo.tolist()}..{hi.tolist()} is degenerate")
        object.__setattr__(self, "lo", tuple(lo.tolist()))
        object.__setattr__(self, "hi", tuple(hi.tolist()))

    @property
    def dim(self) -> int:
        return len(self.lo)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return lo + rng.random((size, self.dim)) * (hi - lo)

    def to_measure(self, n_atoms: int = 64) -> DiscreteMeasure:
        """Midpoints of a ``k x ... x k`` grid with ``k^d >= n_atoms``."""
        k = math.ceil(n_atoms ** (1.0 / self.dim) - 1e-9)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        axes = [lo[i] + (np.arange(k) + 0.5) * (hi[i] - lo[i]) / k for i in range(self.dim)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        return DiscreteMeasure(mesh, np.full(mesh.shape[0], 1.0 / mesh.shape[0]))


@dataclass(frozen=True)
class Atoms:
    measure: DiscreteMeasure

    @property
    def dim(self) -> int:
        return self.measure.dim

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        # inverse CDF over cells [c_{i-1}, c_i); zero-weight atoms are never drawn
        cum = np.cumsum(self.measure.weights)
        u = rng.random(size) * cum[-1]
        idx = np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
        return self.measure.atoms[idx]

    def to_measure(self, n_atoms: int | None = None) -> DiscreteMeasure:
        return self.measure


Mu0Spec = Union[PointMass, UniformInterval, UniformBox, Atoms]


def sample_mu0(spec: Mu0Spec, rng: np.random.Generator) -> np.ndarray:
    return spec.sample(rng, 1)[0]


@dataclass(frozen=True)
class SampleBatch:
    """Sample points plus provenance.

    ``lengths`` holds the drawn address lengths (exact sampler) and
    ``epochs`` the regeneration block of every point (chaos game).
    """

    points: np.ndarray
    seed: int
    count: int
    generator_id: str
    method: str
    lengths: np.ndarray | None = None
    epochs: np.ndarray | None = None


def geometric_lengths(u: np.ndarray, q: float) -> np.ndarray:
    """Inverse CDF of ``P(L = n) = (1-q) q^n`` for ``u`` in ``[0, 1)``."""
    if q <= 0.0:
        return np.zeros(np.shape(u), dtype=np.int64)
    return np.floor(np.log1p(-u) / math.log(q)).astype(np.int64)


def _symbols(u: np.ndarray, cumprobs: np.ndarray) -> np.ndarray:
    return np.minimum(np.searchsorted(cumprobs, u, side="right"), len(cumprobs) - 1)


def _check(sys: CondensationSystem, mu0: Mu0Spec, count: int) -> None:
    if count < 1:
        raise ValueError("count must be >= 1")
    if mu0.dim != sys.dim:
        raise DimensionMismatch(f"mu0 lives in R^{mu0.dim}, maps act on R^{sys.dim}")


def _run_chunks(fn, count: int, workers: int):
    sizes = _rng.chunk_sizes(count)
    jobs = list(enumerate(sizes))
    if workers <= 1 or len(jobs) == 1:
        return [fn(i, n) for i, n in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def _exact_chunk(sys: CondensationSystem, mu0: Mu0Spec, seed: int, chunk: int, size: int):
    gen = _rng.stream(seed, chunk)
    lengths = geometric_lengths(gen.random(size), sys.q)
    x = np.array(mu0.sample(gen, size), dtype=float).reshape(size, sys.dim)
    cumprobs = np.cumsum(sys.ifs.probs)
    # step t applies the (L-t)-th symbol, so the first symbol is applied last
    for t in range(int(lengths.max(initial=0))):
        active = np.flatnonzero(lengths > t)
        sym = _symbols(gen.random(active.size), cumprobs)
        for j, f in enumerate(sys.ifs.maps):
            idx = active[sym == j]
            if idx.size:
                x[idx] = f(x[idx])
    return x, lengths


def sample_orbital(
    sys: CondensationSystem, mu0: Mu0Spec, seed: int, count: int, workers: int = 1
) -> SampleBatch:
    _check(sys, mu0, count)
    parts = _run_chunks(lambda c, n: _exact_chunk(sys, mu0, seed, c, n), count, workers)
    pts = np.concatenate([x for x, _ in parts])
    lengths = np.concatenate([l for _, l in parts])
    return SampleBatch(pts, int(seed), count, _rng.GENERATOR_ID, "exact", lengths=lengths)


def _scalar_steps(sys: CondensationSystem):
    """Per-map step functions on plain Python floats / tuples."""
    steps = []
    for f in sys.ifs.maps:
        if isinstance(f, Affine1D):
            steps.append(lambda x, a=f.a, b=f.b: a * x + b)
        elif isinstance(f, Affine2D):
            (a, b), (c, d) = f.A
            tx, ty = f.t
            steps.append(lambda v, a=a, b=b, c=c, d=d, tx=tx, ty=ty: (a * v[0] + b * v[1] + tx, c * v[0] + d * v[1] + ty))
        elif sys.dim == 1:
            steps.append(lambda x, f=f: float(f(np.array([[x]]))[0, 0]))
        else:
            steps.append(lambda v, f=f: tuple(f(np.array([v]))[0].tolist()))
    return steps


def _chaos_chunk(sys, mu0, seed, chunk, size, stride, steps):
    gen = _rng.stream(seed, chunk)
    cumprobs = np.cumsum(sys.ifs.probs)
    p = sys.p
    out, epochs = [], []
    epoch = -1
    phase = 0
    x = None
    while len(out) < size:
        block = max(4096, (size - len(out)) * stride + 64)
        restart = (gen.random(block) < p).tolist()
        syms = _symbols(gen.random(block), cumprobs).tolist()
        n_restart = sum(restart)
        draws = mu0.sample(gen, n_restart)
        draws = draws[:, 0].tolist() if sys.dim == 1 else [tuple(r) for r in draws.tolist()]
        r = 0
        for i in range(block):
            if restart[i]:
                x = draws[r]
                r += 1
                epoch += 1
            elif epoch < 0:
                continue
            else:
                x = steps[syms[i]](x)
            if phase % stride == 0:
                out.append(x)
                epochs.append(epoch)
                if len(out) == size:
                    break
            phase += 1
    pts = np.asarray(out, dtype=float).reshape(size, sys.dim)
    return pts, (np.int64(chunk) << 32) + np.asarray(epochs, dtype=np.int64)


def chaos_game_restart(
    sys: CondensationSystem,
    mu0: Mu0Spec,
    seed: int,
    count: int,
    stride: int = 1,
    workers: int = 1,
) -> SampleBatch:
    """Record every ``stride``-th state of the restart chain.

    Each chunk runs its own chain and records from its first restart on, so
    no burn-in is needed.  ``epochs`` identifies the regeneration block of
    each recorded state (unique across chunks).
    """
    _check(sys, mu0, count)
    if stride < 1:
        raise ValueError("stride must be >= 1")
    steps = _scalar_steps(sys)
    parts = _run_chunks(lambda c, n: _chaos_chunk(sys, mu0, seed, c, n, stride, steps), count, workers)
    pts = np.concatenate([x for x, _ in parts])
    epochs = np.concatenate([e for _, e in parts])
    return SampleBatch(pts, int(seed), count, _rng.GENERATOR_ID, "chaos", epochs=epochs)


def empirical_measure(batch: SampleBatch) -> DiscreteMeasure:
    if batch.points is None or len(batch.points) == 0:
        raise EmptyBatch("cannot build a measure from an empty batch")
    n = len(batch.points)
    return DiscreteMeasure(as_points(batch.points, batch.points.shape[1]), np.full(n, 1.0 / n))


def block_bootstrap_ks(
    exact: SampleBatch,
    chaos: SampleBatch,
    reps: int = 200,
    level: float = 0.99,
    seed: int = 0,
) -> tuple[float, float]:
    """KS distance between two 1-D batches and a bootstrap tolerance for it.

    The exact batch is i.i.d. and is resampled multinomially; the chaos
    batch is resampled by whole regeneration blocks, which are i.i.d.
    Returns ``(ks, tol)`` where ``tol`` is the ``level`` quantile of the
    centred bootstrap statistic ``sup |(F*_e - F*_c) - (F_e - F_c)|``.
    """
    if chaos.epochs is None:
        raise ValueError("chaos batch carries no regeneration epochs")
    xe = exact.points[:, 0]
    xc = chaos.points[:, 0]
    ne, nc = xe.size, xc.size
    grid, inv = np.unique(np.concatenate([xe, xc]), return_inverse=True)
    ie, ic = inv[:ne], inv[ne:]
    u = grid.size
    ce = np.bincount(ie, minlength=u)
    cc = np.bincount(ic, minlength=u)
    diff = np.cumsum(ce) / ne - np.cumsum(cc) / nc
    ks = float(np.max(np.abs(diff)))

    starts = np.flatnonzero(np.r_[True, np.diff(chaos.epochs) != 0])
    lengths = np.diff(np.r_[starts, nc])
    nb = starts.size
    gen = _rng.stream(seed, 0)
    pe = ce / ne
    stats = np.empty(reps)
    for r in range(reps):
        ce_star = gen.multinomial(ne, pe)
        pick = gen.integers(0, nb, nb)
        ln = lengths[pick]
        total = int(ln.sum())
        offsets = np.repeat(starts[pick] - (np.cumsum(ln) - ln), ln)
        idx = offsets + np.arange(total)
        cc_star = np.bincount(ic[idx], minlength=u)
        d_star = np.cumsum(ce_star) / ne - np.cumsum(cc_star) / total
        stats[r] = np.max(np.abs(d_star - diff))
    return ks, float(np.quantile(stats, level))
