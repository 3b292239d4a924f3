"""Truncated orbital measures.

The orbital measure is the series

    mu = sum over addresses s of  p * q^|s| * p_s1 ... p_sK * f_s1 o ... o f_sK (mu0)

Two independent constructions are provided.  :func:`enumerate_series`
walks the address tree and evaluates every composition directly;
:func:`neumann_iterate` accumulates ``p * q^n * M^n(mu0)`` by repeated
application of the Markov operator.  Agreement between the two is the
main internal correctness check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DepthOverflow, InvalidQ, InvalidTolerance
from .ifs import CondensationSystem, apply_address
from .measure import DiscreteMeasure, merge_atoms
from .transfer import DEFAULT_PRUNE_TOL, next_rho

DEFAULT_TERM_BUDGET = 10**7


@dataclass(frozen=True)
class TruncatedOrbital:
    """Partial sum of the orbital series up to address length ``depth``.

    ``measure`` is renormalized; ``raw_mass`` is the mass actually captured
    by the retained terms before renormalization.
    """

    measure: DiscreteMeasure
    depth: int
    tail_bound: float
    raw_mass: float
    route: str
    pruned_mass: float = 0.0
    tail: str = "proportional"

    @property
    def raw_weights(self) -> np.ndarray:
        """Atom weights before renormalization (they sum to ``raw_mass``)."""
        if self.tail != "proportional":
            raise ValueError("raw weights are only recoverable from a proportional completion")
        return self.measure.weights * self.raw_mass


def _check_q(q: float) -> None:
    if not (0.0 <= q < 1.0):
        raise InvalidQ(f"q must lie in [0, 1), got {q!r}")


def tail_mass(q: float, depth: int) -> float:
    """Mass ``q^(M+1)`` not captured by addresses of length <= M."""
    _check_q(q)
    if depth < 0:
        raise ValueError("depth must be non-negative")
    return q ** (depth + 1)


def depth_for_tolerance(q: float, eps: float) -> int:
    """Smallest ``M`` with ``q^(M+1) <= eps``."""
    _check_q(q)
    if not (0.0 < eps < 1.0):
        raise InvalidTolerance(f"tolerance must lie in (0, 1), got {eps!r}")
    if q == 0:
        return 0
    m = max(0, math.ceil(math.log(eps) / math.log(q)) - 1)
    # the log estimate can be off by one either way in floating point
    while m > 0 and q ** m <= eps:
        m -= 1
    while q ** (m + 1) > eps:
        m += 1
    return m


def _merged(atoms: np.ndarray, weights: np.ndarray, raw: float) -> DiscreteMeasure:
    # merge before renormalizing: sums of exact partial weights do not depend on term order
    a, w = merge_atoms(atoms, weights)
    measure = DiscreteMeasure.from_mass(a, w, dim=a.shape[1])
    measure.mass = raw
    return measure


def _check_tail(tail: str) -> None:
    if tail not in ("proportional", "deepest"):
        raise ValueError(f"unknown tail completion {tail!r}")


def _term_count(n: int, depth: int) -> int:
    return depth + 1 if n == 1 else (n ** (depth + 1) - 1) // (n - 1)


def enumerate_series(
    sys: CondensationSystem,
    depth: int,
    weight_floor: float = 0.0,
    budget: int = DEFAULT_TERM_BUDGET,
    tail: str = "proportional",
) -> TruncatedOrbital:
    """Sum the series term by term over all addresses of length <= ``depth``.

    Addresses are expanded prefix by prefix.  A prefix whose coefficient
    ``p q^k p_s1 ... p_sk`` falls below ``weight_floor`` is dropped with its
    whole subtree, and the mass that subtree would have carried is reported
    in ``pruned_mass``.  For affine maps the composition of each prefix is
    carried as a matrix/offset pair so every term costs one application to
    the atoms of ``mu0``; other maps fall back to :func:`apply_address`.

    ``tail`` selects how the uncaptured mass ``q^(M+1)`` is restored:
    ``"proportional"`` rescales all retained terms, ``"deepest"`` adds it to
    the depth-``M`` terms, which yields ``T^M(mu0)`` for the condensation
    step ``T``.
    """
    _check_tail(tail)
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if weight_floor < 0:
        raise ValueError("weight_floor must be non-negative")
    p, q = sys.p, sys.q
    if q == 0:
        depth = 0
    ifs, mu0 = sys.ifs, sys.mu0
    n, d = ifs.n, ifs.dim
    if weight_floor == 0 and _term_count(n, depth) > budget:
        raise DepthOverflow(
            f"{_term_count(n, depth)} address terms at depth {depth} exceed the budget of {budget}; "
            "lower the depth or set a weight floor"
        )

    affine = ifs.is_affine()
    if affine:
        map_A = np.stack([m.affine()[0] for m in ifs.maps])
        map_t = np.stack([m.affine()[1] for m in ifs.maps])
        comp_A = np.eye(d)[None]
        comp_t = np.zeros((1, d))
    prefixes = [()]
    coef = np.array([p])

    atom_blocks, weight_blocks, coef_blocks = [], [], []
    pruned = []
    for k in range(depth + 1):
        if coef.size == 0:
            break
        if affine:
            images = np.einsum("kij,aj->kai", comp_A, mu0.atoms) + comp_t[:, None, :]
        else:
            images = np.stack([apply_address(ifs, s, mu0.atoms) for s in prefixes])
        atom_blocks.append(images.reshape(-1, d))
        weight_blocks.append((coef[:, None] * mu0.weights[None, :]).ravel())
        coef_blocks.append(coef)
        if k == depth:
            break
        # children s+j of every prefix s, in lexicographic order
        child = (coef[:, None] * (q * ifs.probs)[None, :]).ravel()
        keep = child >= weight_floor
        if not keep.all():
            levels_left = depth - (k + 1)
            pruned.append(math.fsum(child[~keep]) * (1.0 - q ** (levels_left + 1)) / p)
        coef = child[keep]
        if affine:
            # (g o f_j)(x) = A_g (A_j x + t_j) + t_g
            new_A = np.einsum("kij,njl->knil", comp_A, map_A).reshape(-1, d, d)
            new_t = (np.einsum("kij,nj->kni", comp_A, map_t) + comp_t[:, None, :]).reshape(-1, d)
            comp_A, comp_t = new_A[keep], new_t[keep]
        else:
            prefixes = [s + (j,) for s in prefixes for j in range(1, n + 1)]
            prefixes = [s for s, kp in zip(prefixes, keep) if kp]

    raw = math.fsum(np.concatenate(coef_blocks)) * mu0.mass
    if tail == "deepest" and q > 0 and len(coef_blocks) == depth + 1:
        weight_blocks[-1] = weight_blocks[-1] / p
    measure = _merged(np.concatenate(atom_blocks), np.concatenate(weight_blocks), raw)
    return TruncatedOrbital(
        measure=measure,
        depth=depth,
        tail_bound=q ** (depth + 1),
        raw_mass=raw,
        route="enumeration",
        pruned_mass=math.fsum(pruned),
        tail=tail,
    )


def neumann_iterate(
    sys: CondensationSystem,
    depth: int,
    prune_tol: float = DEFAULT_PRUNE_TOL,
    tail: str = "proportional",
) -> TruncatedOrbital:
    """Partial sum ``p * sum_{n<=depth} q^n M^n(mu0)`` via the power recursion.

    ``tail`` has the same meaning as in :func:`enumerate_series`.
    """
    _check_tail(tail)
    if depth < 0:
        raise ValueError("depth must be non-negative")
    p, q = sys.p, sys.q
    if q == 0:
        depth = 0
    rho = sys.mu0
    atoms, weights, coefs = [], [], []
    c = p
    for k in range(depth + 1):
        if k > 0:
            rho = next_rho(sys.ifs, rho, prune_tol)
            c *= q
        atoms.append(rho.atoms)
        weights.append(c * rho.weights)
        coefs.append(c)
    raw = math.fsum(coefs)
    if tail == "deepest" and q > 0:
        weights[-1] = weights[-1] / p
    measure = _merged(np.concatenate(atoms), np.concatenate(weights), raw)
    return TruncatedOrbital(
        measure=measure,
        depth=depth,
        tail_bound=q ** (depth + 1),
        raw_mass=raw,
        route="neumann",
        tail=tail,
    )


def truncate(sys: CondensationSystem, depth: int, route: str = "enum", **kw) -> TruncatedOrbital:
    if route in ("enum", "enumeration"):
        return enumerate_series(sys, depth, **kw)
    if route in ("neumann", "iteration"):
        return neumann_iterate(sys, depth, **kw)
    raise ValueError(f"unknown route {route!r}")
