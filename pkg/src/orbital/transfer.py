"""Measure-level operators: push-forward, the Markov operator and the
condensation step ``nu -> p*mu0 + q*M(nu)``.

For atomic measures the push-forward ``nu o f^{-1}`` is simply the forward
image of each atom with its weight unchanged.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatch
from .ifs import IFS, CondensationSystem, MapSpec
from .measure import DiscreteMeasure, canonicalize

DEFAULT_PRUNE_TOL = 1e-15


def _check_dim(d_map: int, m: DiscreteMeasure) -> None:
    if d_map != m.dim:
        raise DimensionMismatch(f"operator acts on R^{d_map}, measure lives in R^{m.dim}")


def pushforward(f: MapSpec, nu: DiscreteMeasure) -> DiscreteMeasure:
    _check_dim(f.dim, nu)
    return DiscreteMeasure(f(nu.atoms), nu.weights, dim=nu.dim, normalize=False)


def markov_apply(ifs: IFS, nu: DiscreteMeasure) -> DiscreteMeasure:
    """``sum_n p_n * f_n(nu)``; blocks are concatenated in map order, unmerged."""
    _check_dim(ifs.dim, nu)
    atoms = np.concatenate([f(nu.atoms) for f in ifs.maps])
    weights = np.concatenate([pn * nu.weights for pn in ifs.probs])
    return DiscreteMeasure(atoms, weights, dim=nu.dim)


def prune(m: DiscreteMeasure, tol: float) -> DiscreteMeasure:
    """Drop atoms lighter than ``tol`` and rescale the rest proportionally.

    The heaviest atom always survives.
    """
    if tol <= 0:
        return m
    keep = m.weights >= tol
    if keep.all():
        return m
    if not keep.any():
        keep[np.argmax(m.weights)] = True
    return DiscreteMeasure.from_mass(m.atoms[keep], m.weights[keep], dim=m.dim)


def rho_n(sys: CondensationSystem, n: int, prune_tol: float = DEFAULT_PRUNE_TOL) -> DiscreteMeasure:
    """``n``-th Markov power of ``mu0``, merged and pruned after every step."""
    if n < 0:
        raise ValueError("n must be non-negative")
    rho = sys.mu0
    for _ in range(n):
        rho = next_rho(sys.ifs, rho, prune_tol)
    return rho


def next_rho(ifs: IFS, rho: DiscreteMeasure, prune_tol: float = DEFAULT_PRUNE_TOL) -> DiscreteMeasure:
    return prune(canonicalize(markov_apply(ifs, rho)), prune_tol)


def condensation_step(sys: CondensationSystem, nu: DiscreteMeasure, prune_tol: float = 0.0) -> DiscreteMeasure:
    """``p*mu0 + q*M(nu)`` as one merged, normalized measure."""
    _check_dim(sys.dim, nu)
    if sys.q == 0:
        return sys.mu0
    moved = markov_apply(sys.ifs, nu)
    atoms = np.concatenate([sys.mu0.atoms, moved.atoms])
    weights = np.concatenate([sys.p * sys.mu0.weights, sys.q * moved.weights])
    out = canonicalize(DiscreteMeasure(atoms, weights, dim=nu.dim))
    return prune(out, prune_tol)


def total_mass(m: DiscreteMeasure) -> float:
    return math.fsum(m.weights)
