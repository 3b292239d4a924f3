"""Orbital measures of iterated function systems with condensation.

The orbital measure of an IFS ``{f_n; p_n}`` with condensation measure
``mu0`` and weights ``p + q = 1`` is the unique solution of
``mu = p*mu0 + q*F(mu)`` where ``F`` is the Markov operator of the IFS.
"""

from .config import SystemConfig, load_config, preset_names
from .errors import *  # noqa: F401,F403
from .export import export_cdf_csv, read_atoms_csv, read_pgm, render_density, write_atoms_csv
from .ifs import (
    IFS,
    Affine1D,
    Affine2D,
    CondensationSystem,
    NamedNonlinear,
    apply_address,
    validate_system,
)
from .measure import (
    DiscreteMeasure,
    canonicalize,
    cdf_eval,
    discretize_to_grid,
    distance,
    ks_distance,
    sliced_w1_2d,
    wasserstein1_1d,
)
from .sampler import (
    Atoms,
    PointMass,
    UniformBox,
    UniformInterval,
    block_bootstrap_ks,
    chaos_game_restart,
    empirical_measure,
    sample_orbital,
)
from .series import depth_for_tolerance, enumerate_series, neumann_iterate, tail_mass, truncate
from .transfer import condensation_step, markov_apply, pushforward
from .verify import (
    additivity_check,
    exercise_escape_study,
    fixed_point_residual,
    uniqueness_probe,
    verify_report,
)

__version__ = "0.1.0"
