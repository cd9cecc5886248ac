"""Numerical laboratory for 1D Dirichlet spectra and Fermi statistics.

Modules: potentials (bounded V families), spectrum (finite-difference
eigensolver), ensembles (canonical and grand-canonical log-partition
functions with error bounds), asymptotics (theorem-witness sweeps), cli.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import CapacityError, ConfigError
from .potentials import (
    PotentialSpec,
    constant,
    cosine,
    evaluate,
    load_tabulated,
    square_well,
    sup_norm,
    tabulated,
    zero,
)
from .spectrum import (
    Grid,
    Spectrum,
    compute_spectrum,
    counting_function,
    discrete_free_eigenvalue,
    free_eigenvalue,
    perturbation_gap,
    suggest_grid_size,
)
from .ensembles import (
    CanonicalResult,
    GrandResult,
    ThermoParams,
    canonical_log_z,
    canonical_log_z_bruteforce,
    free_grand_log_xi_limit,
    grand_canonical_consistency_check,
    grand_log_xi,
    spectrum_from_eigenvalues,
)
from .asymptotics import (
    SweepRow,
    SweepTable,
    est1_check,
    theorem1_sweep,
    theorem2_sweep,
    theorem3_sweep,
    weyl_table,
)

__all__ = [
    "CapacityError",
    "ConfigError",
    "PotentialSpec",
    "constant",
    "cosine",
    "evaluate",
    "load_tabulated",
    "square_well",
    "sup_norm",
    "tabulated",
    "zero",
    "Grid",
    "Spectrum",
    "compute_spectrum",
    "counting_function",
    "discrete_free_eigenvalue",
    "free_eigenvalue",
    "perturbation_gap",
    "suggest_grid_size",
    "CanonicalResult",
    "GrandResult",
    "ThermoParams",
    "canonical_log_z",
    "canonical_log_z_bruteforce",
    "free_grand_log_xi_limit",
    "grand_canonical_consistency_check",
    "grand_log_xi",
    "spectrum_from_eigenvalues",
    "SweepRow",
    "SweepTable",
    "est1_check",
    "theorem1_sweep",
    "theorem2_sweep",
    "theorem3_sweep",
    "weyl_table",
    "__version__",
]
