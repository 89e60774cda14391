"""Variational ground states and the quantum critical point of the
unbiased spin-boson model with a power-law bath.

Three nested ansatz families: the single-polaron product state, the
degenerate pair with a constant displacement profile, and their
superposition with a relaxing profile.  The top-level entry points are
``solve_sh``, ``solve_degenerate``, ``ground_state``, ``locate_alpha_c``
and ``table1_report``; ``sbqcp.cli`` exposes the same machinery as a
command-line tool.
"""

from .bath import (BathParams, DEFAULT_QUAD, DiscreteBath, QuadratureConfig,
                   bath_moment, discretize_bath, moment_table,
                   overlap_exponent_divergent, spectral_density)
from .degenerate import (DegenerateSolution, OverlapResult,
                         constant_phi_overlap, degenerate_alpha_c,
                         degenerate_energy, solve_degenerate)
from .errors import (CapExceededError, DomainError, NoSolutionError,
                     NoTransitionError, NonConvergedError, SbqcpError,
                     SingularDenominatorError, UsageError)
from .oracle import (EdInstance, EdResult, build_hamiltonian, ed_ground_state,
                     upper_bound_report, variational_energy_discrete)
from .qcp import (QcpResult, ScanRecord, energy_difference_curve,
                  locate_alpha_c, scan_alpha, table1_report)
from .sh import ShSolution, sh_alpha_c, sh_energy, solve_sh
from .superposed import (SuperposedSolution, ground_state, minimize_tau,
                         rho_asymptotic_s1, sigma_z_moments, solve_inner,
                         stationarity_residual, tau_upper_bound)

__version__ = "0.1.0"

__all__ = [
    "BathParams", "QuadratureConfig", "DiscreteBath", "DEFAULT_QUAD",
    "spectral_density", "bath_moment", "moment_table", "discretize_bath",
    "overlap_exponent_divergent",
    "ShSolution", "solve_sh", "sh_energy", "sh_alpha_c",
    "DegenerateSolution", "OverlapResult", "solve_degenerate",
    "degenerate_energy", "constant_phi_overlap", "degenerate_alpha_c",
    "SuperposedSolution", "solve_inner", "minimize_tau", "ground_state",
    "tau_upper_bound", "rho_asymptotic_s1", "sigma_z_moments",
    "stationarity_residual",
    "QcpResult", "ScanRecord", "scan_alpha", "locate_alpha_c",
    "energy_difference_curve", "table1_report",
    "EdInstance", "EdResult", "build_hamiltonian", "ed_ground_state",
    "variational_energy_discrete", "upper_bound_report",
    "SbqcpError", "DomainError", "NoSolutionError", "NoTransitionError",
    "NonConvergedError", "SingularDenominatorError", "CapExceededError",
    "UsageError",
    "__version__",
]
