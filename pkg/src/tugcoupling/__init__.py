"""Tug-of-war dynamic programming solvers, coupled game simulation, and
numerical checks of the matrix identities behind reflection-coupling and
doubling-of-variables regularity arguments."""

from .dpp import ValueField, dpp_apply, dpp_solve, expansion_check, p_laplacian_eval
from .errors import *  # noqa: F401,F403
from .geometry import DomainSpec, GameParams, GridDomain, alpha_beta, ball_neighborhood, build_grid
from .matrixlab import (ComparisonFn, SpectralReport, coefficient_matrix_A, comparison_hessian,
                        infinity_matrix, lemma_negativity_check, m_squared_formula, projection_matrix,
                        quadratic_mean_identity_check, reflection_matrix, spectral_analysis,
                        trace_product)
from .regularity import (CertificateReport, HolderReport, Region, calibrate_C,
                         comparison_gap_search, holder_seminorm, ishii_lions_certificate)
from .simulate import (CoupledState, CouplingRule, Status, coupled_step, coupling_bound_estimate,
                       greedy_strategies_from_value, simulate_game)

__version__ = "0.1.0"
