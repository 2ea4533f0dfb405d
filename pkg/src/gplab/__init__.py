"""Exact small-N boson dynamics against the Gross-Pitaevskii mean field,
with defect-counting diagnostics, term bounds, and error envelopes."""

from .errors import MemoryGuardError, NumericalAbort, ValidationError
from .lattice import (
    Field,
    Grid,
    InteractionSpec,
    build_grid,
    discrete_norms,
    pair_interaction_matrix,
    sample,
    scaled_interaction,
    spectral_laplacian,
)
from .manybody import (
    ManyBodyState,
    TrapSpec,
    apply_hamiltonian,
    perturbed_state,
    product_state,
    propagate_many_body,
    random_symmetric_state,
    symmetrize,
)
from .projector import (
    SectorDecomposition,
    WeightFunction,
    alpha_lambda,
    apply_p,
    apply_q,
    apply_weight,
    brute_force_sector,
    density_distances,
    m_lambda_values,
    n_hat_squared_expectation,
    n_hat_squared_qsum,
    orthonormal_completion,
    reduced_density,
    sector_decompose,
    sector_weights,
)
from .gp import (
    GpTrajectory,
    coupling_constant,
    gaussian_orbital,
    gp_energy,
    harmonic_ground_orbital,
    orbital_diagnostics,
    orthogonal_excited_orbital,
    plane_wave_orbital,
    propagate_gp,
)
from .functionals import (
    GammaBreakdown,
    alpha_derivative_check,
    delta_lambda,
    derivative_mismatch,
    fit_derivative_constant,
    fit_envelope_constant,
    fit_term_bound_constant,
    gamma_lambda,
    gamma_term_bounds,
    gronwall_envelope,
    h12_apply,
    h12_matrix,
    k_phi,
)
from .harness import (
    ExperimentConfig,
    ReportRow,
    RunReport,
    apply_override,
    default_config,
    load_config,
    parse_config_text,
    run,
    sweep,
    validate_config,
    write_report,
    write_sweep,
)

__version__ = "0.1.0"
