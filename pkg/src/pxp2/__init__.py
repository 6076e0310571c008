"""Exact diagonalization and quench dynamics for the constrained (PXP)^2 chain."""

from .basis import (
    BoundaryCondition,
    ConstrainedBasis,
    FullBasis,
    SpinConfiguration,
    dimension,
    enumerate_states,
    is_valid,
    named_state,
)
from .errors import (
    ConvergenceError,
    ResourceLimitError,
    SoftSpinDomainError,
    StiffnessError,
    SymmetryViolationError,
    UnsupportedBoundaryError,
)
from .observables import (
    EntanglementResult,
    LevelStatisticsResult,
    OrderParameters,
    SpectralDensityResult,
    apply_sigma_x_k,
    correlation,
    eigenstate_overlaps,
    entanglement_entropy,
    level_statistics,
    lowest_excitation,
    order_parameters,
    reference_spacing_cdf,
    reference_spacing_pdf,
    spectral_density,
    staggered_contrast,
)
from .operators import (
    ModelParameters,
    SparseOperator,
    build_deformed,
    build_lmg,
    build_pxp,
    build_pxp2,
    build_sublattice_lmg,
    build_symmetry_breaking,
    effective_coupling,
    projected_polarized_state,
    projected_sigma_x,
)
from .quench import (
    QuenchSpec,
    TimeSeries,
    growth_rate_scan,
    linear_growth_fit,
    log_growth_fit,
    run_quench,
)
from .softspin import (
    DispersionResult,
    SoftSpinSolution,
    bandwidth,
    closed_form_multipliers,
    dispersion,
    resonance_prediction,
    solve_constraints,
)
from .solvers import EigenDecomposition, evolve, full_spectrum, ground_state
from .state import StateVector
from .symmetry import (
    SymmetrySector,
    build_sectors,
    find_sector,
    momentum_labels,
    project_operator,
    project_state,
    sector_summary,
)

__version__ = "0.1.0"
