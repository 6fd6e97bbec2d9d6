"""fragkit: pure-breakage fragmentation toolkit.

Deterministic population-balance and log-size master-equation solvers,
exact stochastic embeddings (tagged-mass jumps and branching cascades),
a completely positive embedding check, and the coarse-grained Airy
spectral sector with mode-sum correlators.
"""

__version__ = "0.1.0"

from .airyfun import airy_ai, airy_ai_zeros
from .branching import (
    BranchingDensityEstimate,
    MonodisperseStart,
    ParticlePopulation,
    branching_correlator,
    number_density_estimate,
    simulate_branching,
)
from .kernels import (
    DaughterLaw,
    HomogeneousKernel,
    LogJumpLaw,
    SymmetricBeta,
    TabulatedDaughterLaw,
    UniformBinary,
    ValidationReport,
    breakage_rate,
    jump_moments,
    log_jump_density,
    sample_jump,
    scale_jump_law,
    validate_daughter_law,
    validity_parameters,
)
from .lindblad import (
    GeneratorMatrix,
    build_jump_generator_matrix,
    build_lindblad_diagonal_action,
    equivalence_report,
)
from .mc import CorrelationEstimate, correlation_from_counts, replica_rng
from .solvers import (
    FPCoefficients,
    GridField,
    SizeField,
    UniformGrid,
    compare_densities,
    geometric_size_grid,
    integrate_fokker_planck,
    integrate_log_master,
    km_reduce,
    mass_weighted_transform,
    resample,
    solve_pbe_number,
)
from .spectral import (
    AiryCalibration,
    AiryOperator,
    ModeCovariance,
    SpectralSector,
    TransformPair,
    airy_length,
    airy_profile,
    biorthogonal_eigs,
    build_airy_operator,
    calibrate_airy_params,
    median_log_size,
    mode_sum_correlator,
    project_grid_covariance,
    propagate_covariance_oracle,
    similarity_transform,
)
from .tagged import (
    DeltaSampler,
    DensityEstimate,
    GaussianSampler,
    TaggedEnsemble,
    TaggedTrajectory,
    ensemble_density,
    simulate_ensemble,
    simulate_tagged,
    tagged_correlator,
)
