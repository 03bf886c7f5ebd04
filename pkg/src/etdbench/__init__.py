"""Pseudo-spectral ETDRK solvers and a procedural PDE-emulation benchmark.

The package is organized around five layers:

* :mod:`etdbench.spectral` -- grids, real-FFT transforms, derivative
  diagonals, dealiasing,
* :mod:`etdbench.etdrk` -- exponential time differencing steppers,
* :mod:`etdbench.operators` -- linear/nonlinear operator builders,
* :mod:`etdbench.scenarios` -- the named-dynamics registry, initial
  conditions, and deterministic dataset generation,
* :mod:`etdbench.metrics`, :mod:`etdbench.training`,
  :mod:`etdbench.export`, :mod:`etdbench.cli` -- rollout metrics, the
  unrolled-training harness, and the command-line tooling on top.
"""

from .spectral import (
    Grid,
    WavenumberGrid,
    DealiasMask,
    forward_transform,
    inverse_transform,
    build_wavenumber_grid,
    derivative_diagonal,
    dealias_mask,
    conjugate_weights,
)
from .etdrk import (
    EtdrkCoefficients,
    Stepper,
    TrajectoryDiverged,
    phi_coefficients,
    make_stepper,
    rollout,
)
from .operators import (
    DiagonalLinearOperator,
    UnbalancedAdvection,
    DiagonalDiffusion,
    AnisotropicDiffusion,
    MixedDispersion,
    MixedHyperDiffusion,
    Convection,
    SingleChannelConvection,
    GradientNorm,
    Polynomial,
    VorticityConvection,
    GeneralNonlinearity,
    GrayScottReaction,
    build_isotropic_linear,
    build_spatially_mixed_linear,
    build_nonlinear,
    inverse_laplacian,
)
from .scenarios import (
    DifficultyCoefficients,
    NormalizedCoefficients,
    IcConfig,
    ScenarioSpec,
    TrajectorySet,
    difficulty_to_normalized,
    normalized_to_difficulty,
    registry_list,
    resolve_scenario,
    build_stepper_from_spec,
    sample_initial_condition,
    derive_sample_seed,
    generate_dataset,
)
from .metrics import (
    MetricDescriptor,
    RolloutReport,
    metric_from_name,
    compute_metric,
    correlation,
    rollout_metrics,
)
from .training import (
    Emulator,
    LinearStencilEmulator,
    IdentityEmulator,
    UnrollConfig,
    CorrectionLayout,
    unrolled_objective,
    diverted_chain_objective,
    fou_stencil,
    train_newton,
    NewtonError,
    compose_correction,
)

__version__ = "0.1.0"
