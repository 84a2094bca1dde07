"""Approximate controllability of impulsive linear evolution systems.

Closed-form mild/adjoint propagation through state jumps, assembly of the
four controllability Gramians, resolvent-based controllability tests, and
Tikhonov-regularized minimum-energy control synthesis with a built-in
terminal-error verification, on finite-dimensional (optionally spectral)
truncations.
"""

from ._backend import backend_name
from .controllability import (
    ControllabilityReport,
    ResolventProbe,
    controllability_report,
    default_epsilon_schedule,
    kalman_span_test,
    positivity_test,
    resolvent_decay,
)
from .errors import ConfigError, ImpulseCtrlError, ValidationError
from .fixtures import fixture_s1, fixture_s2, fixture_w3
from .gramian import (
    GramianSet,
    apply_M,
    apply_M_star,
    control_inner_product,
    gamma_gramian,
    gamma_tilde_gramian,
    gramian_set,
    stage_propagators,
    theta_gramian,
    theta_tilde_gramian,
)
from .model import (
    AdjointFeedbackLaw,
    ControlPair,
    DenseGenerator,
    GeneratorSpec,
    ImpulseStage,
    ImpulsiveSystem,
    PiecewiseConstantLaw,
    SpectralBlocks,
    ValidationReport,
    generator_matrix,
    jump_propagator_apply,
    piecewise_constant,
    product_propagator_apply,
    semigroup_adjoint_apply,
    semigroup_apply,
    semigroup_matrix,
    validate_control,
    validate_system,
    zero_control,
)
from .propagation import (
    Trajectory,
    adjoint_post_impulse,
    adjoint_solution,
    adjoint_solution_batch,
    control_values,
    duality_gap,
    mild_solution,
    simulate,
    state_after_impulse,
)
from .quadrature import DEFAULT_QUADRATURE, QuadratureConfig
from .synthesis import (
    SynthesisResult,
    free_final_state,
    j_epsilon,
    phi_hat,
    steer,
    steer_to_tolerance,
    synthesize_control,
)
from .wave import (
    WaveDemoResult,
    WaveImpulse,
    WaveModel,
    adjoint_trace,
    build_wave_system,
    canonical_to_wave,
    fourier_recovery,
    impulse_canonical,
    wave_demo,
    wave_to_canonical,
)

__version__ = "0.1.0"
