"""Numerical toolkit for discrete exponential dichotomies, neutral delay
difference systems, and almost automorphic sequence testing."""

__version__ = "0.1.0"

from .core import (
    ConfigError,
    GeneratorSpec,
    SequenceWindow,
    SystemSpec,
    TimeWindow,
    WindowError,
    eval_generator,
    mat_norm,
    residual,
    sample_generator,
    sup_norm,
    validate_system,
)
from .transition import SingularCoefficient, TransitionKernel, putzer_constant
from .dichotomy import (
    AmbiguousSplit,
    ConvergenceTrace,
    DichotomyCertificate,
    GrowthReport,
    NoDichotomy,
    PremiseFailed,
    SummabilityWitness,
    VerificationReport,
    bounded_solution_test,
    certify,
    estimate_constants,
    estimate_projector,
    shifted_kernel_limit,
    stable_kernel,
    summability_bound_check,
    unstable_kernel,
    verify_certificate,
)
from .operator import (
    TruncationPlan,
    apply_H,
    apply_H1,
    apply_H2,
    auto_truncation,
    lambda_cap,
    lambda_term,
    plan_truncation,
    tail_bound,
)
from .solver import (
    ConditionReport,
    MaxIterExceeded,
    NotContractive,
    SolveDiagnostics,
    condition_report,
    solve_fixed_point,
    verify_solution,
)
from .aa import (
    BochnerResult,
    ClassificationResult,
    ShiftPlan,
    bochner_test,
    bohr_epsilon_periods,
    classify,
    convergent_denominators,
    fibonacci_numbers,
    simultaneous_shifts,
)
from .config import (
    RunConfig,
    build_kernel,
    build_system,
    load_config,
    parse_config,
    serialize_config,
)
from .systems import golden_theta, repro_ex1_system, repro_ex2_system
