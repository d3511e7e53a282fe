"""First-hit probabilities and trace-process generators for one-dimensional
Lévy processes, computed from the renormalized zero resolvent."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    ClassificationUnavailable,
    ConfigError,
    ConsistencyError,
    DomainError,
    ExtrapolationError,
    InvariantError,
    LevyHitError,
    NumericalError,
    QuadratureError,
    SolverError,
    UnsupportedFamily,
    ValidationFailure,
)
from .hitting import (
    GreenMatrix,
    HittingDistribution,
    HittingProblem,
    PointSet,
    green_matrix,
    hitting_distribution,
    multi_point,
    pairwise_matrix,
    single_point,
    two_point,
)
from .models import (
    BrownianMotion,
    CustomExponent,
    ProcessModel,
    Recurrence,
    SpectrallyNegative,
    StrictlyStable,
    classify,
    closed_form_h,
    kappa,
    model_from_spec,
    psi,
    scale_function,
)
from .numerics import QuadratureConfig
from .resolvent import ResolventEvaluator
from .trace_q import (
    ExcursionVector,
    QMatrix,
    build_Q,
    closed_form_Q,
    excursion_raw_vector,
    excursion_solved_vector,
    getoor_limit_Q,
    q_diagonal,
    q_offdiagonal,
)

__all__ = [
    "BrownianMotion",
    "ClassificationUnavailable",
    "ConfigError",
    "ConsistencyError",
    "CustomExponent",
    "DomainError",
    "ExcursionVector",
    "ExtrapolationError",
    "GreenMatrix",
    "HittingDistribution",
    "HittingProblem",
    "InvariantError",
    "LevyHitError",
    "NumericalError",
    "PointSet",
    "ProcessModel",
    "QMatrix",
    "QuadratureConfig",
    "QuadratureError",
    "Recurrence",
    "ResolventEvaluator",
    "SolverError",
    "SpectrallyNegative",
    "StrictlyStable",
    "UnsupportedFamily",
    "ValidationFailure",
    "build_Q",
    "classify",
    "closed_form_Q",
    "closed_form_h",
    "excursion_raw_vector",
    "excursion_solved_vector",
    "getoor_limit_Q",
    "green_matrix",
    "hitting_distribution",
    "kappa",
    "model_from_spec",
    "multi_point",
    "pairwise_matrix",
    "psi",
    "q_diagonal",
    "q_offdiagonal",
    "scale_function",
    "single_point",
    "two_point",
]
