"""Minkowski symmetrization of convex bodies through their support functions."""

from .bodies import (
    CallableBody,
    EuclideanBall,
    EvaluationModeError,
    Exact,
    IntersectionBody,
    MonteCarlo,
    PolytopeHull,
    ScaledCrossPolytope,
    SupportBody,
    SymmetrizedBody,
    body_from_dict,
    body_to_dict,
    cross_dual_norm,
    kt_dual_norm,
    symmetrize,
    symmetrize_basis,
)
from .estimators import (
    DegenerateBodyError,
    EstimatorConfig,
    circumradius,
    diameter,
    mean_width,
    sandwich,
    symmetry_defect,
    unconditionality_defect,
)
from .norms import inf_conv_norm, psi_alpha_estimate, tail_l2_surrogate
from .pipeline import (
    Schedule,
    StageSpec,
    decay_experiment,
    run_pipeline,
    schedule_random6,
    schedule_walsh5,
)
from .stats import EstimateWithCI

__version__ = "0.1.0"

__all__ = [
    "CallableBody",
    "DegenerateBodyError",
    "EstimateWithCI",
    "EstimatorConfig",
    "EuclideanBall",
    "EvaluationModeError",
    "Exact",
    "IntersectionBody",
    "MonteCarlo",
    "PolytopeHull",
    "Schedule",
    "ScaledCrossPolytope",
    "StageSpec",
    "SupportBody",
    "SymmetrizedBody",
    "body_from_dict",
    "body_to_dict",
    "circumradius",
    "cross_dual_norm",
    "decay_experiment",
    "diameter",
    "inf_conv_norm",
    "kt_dual_norm",
    "mean_width",
    "psi_alpha_estimate",
    "run_pipeline",
    "sandwich",
    "schedule_random6",
    "schedule_walsh5",
    "symmetrize",
    "symmetrize_basis",
    "symmetry_defect",
    "tail_l2_surrogate",
    "unconditionality_defect",
]
