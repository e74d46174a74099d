"""Online learning of stochastic dynamical environments via adaptive
Wasserstein ambiguity sets."""

from .ambiguity import (
    AmbiguitySet,
    EmpiricalDistribution,
    HistoryWindow,
    adaptive_radius,
    composite_confidence,
    drift_term_H,
    empirical_P_hat,
    empirical_Q,
    radius_epsilon,
    residual_xi,
)
from .estimator import PLearner, estimate_alpha, gamma_bound, pinv_thresholded
from .noise import NoiseModel
from .predictors import Environment, Predictor, PredictorSet, evaluate_mixture, step_environment
from .transport import DiscreteMeasure, w1_distance, w1_distance_1d

__version__ = "0.1.0"

__all__ = [
    "AmbiguitySet",
    "DiscreteMeasure",
    "EmpiricalDistribution",
    "Environment",
    "HistoryWindow",
    "NoiseModel",
    "PLearner",
    "Predictor",
    "PredictorSet",
    "adaptive_radius",
    "composite_confidence",
    "drift_term_H",
    "empirical_P_hat",
    "empirical_Q",
    "estimate_alpha",
    "evaluate_mixture",
    "gamma_bound",
    "pinv_thresholded",
    "radius_epsilon",
    "residual_xi",
    "step_environment",
    "w1_distance",
    "w1_distance_1d",
    "__version__",
]
