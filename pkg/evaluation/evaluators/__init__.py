from .base_evaluator import BaseEvaluator
from .detection_evaluator import DetectionEvaluator, count_matches, precision_recall
from .recovery_evaluator import (RecoveryEvaluator, correlations, epsilon_E, epsilon_M, epsilon_S,
                                 greedy_pairs)

__all__ = [
    "BaseEvaluator",
    "DetectionEvaluator",
    "RecoveryEvaluator",
    "count_matches",
    "precision_recall",
    "correlations",
    "greedy_pairs",
    "epsilon_M",
    "epsilon_S",
    "epsilon_E",
]
