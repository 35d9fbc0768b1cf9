from typing import Any, Dict, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from infer import config

from ..utils import EvalRecord
from .base_evaluator import BaseEvaluator


def count_matches(truth: Sequence[int], est: Sequence[int], w: int) -> int:
    """
    Size of a maximum one-to-one matching between truth and estimates where a
    pair may match only if the indices differ by at most w.
    """
    if len(truth) == 0 or len(est) == 0:
        return 0
    t = np.asarray(truth, dtype=float)[:, None]
    e = np.asarray(est, dtype=float)[None, :]
    dist = np.abs(t - e)
    # any infeasible pair costs more than all feasible pairs together
    infeasible = w * min(dist.shape) + 1.0
    cost = np.where(dist <= w, dist, infeasible)
    rows, cols = linear_sum_assignment(cost)
    return int(np.sum(dist[rows, cols] <= w))


def precision_recall(truth: Sequence[int], est: Sequence[int], w: int) -> Tuple[float, float]:
    if w < 0:
        raise ValueError(f"window must be nonnegative, got {w}")
    matched = count_matches(truth, est, w)
    precision = matched / len(est) if len(est) else 1.0
    recall = matched / len(truth) if len(truth) else 1.0
    return precision, recall


class DetectionEvaluator(BaseEvaluator):
    name = "detection"

    def __init__(self, w: int = config.DEFAULT_WINDOW):
        self.w = w

    def evaluate_single(self, truth: EvalRecord, estimate: EvalRecord) -> Dict[str, Any]:
        out: Dict[str, Any] = {"w": self.w}
        for label, t, e in (("ao", truth.cpt0, estimate.cpt0),
                            ("ls", truth.cpt1, estimate.cpt1),
                            ("all", sorted(truth.cpt0 + truth.cpt1), sorted(estimate.cpt0 + estimate.cpt1))):
            p, r = precision_recall(t, e, self.w)
            out[f"{label}_precision"] = p
            out[f"{label}_recall"] = r
        return out
