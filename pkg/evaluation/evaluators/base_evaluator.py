from abc import ABC, abstractmethod
from typing import Any, Dict, Iterable, List, Tuple

from ..utils import EvalRecord, load_estimate, load_truth


class BaseEvaluator(ABC):
    """Abstract base class for all evaluators."""

    name: str = "base"

    @abstractmethod
    def evaluate_single(self, truth: EvalRecord, estimate: EvalRecord) -> Dict[str, Any]:
        """Evaluate one estimate against its ground truth."""
        pass

    def applicable(self, truth: EvalRecord, estimate: EvalRecord) -> bool:
        return True

    def evaluate_dataset(self, pairs: Iterable[Tuple[str, str]]) -> List[Dict[str, Any]]:
        """Evaluate (truth path, estimate path) pairs; inapplicable pairs are skipped."""
        results = []
        for truth_path, est_path in pairs:
            truth, estimate = load_truth(truth_path), load_estimate(est_path)
            if self.applicable(truth, estimate):
                results.append(self.evaluate_single(truth, estimate))
        return results
