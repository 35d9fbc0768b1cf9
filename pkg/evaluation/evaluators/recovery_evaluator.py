"""Recovery errors for the mixing matrix, sources and noise variances."""

from typing import Any, Dict, List, Tuple

import numpy as np

from infer.errors import ShapeError

from ..utils import EvalRecord
from .base_evaluator import BaseEvaluator


def _center_scale_rows(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    A = A - A.mean(axis=1, keepdims=True)
    norm = np.linalg.norm(A, axis=1, keepdims=True)
    return A / np.where(norm > 0, norm, 1.0)


def epsilon_M(M: np.ndarray, M_hat: np.ndarray, squared: bool = False) -> float:
    """
    (1/P^2) Tr(M M^T - M_hat M_hat^T) after centering rows and scaling them to
    unit norm. squared=True gives (1/P^2) ||M M^T - M_hat M_hat^T||_F^2 on the
    same standardized rows.

    With unit-norm rows the trace form only counts rows that are constant
    (and so left at zero) in one matrix but not the other.
    """
    if M.shape[0] != M_hat.shape[0]:
        raise ShapeError(f"row counts differ: {M.shape[0]} vs {M_hat.shape[0]}")
    P = M.shape[0]
    A, B = _center_scale_rows(M), _center_scale_rows(M_hat)
    D = A @ A.T - B @ B.T
    if squared:
        return float(np.sum(D * D) / P ** 2)
    return float(np.trace(D) / P ** 2)


def correlations(S: np.ndarray, S_hat: np.ndarray) -> np.ndarray:
    """r x K Pearson correlations between rows; constant rows correlate 0 with everything."""
    A = np.asarray(S, dtype=float)
    B = np.asarray(S_hat, dtype=float)
    A = A - A.mean(axis=1, keepdims=True)
    B = B - B.mean(axis=1, keepdims=True)
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    denom = np.outer(na, nb)
    rho = np.divide(A @ B.T, denom, out=np.zeros(denom.shape), where=denom > 0)
    return np.clip(rho, -1.0, 1.0)


def greedy_pairs(rho: np.ndarray) -> List[Tuple[int, int, float]]:
    """Repeatedly take the largest remaining |rho|, removing its row and column."""
    work = np.abs(rho).copy()
    pairs = []
    for _ in range(rho.shape[0]):
        i, j = np.unravel_index(np.argmax(work), work.shape)
        pairs.append((int(i), int(j), float(rho[i, j])))
        work[i, :] = -1.0
        work[:, j] = -1.0
    return pairs


def epsilon_S(S: np.ndarray, S_hat: np.ndarray) -> float:
    r, K = S.shape[0], S_hat.shape[0]
    if K < r:
        raise ShapeError(f"estimate has {K} sources, fewer than the {r} true ones")
    if S.shape[1] != S_hat.shape[1]:
        raise ShapeError(f"source lengths differ: {S.shape[1]} vs {S_hat.shape[1]}")
    pairs = greedy_pairs(correlations(S, S_hat))
    return float(np.mean([1.0 - abs(rho) for _, _, rho in pairs]))


def epsilon_E(psi: np.ndarray, psi_hat: np.ndarray) -> float:
    psi = np.asarray(psi, dtype=float)
    psi_hat = np.asarray(psi_hat, dtype=float)
    if psi.shape != psi_hat.shape:
        raise ShapeError(f"noise vectors differ in shape: {psi.shape} vs {psi_hat.shape}")
    return float(np.mean((psi - psi_hat) ** 2))


class RecoveryEvaluator(BaseEvaluator):
    name = "recovery"

    def __init__(self, squared_M: bool = False):
        self.squared_M = squared_M

    def applicable(self, truth: EvalRecord, estimate: EvalRecord) -> bool:
        return truth.has_matrices() and estimate.has_matrices()

    def evaluate_single(self, truth: EvalRecord, estimate: EvalRecord) -> Dict[str, Any]:
        return {
            "epsilon_M": epsilon_M(truth.M, estimate.M, squared=self.squared_M),
            "epsilon_S": epsilon_S(truth.S, estimate.S),
            "epsilon_E": epsilon_E(truth.psi, estimate.psi),
        }
