import itertools

import numpy as np
import pytest

from evaluation.evaluators import (DetectionEvaluator, RecoveryEvaluator, correlations, count_matches,
                                   epsilon_E, epsilon_M, epsilon_S, greedy_pairs, precision_recall)
from evaluation.utils import EvalRecord
from infer.errors import ShapeError


def brute_force_matches(truth, est, w):
    """Largest injective truth->est assignment within the window, by enumeration."""
    best = 0
    for k in range(min(len(truth), len(est)), 0, -1):
        for t_sub in itertools.combinations(truth, k):
            for e_perm in itertools.permutations(est, k):
                if all(abs(a - b) <= w for a, b in zip(t_sub, e_perm)):
                    return k
    return best


def test_precision_recall_example():
    p, r = precision_recall([10, 50], [11, 49, 80], w=3)
    assert p == pytest.approx(2 / 3)
    assert r == 1.0


def test_precision_recall_needs_maximum_matching():
    # greedy nearest matching pairs 4 with 5 and leaves 2 and 7 unmatched
    assert count_matches([2, 5], [4, 7], w=2) == 2
    assert precision_recall([2, 5], [4, 7], w=2) == (1.0, 1.0)


def test_precision_recall_empty_sets():
    assert precision_recall([], [], w=3) == (1.0, 1.0)
    assert precision_recall([5], [], w=3) == (1.0, 0.0)
    assert precision_recall([], [5], w=3) == (0.0, 1.0)


def test_precision_recall_rejects_negative_window():
    with pytest.raises(ValueError):
        precision_recall([1], [1], w=-1)


def test_count_matches_against_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(50):
        truth = sorted(rng.choice(40, size=rng.integers(0, 5), replace=False).tolist())
        est = sorted(rng.choice(40, size=rng.integers(0, 5), replace=False).tolist())
        w = int(rng.integers(0, 5))
        expected = brute_force_matches(truth, est, w)
        assert count_matches(truth, est, w) == expected
        assert count_matches(est, truth, w) == expected


def test_detection_evaluator_reports_every_type():
    truth = EvalRecord(cpt0=[10], cpt1=[30])
    est = EvalRecord(cpt0=[11], cpt1=[10, 60])
    out = DetectionEvaluator(w=2).evaluate_single(truth, est)
    assert out["ao_precision"] == 1.0 and out["ao_recall"] == 1.0
    assert out["ls_precision"] == 0.0 and out["ls_recall"] == 0.0
    assert out["all_recall"] == 0.5
    assert out["all_precision"] == pytest.approx(1 / 3)


def test_epsilon_E_example():
    assert epsilon_E(np.array([1.0, 1.0]), np.array([2.0, 3.0])) == 2.5
    with pytest.raises(ShapeError):
        epsilon_E(np.ones(2), np.ones(3))


def test_epsilon_S_ignores_sign_and_order():
    rng = np.random.default_rng(1)
    S = rng.normal(size=(2, 50))
    S_hat = np.vstack([rng.normal(size=50), -3.0 * S[1] + 1.0, 2.0 * S[0]])
    assert epsilon_S(S, S_hat) == pytest.approx(0.0, abs=1e-12)


def test_epsilon_S_constant_rows_count_as_uncorrelated():
    S = np.vstack([np.ones(10), np.arange(10.0)])
    rho = correlations(S, S)
    assert rho[0, 0] == 0.0
    assert epsilon_S(S, S) == pytest.approx(0.5)


def test_epsilon_S_shape_checks():
    with pytest.raises(ShapeError):
        epsilon_S(np.ones((3, 10)), np.ones((2, 10)))
    with pytest.raises(ShapeError):
        epsilon_S(np.ones((2, 10)), np.ones((2, 11)))


def test_greedy_pairs_take_largest_first():
    rho = np.array([[0.9, 0.95],
                    [0.1, -0.2]])
    assert greedy_pairs(rho) == [(0, 1, 0.95), (1, 0, 0.1)]


def test_epsilon_M_is_zero_for_non_degenerate_rows():
    rng = np.random.default_rng(2)
    M = rng.normal(size=(6, 3))
    assert epsilon_M(M, M) == 0.0
    for _ in range(100):
        Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        assert epsilon_M(M, M @ Q) == pytest.approx(0.0, abs=1e-12)


def test_epsilon_M_counts_constant_rows():
    M = np.array([[1.0, 2.0], [3.0, 3.0], [0.0, 1.0]])
    M_hat = np.array([[1.0, 2.0], [3.0, 4.0], [0.0, 1.0]])
    assert epsilon_M(M, M_hat) == pytest.approx(-1.0 / 9.0)


def test_epsilon_M_trace_matches_dense_formula():
    rng = np.random.default_rng(5)

    def standardize_row(row):
        c = row - row.mean()
        n = np.sqrt(sum(v * v for v in c))
        return c / n if n > 0 else c

    for P, r, K in [(5, 3, 3), (8, 2, 4), (6, 4, 2)]:
        M, M_hat = rng.normal(size=(P, r)), rng.normal(size=(P, K))
        # constant rows standardize to zero and are what the trace form sees
        M[rng.random(P) < 0.3] = 1.5
        M_hat[rng.random(P) < 0.3] = -0.5
        A = np.array([standardize_row(row) for row in M])
        B = np.array([standardize_row(row) for row in M_hat])
        AAt = np.array([[A[i] @ A[j] for j in range(P)] for i in range(P)])
        BBt = np.array([[B[i] @ B[j] for j in range(P)] for i in range(P)])
        expected = sum(AAt[i, i] - BBt[i, i] for i in range(P)) / P ** 2
        assert epsilon_M(M, M_hat) == pytest.approx(expected, abs=1e-12)


def test_epsilon_M_squared_matches_dense_formula():
    rng = np.random.default_rng(3)
    M, M_hat = rng.normal(size=(5, 3)), rng.normal(size=(5, 3))

    def standardize(A):
        A = A - A.mean(axis=1, keepdims=True)
        return A / np.linalg.norm(A, axis=1, keepdims=True)

    A, B = standardize(M), standardize(M_hat)
    expected = np.linalg.norm(A @ A.T - B @ B.T, "fro") ** 2 / 25
    assert epsilon_M(M, M_hat, squared=True) == pytest.approx(expected)
    assert epsilon_M(M, M, squared=True) == 0.0


def test_recovery_evaluator_applicability():
    rng = np.random.default_rng(4)
    full = EvalRecord(cpt0=[], cpt1=[], M=rng.normal(size=(4, 2)), S=rng.normal(size=(2, 20)),
                      psi=np.ones(4))
    bare = EvalRecord(cpt0=[], cpt1=[])
    evaluator = RecoveryEvaluator()
    assert evaluator.applicable(full, full)
    assert not evaluator.applicable(full, bare)
    out = evaluator.evaluate_single(full, full)
    assert out["epsilon_E"] == 0.0
    assert out["epsilon_S"] == pytest.approx(0.0, abs=1e-12)


def test_evaluate_dataset_over_files(tmp_path):
    from toolkits.csv_io import write_changes

    truth = write_changes(tmp_path / "truth.csv", [10], [30])
    est = write_changes(tmp_path / "est.csv", [11], [40])
    results = DetectionEvaluator(w=3).evaluate_dataset([(truth, est), (truth, truth)])
    assert [r["ao_recall"] for r in results] == [1.0, 1.0]
    assert [r["ls_recall"] for r in results] == [0.0, 1.0]
    # changes files carry no matrices
    assert RecoveryEvaluator().evaluate_dataset([(truth, est)]) == []
