"""Shared fixtures and dense, naive reference formulas for the sampler and detector tests."""

import itertools

import numpy as np
import pytest

from infer import config
from infer.detector import segmentation_error
from infer.model import Mode, ModelState, ObservationMatrix, ShrinkageSet


def dense_difference(N: int) -> np.ndarray:
    """D^(1): first row (1, 0, ...), then x_n - x_{n-1}."""
    return np.eye(N) - np.eye(N, k=-1)


def dense_inverse(N: int, d: int) -> np.ndarray:
    """[D^(d)]^{-1}: identity for d=0, lower-triangular ones for d=1."""
    return np.eye(N) if d == 0 else np.tril(np.ones((N, N)))


def random_shrinkage(rng: np.random.Generator, K: int, N: int) -> ShrinkageSet:
    u = lambda *shape: rng.uniform(0.5, 2.0, size=shape)  # noqa: E731
    return ShrinkageSet(tau=float(rng.uniform(0.5, 2.0)), xi=float(rng.uniform(0.5, 2.0)),
                        lambda_=u(K), eta=u(K), phi=u(N), omega=u(N), gamma=u(K, N), zeta=u(K, N))


def unit_shrinkage(K: int, N: int) -> ShrinkageSet:
    return ShrinkageSet(tau=1.0, xi=1.0, lambda_=np.ones(K), eta=np.ones(K), phi=np.ones(N),
                        omega=np.ones(N), gamma=np.ones((K, N)), zeta=np.ones((K, N)))


def random_state(seed: int, P: int, K: int, N: int, mode: Mode = Mode.FULL) -> ModelState:
    rng = np.random.default_rng(seed)
    V0 = rng.normal(size=(K, N)) if mode is Mode.FULL else np.zeros((K, N))
    return ModelState(
        M=rng.normal(size=(P, K)),
        V0=V0,
        V1=rng.normal(size=(K, N)),
        psi=rng.uniform(0.5, 2.0, size=P),
        shrink0=random_shrinkage(rng, K, N),
        shrink1=random_shrinkage(rng, K, N),
        mode=mode,
    )


def random_observations(seed: int, P: int, N: int) -> ObservationMatrix:
    return ObservationMatrix(np.random.default_rng(seed).normal(size=(P, N)))


def dense_sources(state: ModelState) -> np.ndarray:
    N = state.N
    S = state.V1 @ dense_inverse(N, 1).T
    if state.mode is Mode.FULL:
        S = S + state.V0 @ dense_inverse(N, 0).T
    return S


def naive_mixing_scale(state: ModelState) -> np.ndarray:
    c = np.empty(state.K)
    for h in range(state.K):
        c[h] = state.shrink1.tau * state.shrink1.lambda_[h]
        if state.mode is Mode.FULL:
            c[h] *= state.shrink0.tau * state.shrink0.lambda_[h]
    return c


def naive_mixing_conditional(state: ModelState, Y: np.ndarray):
    S = dense_sources(state)
    F = S @ S.T + np.linalg.inv(np.diag(naive_mixing_scale(state)))
    F_inv = np.linalg.inv(F)
    means = np.array([F_inv @ S @ Y[i] for i in range(Y.shape[0])])
    return means, F_inv


def naive_v_conditional(state: ModelState, Y: np.ndarray, d: int, n: int):
    """Mean and covariance of V^(d)_{.n} straight from the printed B^(n), C^(n) expressions."""
    N = state.N
    D_inv = dense_inverse(N, d)
    col = D_inv[:, n - 1]
    V = state.V(d)
    S_rest = dense_sources(state) - np.outer(V[:, n - 1], col)
    C = Y - state.M @ S_rest
    Psi_inv = np.diag(1.0 / state.psi)
    shrink = state.shrink(d)
    if d == 1 and n == 1:
        prior = np.full(state.K, 1.0 / config.BASELINE_PRIOR_VARIANCE)
    else:
        prior = np.array([1.0 / (shrink.phi[n - 1] * shrink.lambda_[h] * shrink.gamma[h, n - 1] * shrink.tau)
                          for h in range(state.K)])
    B = (col @ col) * (state.M.T @ Psi_inv @ state.M) + np.diag(prior)
    b = state.M.T @ Psi_inv @ C @ col
    cov = np.linalg.inv(B)
    return cov @ b, cov


def naive_global_term(state: ModelState, d: int) -> float:
    other = 1 - d
    full = state.mode is Mode.FULL
    s, so = state.shrink(d), state.shrink(other)
    total = 0.0
    for i in range(state.P):
        for h in range(state.K):
            denom = 2.0 * state.psi[i] * s.lambda_[h]
            if full:
                denom *= so.lambda_[h] * so.tau
            total += state.M[i, h] ** 2 / denom
    V = state.V(d)
    first = 1 if d == 1 else 0
    for h in range(state.K):
        for n in range(first, state.N):
            total += V[h, n] ** 2 / (2.0 * s.phi[n] * s.lambda_[h] * s.gamma[h, n])
    return total


def naive_row_term(state: ModelState, d: int) -> np.ndarray:
    other = 1 - d
    full = state.mode is Mode.FULL
    s, so = state.shrink(d), state.shrink(other)
    out = np.zeros(state.K)
    V = state.V(d)
    for h in range(state.K):
        for i in range(state.P):
            denom = 2.0 * state.psi[i] * s.tau
            if full:
                denom *= so.tau * so.lambda_[h]
            out[h] += state.M[i, h] ** 2 / denom
        for n in range(1 if d == 1 else 0, state.N):
            out[h] += V[h, n] ** 2 / (2.0 * s.phi[n] * s.gamma[h, n] * s.tau)
    return out


def exhaustive_best_subset(S_hat: np.ndarray, candidates, m: int):
    """Minimal segmentation error over all m-subsets of the candidates, by enumeration."""
    best, arg = np.inf, []
    for subset in itertools.combinations(sorted(candidates), m):
        err = segmentation_error(S_hat, subset)
        if err < best:
            best, arg = err, list(subset)
    return best, arg


@pytest.fixture
def small_full_state():
    return random_state(11, P=4, K=3, N=6, mode=Mode.FULL)


@pytest.fixture
def small_partial_state():
    return random_state(12, P=4, K=3, N=6, mode=Mode.PARTIAL)


@pytest.fixture
def small_observations():
    return random_observations(13, P=4, N=6)
