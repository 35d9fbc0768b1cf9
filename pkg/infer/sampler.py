"""
Full-conditional updates and Gibbs sweeps.

Every update has a matching *_conditional function that returns the exact
distribution parameters without drawing, so that tests can compare them to
naive dense formulas. Inverse-gamma parameters are (shape, scale) with
density ~ x^{-shape-1} exp(-scale/x).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular

from . import config
from .errors import IllConditionedError
from .model import (DiffKind, DiffOperator, Mode, ModelState, ObservationMatrix,
                    compose_sources, inverse_gamma, v_prior_variance)

logger = logging.getLogger(__name__)


@dataclass
class SamplerSettings:
    jitter: float = config.JITTER_SCALE
    max_doublings: int = config.JITTER_DOUBLINGS
    scale_floor: float = config.SCALE_FLOOR
    scale_ceil: float = config.SCALE_CEIL
    # Use the exact psi conditional implied by the Psi-scaled mixing prior.
    couple_noise_prior: bool = False
    baseline_variance: float = config.BASELINE_PRIOR_VARIANCE
    progress_every: int = config.PROGRESS_EVERY


DEFAULT_SETTINGS = SamplerSettings()


@dataclass(frozen=True)
class SweepPlan:
    """Fixed scan order; every parameter of the state appears exactly once."""
    steps: Tuple[str, ...] = field(default_factory=tuple)

    FULL_STEPS = ("mixing", "noise", "v1", "v0", "shrinkage1", "shrinkage0")
    PARTIAL_STEPS = ("mixing", "noise", "v1", "shrinkage1")

    @classmethod
    def for_mode(cls, mode: Mode) -> "SweepPlan":
        return cls(cls.FULL_STEPS if Mode(mode) is Mode.FULL else cls.PARTIAL_STEPS)


def _values(Y) -> np.ndarray:
    return Y.values if isinstance(Y, ObservationMatrix) else np.asarray(Y, dtype=float)


def _check_d(state: ModelState, d: int):
    if d not in (0, 1):
        raise ValueError(f"change type must be 0 or 1, got {d}")
    if d == 0 and state.mode is Mode.PARTIAL:
        raise ValueError("the partial model has no additive-outlier component (d=0)")


def _horseshoe_columns(state: ModelState, d: int) -> np.ndarray:
    """1.0 for columns of V^(d) under the horseshoe, 0.0 for the V1 baseline column."""
    mask = np.ones(state.N)
    if d == 1:
        mask[0] = 0.0
    return mask


def _clip(x, settings: SamplerSettings):
    return np.clip(x, settings.scale_floor, settings.scale_ceil)


def _factorize(precision: np.ndarray, label: str, settings: SamplerSettings) -> np.ndarray:
    """Lower Cholesky factor of a precision matrix, escalating diagonal jitter before giving up."""
    sym = 0.5 * (precision + precision.T)
    try:
        return cholesky(sym, lower=True)
    except (LinAlgError, ValueError):
        pass
    K = sym.shape[0]
    jitter = settings.jitter * abs(np.trace(sym)) / K
    for _ in range(settings.max_doublings + 1):
        try:
            return cholesky(sym + jitter * np.eye(K), lower=True)
        except (LinAlgError, ValueError):
            jitter *= 2.0
    try:
        min_eig = float(np.linalg.eigvalsh(sym)[0])
    except (LinAlgError, ValueError):
        min_eig = float("nan")
    raise IllConditionedError(label, min_eig)


def _draw_gaussian(precision: np.ndarray, linear: np.ndarray, rng: np.random.Generator,
                   label: str, settings: SamplerSettings) -> np.ndarray:
    """Draw from N(B^{-1} b, B^{-1}) given precision B and linear term b."""
    L = _factorize(precision, label, settings)
    mean = cho_solve((L, True), linear)
    z = rng.standard_normal(linear.shape)
    return mean + solve_triangular(L.T, z, lower=False)


def _tau_product(state: ModelState, exclude: Optional[int] = None) -> float:
    t = 1.0
    for d in (0, 1):
        if d == exclude or (d == 0 and state.mode is Mode.PARTIAL):
            continue
        t *= state.shrink(d).tau
    return t


def _lambda_product(state: ModelState, exclude: Optional[int] = None) -> np.ndarray:
    lam = np.ones(state.K)
    for d in (0, 1):
        if d == exclude or (d == 0 and state.mode is Mode.PARTIAL):
            continue
        lam = lam * state.shrink(d).lambda_
    return lam


# ---------------------------------------------------------------------------
# Mixing matrix and noise
# ---------------------------------------------------------------------------

def mixing_precision(state: ModelState, S: Optional[np.ndarray] = None) -> np.ndarray:
    """F = S S^T + diag(tau0 tau1 lambda0 lambda1)^{-1} (single hierarchy in partial mode)."""
    if S is None:
        S = compose_sources(state)
    return S @ S.T + np.diag(1.0 / state.mixing_scale())


def mixing_conditional(state: ModelState, Y) -> Tuple[np.ndarray, np.ndarray]:
    """Row means F^{-1} S Y_i (as a P x K array) and F^{-1}; row i has covariance psi_i F^{-1}."""
    y = _values(Y)
    S = compose_sources(state)
    L = _factorize(mixing_precision(state, S), "F", DEFAULT_SETTINGS)
    means = cho_solve((L, True), S @ y.T).T
    F_inv = cho_solve((L, True), np.eye(state.K))
    return means, F_inv


def update_mixing(state: ModelState, Y, rng: np.random.Generator,
                  settings: SamplerSettings = DEFAULT_SETTINGS) -> ModelState:
    y = _values(Y)
    S = compose_sources(state)
    L = _factorize(mixing_precision(state, S), "F", settings)
    means = cho_solve((L, True), S @ y.T)
    z = rng.standard_normal((state.K, state.P))
    noise = solve_triangular(L.T, z, lower=False) * np.sqrt(state.psi)[None, :]
    state.M = (means + noise).T
    return state


def noise_conditional(state: ModelState, Y,
                      settings: SamplerSettings = DEFAULT_SETTINGS) -> Tuple[float, np.ndarray]:
    y = _values(Y)
    resid = y - state.M @ compose_sources(state)
    shape = 1.0 + state.N / 2.0
    scale = 1.0 + 0.5 * np.sum(resid * resid, axis=1)
    if settings.couple_noise_prior:
        shape += state.K / 2.0
        scale = scale + np.sum(state.M ** 2 / (2.0 * state.mixing_scale()[None, :]), axis=1)
    return shape, scale


def update_noise(state: ModelState, Y, rng: np.random.Generator,
                 settings: SamplerSettings = DEFAULT_SETTINGS) -> ModelState:
    shape, scale = noise_conditional(state, Y, settings)
    state.psi = inverse_gamma(shape, scale, rng)
    return state


# ---------------------------------------------------------------------------
# Change matrices V0 / V1
# ---------------------------------------------------------------------------

def _diff_operator(state: ModelState, d: int) -> DiffOperator:
    return DiffOperator(DiffKind(d), state.N)


def v_column_terms(state: ModelState, Y, d: int, n: int,
                   settings: SamplerSettings = DEFAULT_SETTINGS) -> Tuple[np.ndarray, np.ndarray]:
    """
    Precision B^(n) and linear term M^T Psi^{-1} C^(n) D^{-1}_{.n} for column n (1-based).

    For d=1 the product with D^{-1}_{.n} is the suffix sum of C^(n) over columns n..N.
    """
    _check_d(state, d)
    op = _diff_operator(state, d)
    weight = op.column_norm_sq(n)
    y = _values(Y)
    M, V = state.M, state.V(d)
    resid = y - M @ compose_sources(state)
    if d == 1:
        r = resid[:, n - 1:].sum(axis=1)
    else:
        r = resid[:, n - 1]
    c = r + weight * (M @ V[:, n - 1])
    MtPsi = M.T / state.psi[None, :]
    prior_prec = 1.0 / v_prior_variance(state.shrink(d), d, settings.baseline_variance)[:, n - 1]
    B = weight * (MtPsi @ M) + np.diag(prior_prec)
    return B, MtPsi @ c


def v_column_conditional(state: ModelState, Y, d: int, n: int,
                         settings: SamplerSettings = DEFAULT_SETTINGS) -> Tuple[np.ndarray, np.ndarray]:
    B, b = v_column_terms(state, Y, d, n, settings)
    L = _factorize(B, f"B^({n})", settings)
    return cho_solve((L, True), b), cho_solve((L, True), np.eye(state.K))


def update_v_column(state: ModelState, Y, d: int, n: int, rng: np.random.Generator,
                    settings: SamplerSettings = DEFAULT_SETTINGS) -> ModelState:
    B, b = v_column_terms(state, Y, d, n, settings)
    V = state.V(d)
    V[:, n - 1] = _draw_gaussian(B, b, rng, f"B^({n})", settings)
    return state


def update_v_block(state: ModelState, Y, d: int, rng: np.random.Generator,
                   settings: SamplerSettings = DEFAULT_SETTINGS) -> ModelState:
    """
    Update every column of V^(d) in order n = 1..N.

    The residual is formed once; for d=1 its suffix sums are corrected by
    the accumulated column changes instead of being recomputed per column.
    """
    _check_d(state, d)
    y = _values(Y)
    M, V = state.M, state.V(d)
    N = state.N
    MtPsi = M.T / state.psi[None, :]
    MtPsiM = MtPsi @ M
    prior_prec = 1.0 / v_prior_variance(state.shrink(d), d, settings.baseline_variance)
    resid = y - M @ compose_sources(state)

    if d == 1:
        proj = MtPsi @ np.cumsum(resid[:, ::-1], axis=1)[:, ::-1]
        shift = np.zeros(state.K)
        for j in range(N):
            weight = float(N - j)
            v_old = V[:, j].copy()
            b = proj[:, j] - weight * (MtPsiM @ shift) + weight * (MtPsiM @ v_old)
            B = weight * MtPsiM + np.diag(prior_prec[:, j])
            V[:, j] = _draw_gaussian(B, b, rng, f"B^({j + 1})", settings)
            shift += V[:, j] - v_old
    else:
        proj = MtPsi @ resid
        for j in range(N):
            b = proj[:, j] + MtPsiM @ V[:, j]
            B = MtPsiM + np.diag(prior_prec[:, j])
            V[:, j] = _draw_gaussian(B, b, rng, f"B^({j + 1})", settings)
    return state


# ---------------------------------------------------------------------------
# Shrinkage hierarchy
# ---------------------------------------------------------------------------

def global_term(state: ModelState, d: int) -> float:
    """G^(d); the d=1 form swaps every (0)/(1) superscript of the printed G^(0)."""
    _check_d(state, d)
    shrink = state.shrink(d)
    m_denom = 2.0 * state.psi[:, None] * (_lambda_product(state) * _tau_product(state, exclude=d))[None, :]
    v_denom = 2.0 * shrink.phi[None, :] * shrink.lambda_[:, None] * shrink.gamma
    v_sq = state.V(d) ** 2 * _horseshoe_columns(state, d)[None, :]
    return float(np.sum(state.M ** 2 / m_denom) + np.sum(v_sq / v_denom))


def global_conditional(state: ModelState, d: int) -> Tuple[float, float]:
    n_cols = _horseshoe_columns(state, d).sum()
    shape = (1.0 + state.K * (state.P + n_cols)) / 2.0
    return shape, 1.0 / state.shrink(d).xi + global_term(state, d)


def global_aux_conditional(state: ModelState, d: int) -> Tuple[float, float]:
    return 1.0, 1.0 + 1.0 / state.shrink(d).tau


def update_global_shrinkage(state: ModelState, d: int, rng: np.random.Generator,
                            settings: SamplerSettings = DEFAULT_SETTINGS) -> ModelState:
    shrink = state.shrink(d)
    shape, scale = global_conditional(state, d)
    shrink.tau = float(_clip(inverse_gamma(shape, scale, rng), settings))
    shape, scale = global_aux_conditional(state, d)
    shrink.xi = float(inverse_gamma(shape, scale, rng))
    return state


def row_term(state: ModelState, d: int) -> np.ndarray:
    """H^(d)_h for every row h."""
    _check_d(state, d)
    shrink = state.shrink(d)
    m_denom = 2.0 * state.psi[:, None] * (_tau_product(state) * _lambda_product(state, exclude=d))[None, :]
    v_denom = 2.0 * shrink.phi[None, :] * shrink.gamma * shrink.tau
    v_sq = state.V(d) ** 2 * _horseshoe_columns(state, d)[None, :]
    return np.sum(state.M ** 2 / m_denom, axis=0) + np.sum(v_sq / v_denom, axis=1)


def row_conditional(state: ModelState, d: int) -> Tuple[float, np.ndarray]:
    shape = (1.0 + state.P + _horseshoe_columns(state, d).sum()) / 2.0
    return shape, 1.0 / state.shrink(d).eta + row_term(state, d)


def row_aux_conditional(state: ModelState, d: int) -> Tuple[float, np.ndarray]:
    return 1.0, 1.0 + 1.0 / state.shrink(d).lambda_


def update_row_shrinkage(state: ModelState, d: int, rng: np.random.Generator,
                         settings: SamplerSettings = DEFAULT_SETTINGS) -> ModelState:
    shrink = state.shrink(d)
    shape, scale = row_conditional(state, d)
    shrink.lambda_ = _clip(inverse_gamma(shape, scale, rng), settings)
    shape, scale = row_aux_conditional(state, d)
    shrink.eta = inverse_gamma(shape, scale, rng)
    return state


def column_conditional(state: ModelState, d: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-column shapes; the V1 baseline column carries no data and keeps its prior form."""
    _check_d(state, d)
    shrink = state.shrink(d)
    mask = _horseshoe_columns(state, d)
    denom = 2.0 * shrink.lambda_[:, None] * shrink.gamma * shrink.tau
    scale = 1.0 / shrink.omega + np.sum(mask[None, :] * state.V(d) ** 2 / denom, axis=0)
    return 0.5 + 0.5 * state.K * mask, scale


def column_aux_conditional(state: ModelState, d: int) -> Tuple[float, np.ndarray]:
    return 1.0, 1.0 + 1.0 / state.shrink(d).phi


def update_column_shrinkage(state: ModelState, d: int, rng: np.random.Generator,
                            settings: SamplerSettings = DEFAULT_SETTINGS) -> ModelState:
    shrink = state.shrink(d)
    shape, scale = column_conditional(state, d)
    shrink.phi = _clip(inverse_gamma(shape, scale, rng), settings)
    shape, scale = column_aux_conditional(state, d)
    shrink.omega = inverse_gamma(shape, scale, rng)
    return state


def element_conditional(state: ModelState, d: int) -> Tuple[np.ndarray, np.ndarray]:
    _check_d(state, d)
    shrink = state.shrink(d)
    mask = np.broadcast_to(_horseshoe_columns(state, d), (state.K, state.N))
    denom = 2.0 * shrink.lambda_[:, None] * shrink.phi[None, :] * shrink.tau
    return 0.5 + 0.5 * mask, 1.0 / shrink.zeta + mask * state.V(d) ** 2 / denom


def element_aux_conditional(state: ModelState, d: int) -> Tuple[float, np.ndarray]:
    return 1.0, 1.0 + 1.0 / state.shrink(d).gamma


def update_element_shrinkage(state: ModelState, d: int, rng: np.random.Generator,
                             settings: SamplerSettings = DEFAULT_SETTINGS) -> ModelState:
    shrink = state.shrink(d)
    shape, scale = element_conditional(state, d)
    shrink.gamma = _clip(inverse_gamma(shape, scale, rng), settings)
    shape, scale = element_aux_conditional(state, d)
    shrink.zeta = inverse_gamma(shape, scale, rng)
    return state


def update_shrinkage(state: ModelState, d: int, rng: np.random.Generator,
                     settings: SamplerSettings = DEFAULT_SETTINGS) -> ModelState:
    update_global_shrinkage(state, d, rng, settings)
    update_row_shrinkage(state, d, rng, settings)
    update_column_shrinkage(state, d, rng, settings)
    update_element_shrinkage(state, d, rng, settings)
    return state


def refresh_auxiliaries(shrink, rng: np.random.Generator):
    """Redraw xi, eta, omega, zeta from their conditionals given the current scales."""
    shrink.xi = float(inverse_gamma(1.0, 1.0 + 1.0 / shrink.tau, rng))
    shrink.eta = inverse_gamma(1.0, 1.0 + 1.0 / shrink.lambda_, rng)
    shrink.omega = inverse_gamma(1.0, 1.0 + 1.0 / shrink.phi, rng)
    shrink.zeta = inverse_gamma(1.0, 1.0 + 1.0 / shrink.gamma, rng)
    return shrink


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def gibbs_sweep(state: ModelState, Y, rng: np.random.Generator,
                settings: SamplerSettings = DEFAULT_SETTINGS,
                plan: Optional[SweepPlan] = None) -> ModelState:
    plan = plan or SweepPlan.for_mode(state.mode)
    for step in plan.steps:
        if step == "mixing":
            update_mixing(state, Y, rng, settings)
        elif step == "noise":
            update_noise(state, Y, rng, settings)
        elif step == "v1":
            update_v_block(state, Y, 1, rng, settings)
        elif step == "v0":
            update_v_block(state, Y, 0, rng, settings)
        elif step == "shrinkage1":
            update_shrinkage(state, 1, rng, settings)
        elif step == "shrinkage0":
            update_shrinkage(state, 0, rng, settings)
        else:
            raise ValueError(f"unknown sweep step {step!r}")
    return state
