"""
Model quantities for the sparse Bayesian source-separation model.

Y (P x N) = M S + E with S = S0 + S1, S0 = V0 and S1 the row-wise cumulative
sum of V1. Each of V0/V1 carries its own horseshoe hierarchy (ShrinkageSet).
No sampling logic lives here apart from prior draws used for initialization.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Union

import numpy as np

from . import config
from .errors import ShapeError

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


class Mode(str, Enum):
    PARTIAL = "partial"
    FULL = "full"


class DiffKind(int, Enum):
    IDENTITY = 0
    FIRST_DIFFERENCE = 1


@dataclass(frozen=True, eq=False)
class ObservationMatrix:
    """The P x N data to be decomposed; rows are channels, columns the sequential index."""
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.ndim != 2:
            raise ShapeError(f"observations must be 2D, got ndim={arr.ndim}")
        p, n = arr.shape
        if p < 1:
            raise ShapeError("observations need at least one channel")
        if n < 3:
            raise ShapeError(f"observations need at least 3 columns, got N={n}")
        if not np.all(np.isfinite(arr)):
            raise ShapeError("observations contain non-finite entries")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def P(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class DiffOperator:
    """D^(d) acting on length-N sequences along the last axis, without a dense matrix."""
    kind: DiffKind
    length: int

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind is DiffKind.IDENTITY:
            return x.copy()
        return np.diff(x, axis=-1, prepend=0.0)

    def invert(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.kind is DiffKind.IDENTITY:
            return v.copy()
        return np.cumsum(v, axis=-1)

    def inverse_column(self, n: int) -> np.ndarray:
        """Column n (1-based) of D^{-1}."""
        self._check_index(n)
        col = np.zeros(self.length)
        if self.kind is DiffKind.IDENTITY:
            col[n - 1] = 1.0
        else:
            col[n - 1:] = 1.0
        return col

    def column_norm_sq(self, n: int) -> float:
        """(D^{-1}_{.n})^T D^{-1}_{.n}: N - n + 1 for differencing, 1 for identity."""
        self._check_index(n)
        if self.kind is DiffKind.IDENTITY:
            return 1.0
        return float(self.length - n + 1)

    def _check_index(self, n: int):
        if not 1 <= n <= self.length:
            raise IndexError(f"column index {n} outside 1..{self.length}")


@dataclass(eq=False)
class ShrinkageSet:
    """One horseshoe hierarchy: global, row, column and element scales with their auxiliaries."""
    tau: float
    xi: float
    lambda_: np.ndarray
    eta: np.ndarray
    phi: np.ndarray
    omega: np.ndarray
    gamma: np.ndarray
    zeta: np.ndarray

    @property
    def K(self) -> int:
        return self.lambda_.shape[0]

    @property
    def N(self) -> int:
        return self.phi.shape[0]

    def validate(self, K: int, N: int, name: str = "shrinkage"):
        shapes = {
            "lambda_": (K,), "eta": (K,), "phi": (N,), "omega": (N,),
            "gamma": (K, N), "zeta": (K, N),
        }
        for attr, shape in shapes.items():
            arr = getattr(self, attr)
            if arr.shape != shape:
                raise ShapeError(f"{name}.{attr} has shape {arr.shape}, expected {shape}")
        for attr in ("tau", "xi", *shapes):
            arr = np.asarray(getattr(self, attr))
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise ShapeError(f"{name}.{attr} must be finite and strictly positive")

    def copy(self) -> "ShrinkageSet":
        return copy.deepcopy(self)

    def element_variance(self) -> np.ndarray:
        """Prior variance of each V_hn: phi_n * lambda_h * gamma_hn * tau."""
        return self.tau * self.lambda_[:, None] * self.phi[None, :] * self.gamma


@dataclass(eq=False)
class ModelState:
    M: np.ndarray
    V0: np.ndarray
    V1: np.ndarray
    psi: np.ndarray
    shrink0: ShrinkageSet
    shrink1: ShrinkageSet
    mode: Mode = Mode.FULL

    @property
    def P(self) -> int:
        return self.M.shape[0]

    @property
    def K(self) -> int:
        return self.M.shape[1]

    @property
    def N(self) -> int:
        return self.V1.shape[1]

    def shrink(self, d: int) -> ShrinkageSet:
        return self.shrink0 if d == 0 else self.shrink1

    def V(self, d: int) -> np.ndarray:
        return self.V0 if d == 0 else self.V1

    def mixing_scale(self) -> np.ndarray:
        """Per-column prior scale product c_h with M_ih ~ N(0, c_h psi_i)."""
        c = self.shrink1.tau * self.shrink1.lambda_
        if self.mode is Mode.FULL:
            c = c * self.shrink0.tau * self.shrink0.lambda_
        return c

    def validate(self):
        P, K = self.M.shape
        N = self.V1.shape[1]
        if self.V0.shape != (K, N) or self.V1.shape != (K, N):
            raise ShapeError(f"V0 {self.V0.shape} / V1 {self.V1.shape} do not match (K={K}, N={N})")
        if self.psi.shape != (P,):
            raise ShapeError(f"psi has shape {self.psi.shape}, expected ({P},)")
        if np.any(~np.isfinite(self.psi)) or np.any(self.psi <= 0):
            raise ShapeError("psi must be finite and strictly positive")
        if self.mode is Mode.PARTIAL and np.any(self.V0 != 0):
            raise ShapeError("V0 must be identically zero in partial mode")
        self.shrink0.validate(K, N, "shrink0")
        self.shrink1.validate(K, N, "shrink1")
        return self

    def copy(self) -> "ModelState":
        return copy.deepcopy(self)


class PosteriorDraws:
    """Append-only store of retained draws (deep copies of M, V0, V1, psi)."""

    def __init__(self, mode: Mode):
        self.mode = mode
        self._M: List[np.ndarray] = []
        self._V0: List[np.ndarray] = []
        self._V1: List[np.ndarray] = []
        self._psi: List[np.ndarray] = []
        self._tau: List[tuple] = []
        self.iterations: List[int] = []
        self.chains: List[int] = []
        self.last_state: Optional[ModelState] = None

    def __len__(self) -> int:
        return len(self._M)

    def append(self, state: ModelState, iteration: int, chain: int = 0):
        self._M.append(state.M.copy())
        self._V0.append(state.V0.copy())
        self._V1.append(state.V1.copy())
        self._psi.append(state.psi.copy())
        self._tau.append((state.shrink0.tau, state.shrink1.tau))
        self.iterations.append(int(iteration))
        self.chains.append(int(chain))

    def extend(self, other: "PosteriorDraws"):
        if other.mode is not self.mode:
            raise ValueError(f"cannot merge {other.mode.value} draws into {self.mode.value} draws")
        self._M.extend(other._M)
        self._V0.extend(other._V0)
        self._V1.extend(other._V1)
        self._psi.extend(other._psi)
        self._tau.extend(other._tau)
        self.iterations.extend(other.iterations)
        self.chains.extend(other.chains)
        if other.last_state is not None:
            self.last_state = other.last_state

    def _stack(self, items: List[np.ndarray]) -> np.ndarray:
        if not items:
            raise ValueError("no posterior draws stored")
        return np.stack(items)

    @property
    def M(self) -> np.ndarray:
        return self._stack(self._M)

    @property
    def V0(self) -> np.ndarray:
        return self._stack(self._V0)

    @property
    def V1(self) -> np.ndarray:
        return self._stack(self._V1)

    @property
    def psi(self) -> np.ndarray:
        return self._stack(self._psi)

    @property
    def tau(self) -> np.ndarray:
        """(draws, 2) array of (tau0, tau1)."""
        return np.asarray(self._tau, dtype=float)

    def V(self, d: int) -> np.ndarray:
        return self.V0 if d == 0 else self.V1

    def sources(self) -> np.ndarray:
        """compose_sources applied to every draw, shape (draws, K, N)."""
        S = np.cumsum(self.V1, axis=2)
        if self.mode is Mode.FULL:
            S = S + self.V0
        return S


@dataclass(eq=False)
class ChangeReport:
    cpt0: List[int]
    cpt1: List[int]
    S_hat: np.ndarray
    M_hat: np.ndarray
    psi_hat: np.ndarray
    g0_hat: np.ndarray
    g1_hat: np.ndarray
    cutoff0: float
    cutoff1: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.cpt0 = sorted(int(n) for n in self.cpt0)
        self.cpt1 = sorted(int(n) for n in self.cpt1)
        N = self.S_hat.shape[1]
        overlap = set(self.cpt0) & set(self.cpt1)
        if overlap:
            raise ValueError(f"indices reported as both AO and LS: {sorted(overlap)}")
        for label, cpt, g, cutoff in (("AO", self.cpt0, self.g0_hat, self.cutoff0),
                                      ("LS", self.cpt1, self.g1_hat, self.cutoff1)):
            for n in cpt:
                if not 1 <= n <= N:
                    raise ValueError(f"{label} index {n} outside 1..{N}")
                if not abs(g[n - 1]) > cutoff:
                    raise ValueError(f"{label} index {n} does not exceed its cutoff {cutoff}")


def inverse_gamma(shape, scale, rng: np.random.Generator) -> np.ndarray:
    """Draw from Inv-Gamma(shape, scale), density ~ x^{-shape-1} exp(-scale/x)."""
    scale = np.asarray(scale, dtype=float)
    g = rng.standard_gamma(shape, size=scale.shape)
    return scale / g


def _clip_scale(x):
    return np.clip(x, config.SCALE_FLOOR, config.SCALE_CEIL)


def sample_shrinkage(K: int, N: int, rng: np.random.Generator) -> ShrinkageSet:
    xi = float(inverse_gamma(0.5, 1.0, rng))
    tau = float(_clip_scale(inverse_gamma(0.5, 1.0 / xi, rng)))
    eta = inverse_gamma(0.5, np.ones(K), rng)
    lam = _clip_scale(inverse_gamma(0.5, 1.0 / eta, rng))
    omega = inverse_gamma(0.5, np.ones(N), rng)
    phi = _clip_scale(inverse_gamma(0.5, 1.0 / omega, rng))
    zeta = inverse_gamma(0.5, np.ones((K, N)), rng)
    gamma = _clip_scale(inverse_gamma(0.5, 1.0 / zeta, rng))
    return ShrinkageSet(tau=tau, xi=xi, lambda_=lam, eta=eta, phi=phi, omega=omega,
                        gamma=gamma, zeta=zeta)


def _sample_mixing(state: ModelState, rng: np.random.Generator) -> np.ndarray:
    var = state.psi[:, None] * state.mixing_scale()[None, :]
    return rng.standard_normal((state.P, state.K)) * np.sqrt(var)


def v_prior_variance(shrink: ShrinkageSet, d: int,
                     baseline_variance: float = config.BASELINE_PRIOR_VARIANCE) -> np.ndarray:
    """
    Prior variance of every V^(d)_hn.

    Column 1 of V1 is the starting level of each source and sits outside the
    horseshoe under a fixed N(0, baseline_variance) prior.
    """
    var = shrink.element_variance()
    if d == 1:
        var[:, 0] = baseline_variance
    return var


def _sample_v(shrink: ShrinkageSet, d: int, rng: np.random.Generator,
              baseline_variance: float) -> np.ndarray:
    var = v_prior_variance(shrink, d, baseline_variance)
    return rng.standard_normal((shrink.K, shrink.N)) * np.sqrt(var)


def sample_prior(P: int, K: int, N: int, mode: Mode, rng: np.random.Generator,
                 baseline_variance: float = config.BASELINE_PRIOR_VARIANCE) -> ModelState:
    """Draw every parameter from its prior: auxiliaries, scales, psi, then M and V."""
    mode = Mode(mode)
    shrink1 = sample_shrinkage(K, N, rng)
    shrink0 = sample_shrinkage(K, N, rng)
    psi = inverse_gamma(1.0, np.ones(P), rng)
    state = ModelState(M=np.zeros((P, K)), V0=np.zeros((K, N)), V1=np.zeros((K, N)),
                       psi=psi, shrink0=shrink0, shrink1=shrink1, mode=mode)
    state.M = _sample_mixing(state, rng)
    state.V1 = _sample_v(shrink1, 1, rng, baseline_variance)
    if mode is Mode.FULL:
        state.V0 = _sample_v(shrink0, 0, rng, baseline_variance)
    return state


def simulate_observations(state: ModelState, rng: np.random.Generator) -> np.ndarray:
    """Y = M S + E with E columns ~ N(0, diag(psi))."""
    S = compose_sources(state)
    noise = rng.standard_normal((state.P, state.N)) * np.sqrt(state.psi)[:, None]
    return state.M @ S + noise


def init_state(Y: ObservationMatrix, K: int, mode: Mode, rng_seed: SeedLike = None,
               warm: Optional[ModelState] = None) -> ModelState:
    """
    Build the starting point of a chain.

    Cold start draws everything from the prior. A warm state contributes every
    component it has (a partial warm state has no V0/shrink0 to offer a full
    target); the rest comes from the prior.
    """
    mode = Mode(mode)
    P, N = Y.P, Y.N
    if K < 1:
        raise ValueError(f"K must be a positive integer, got {K}")
    if K >= P:
        raise ShapeError(f"K must be smaller than the number of channels (K={K}, P={P})")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)

    # cold starts draw the starting level at unit scale, not from its wide prior
    state = sample_prior(P, K, N, mode, rng, baseline_variance=1.0)
    if warm is None:
        return state.validate()

    if warm.M.shape != (P, K) or warm.V1.shape != (K, N) or warm.psi.shape != (P,):
        raise ShapeError(
            f"warm state shapes M{warm.M.shape}, V1{warm.V1.shape} do not match (P={P}, K={K}, N={N})"
        )
    state.M = warm.M.copy()
    state.psi = warm.psi.copy()
    state.V1 = warm.V1.copy()
    state.shrink1 = warm.shrink1.copy()
    if mode is Mode.FULL and warm.mode is Mode.FULL:
        state.V0 = warm.V0.copy()
        state.shrink0 = warm.shrink0.copy()
    elif mode is Mode.PARTIAL:
        state.V0 = np.zeros((K, N))
    return state.validate()


def compose_sources(state: ModelState) -> np.ndarray:
    """S = V0 + rowCumSum(V1) in full mode, rowCumSum(V1) in partial mode."""
    S = np.cumsum(state.V1, axis=1)
    if state.mode is Mode.FULL:
        S = S + state.V0
    return S
