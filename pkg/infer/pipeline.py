"""
Two-stage fit: partial model -> change split -> warm-started full model -> report.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import config
from .detector import (GSeries, detect_changes, kde_cutoff, posterior_g, prune_ls_dp,
                       separate_ao_ls)
from .errors import ShapeError
from .framework import run_chain, spawn_seeds
from .model import (ChangeReport, Mode, ModelState, ObservationMatrix, PosteriorDraws,
                    SeedLike, ShrinkageSet)
from .sampler import DEFAULT_SETTINGS, SamplerSettings, refresh_auxiliaries

logger = logging.getLogger(__name__)

# Column 1 of V1 holds the starting level of every source, not a change.
BASELINE_INDEX = 1


def _banner(title: str):
    logger.info("=" * 40)
    logger.info(" stage: %s", title)
    logger.info("=" * 40)


@dataclass(eq=False)
class PartialFit:
    draws: PosteriorDraws
    M_hat: np.ndarray
    V_hat: np.ndarray
    psi_hat: np.ndarray
    shrink: ShrinkageSet
    g_hat: GSeries

    @property
    def N(self) -> int:
        return self.V_hat.shape[1]


def fit_partial(Y: ObservationMatrix, K: int = config.DEFAULT_K,
                iters: int = config.DEFAULT_ITERATIONS, burn_in: int = config.DEFAULT_BURN_IN,
                seed: SeedLike = None, chains: int = 1,
                settings: SamplerSettings = DEFAULT_SETTINGS,
                show_progress: bool = False) -> PartialFit:
    """Run the partial (level-shift only) model and take elementwise posterior medians."""
    draws = run_chain(Y, K, Mode.PARTIAL, iters, burn_in, seed=seed, chains=chains,
                      settings=settings, show_progress=show_progress)
    return PartialFit(
        draws=draws,
        M_hat=np.median(draws.M, axis=0),
        V_hat=np.median(draws.V1, axis=0),
        psi_hat=np.median(draws.psi, axis=0),
        shrink=draws.last_state.shrink1.copy(),
        g_hat=posterior_g(draws, 1),
    )


def init_full_from_partial(partial: PartialFit, cpt0: Sequence[int], cpt1: Sequence[int],
                           rng: Optional[np.random.Generator] = None) -> ModelState:
    """
    Warm start for the full model.

    V0 gets the partial V-hat columns at cpt0, V1 the columns at cpt1 plus the
    baseline column; everything else starts at zero. Both shrinkage sets are
    copies of the partial set with auxiliaries redrawn from their conditionals.
    """
    N = partial.N
    cpt0 = sorted(int(n) for n in cpt0)
    cpt1 = sorted(int(n) for n in cpt1)
    overlap = set(cpt0) & set(cpt1)
    if overlap:
        raise ValueError(f"indices given as both AO and LS: {sorted(overlap)}")
    for n in cpt0 + cpt1:
        if not 1 <= n <= N:
            raise ValueError(f"change index {n} outside 1..{N}")
    rng = rng if rng is not None else np.random.default_rng()

    K = partial.V_hat.shape[0]
    V0 = np.zeros((K, N))
    V1 = np.zeros((K, N))
    for n in cpt0:
        V0[:, n - 1] = partial.V_hat[:, n - 1]
    for n in sorted(set(cpt1) | {BASELINE_INDEX}):
        V1[:, n - 1] = partial.V_hat[:, n - 1]

    state = ModelState(
        M=partial.M_hat.copy(),
        V0=V0,
        V1=V1,
        psi=partial.psi_hat.copy(),
        shrink0=refresh_auxiliaries(partial.shrink.copy(), rng),
        shrink1=refresh_auxiliaries(partial.shrink.copy(), rng),
        mode=Mode.FULL,
    )
    return state.validate()


def _resolve_overlap(cpt0, cpt1, g0: GSeries, g1: GSeries):
    """An index passing both cutoffs keeps the type with the larger |g|."""
    both = set(cpt0) & set(cpt1)
    if not both:
        return cpt0, cpt1
    to_ao = {n for n in both if abs(g0.values[n - 1]) > abs(g1.values[n - 1])}
    logger.info("indices detected as both types: %s (kept as AO: %s)", sorted(both), sorted(to_ao))
    cpt0 = [n for n in cpt0 if n not in both or n in to_ao]
    cpt1 = [n for n in cpt1 if n not in both or n not in to_ao]
    return cpt0, cpt1


def run_abacus(Y: ObservationMatrix, K: int = config.DEFAULT_K,
               iters: int = config.DEFAULT_ITERATIONS, burn_in: int = config.DEFAULT_BURN_IN,
               delta: float = config.DEFAULT_DELTA, seed: SeedLike = None,
               prune: bool = False, max_keep: Optional[int] = None, chains: int = 1,
               settings: SamplerSettings = DEFAULT_SETTINGS,
               show_progress: bool = False) -> ChangeReport:
    if K >= Y.P:
        raise ShapeError(f"K must be smaller than the number of channels (K={K}, P={Y.P})")
    partial_seed, init_seed, full_seed = spawn_seeds(seed, 3)

    _banner("partial model")
    partial = fit_partial(Y, K, iters, burn_in, partial_seed, chains, settings, show_progress)
    g_partial = partial.g_hat.masked([BASELINE_INDEX])
    cutoff_partial = kde_cutoff(g_partial, delta)
    cpt = detect_changes(g_partial, cutoff_partial)

    _banner("AO/LS separation")
    init0, init1 = separate_ao_ls(g_partial, cpt)
    logger.info("partial cutoff %.6g: %d AO, %d LS candidates", cutoff_partial, len(init0), len(init1))

    _banner("full model")
    warm = init_full_from_partial(partial, init0, init1, np.random.default_rng(init_seed))
    draws = run_chain(Y, K, Mode.FULL, iters, burn_in, seed=full_seed, warm=warm, chains=chains,
                      settings=settings, show_progress=show_progress)

    _banner("report")
    g0 = posterior_g(draws, 0)
    g1 = posterior_g(draws, 1)
    g1_masked = g1.masked([BASELINE_INDEX])
    cutoff0 = kde_cutoff(g0, delta)
    cutoff1 = kde_cutoff(g1_masked, delta)
    cpt0, cpt1 = _resolve_overlap(detect_changes(g0, cutoff0), detect_changes(g1_masked, cutoff1),
                                  g0, g1)

    S_hat = np.median(draws.sources(), axis=0)
    if prune:
        cpt1 = prune_ls_dp(S_hat, cpt1, max_keep)
    logger.info("detected %d AO and %d LS", len(cpt0), len(cpt1))

    metadata = {
        "seed": seed if isinstance(seed, (int, np.integer)) else None,
        "K": K,
        "iterations": iters,
        "burn_in": burn_in,
        "delta": delta,
        "chains": chains,
        "prune": prune,
        "max_keep": max_keep,
        "cutoff0": cutoff0,
        "cutoff1": cutoff1,
        "partial_cutoff": cutoff_partial,
        "partial_cpt0": init0,
        "partial_cpt1": init1,
    }
    return ChangeReport(
        cpt0=cpt0,
        cpt1=cpt1,
        S_hat=S_hat,
        M_hat=np.median(draws.M, axis=0),
        psi_hat=np.median(draws.psi, axis=0),
        g0_hat=g0.values,
        g1_hat=g1.values,
        cutoff0=cutoff0,
        cutoff1=cutoff1,
        metadata=metadata,
    )
