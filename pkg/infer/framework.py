import concurrent.futures
import logging
from typing import List, Optional

import numpy as np
from tqdm import tqdm

from . import config
from .errors import IllConditionedError
from .model import Mode, ModelState, ObservationMatrix, PosteriorDraws, SeedLike, init_state
from .sampler import DEFAULT_SETTINGS, SamplerSettings, gibbs_sweep

logger = logging.getLogger(__name__)


def spawn_seeds(seed: SeedLike, n: int) -> List[np.random.SeedSequence]:
    """n independent seed streams derived from an int, SeedSequence, Generator or None."""
    if isinstance(seed, np.random.SeedSequence):
        root = seed
    elif isinstance(seed, np.random.Generator):
        root = np.random.SeedSequence(int(seed.integers(2 ** 63)))
    else:
        root = np.random.SeedSequence(seed)
    return root.spawn(n)


class ChainRunner:
    """Runs independent Gibbs chains, one seed stream each, on a thread pool."""

    def __init__(self, num_workers: int = config.MAX_WORKERS,
                 settings: SamplerSettings = DEFAULT_SETTINGS,
                 show_progress: bool = True):
        self.num_workers = num_workers
        self.settings = settings
        self.show_progress = show_progress

    def run_single(self, Y: ObservationMatrix, K: int, mode: Mode, iterations: int, burn_in: int,
                   seed: SeedLike, warm: Optional[ModelState] = None, chain: int = 0) -> PosteriorDraws:
        rng = np.random.default_rng(seed)
        state = init_state(Y, K, mode, rng, warm=warm)
        draws = PosteriorDraws(state.mode)
        every = max(1, int(self.settings.progress_every))

        bar = tqdm(range(1, iterations + 1), desc=f"{state.mode.value} chain {chain}",
                   disable=not self.show_progress, leave=False)
        for it in bar:
            try:
                gibbs_sweep(state, Y, rng, self.settings)
            except IllConditionedError as e:
                e.at_iteration(it)
                logger.error("chain %d aborted: %s", chain, e)
                raise
            if it > burn_in:
                draws.append(state, it, chain)
            if it % every == 0:
                logger.info("chain %d iteration %d/%d tau0=%.3e tau1=%.3e", chain, it, iterations,
                            state.shrink0.tau, state.shrink1.tau)
        bar.close()
        draws.last_state = state.copy()
        return draws

    def run(self, Y: ObservationMatrix, K: int, mode: Mode, iterations: int, burn_in: int,
            seed: SeedLike = None, warm: Optional[ModelState] = None, chains: int = 1) -> PosteriorDraws:
        if iterations < 1:
            raise ValueError(f"iterations must be positive, got {iterations}")
        if not 0 <= burn_in < iterations:
            raise ValueError(f"burn_in must satisfy 0 <= burn_in < iterations (got {burn_in}, {iterations})")
        if chains < 1:
            raise ValueError(f"chains must be positive, got {chains}")
        mode = Mode(mode)

        if chains == 1:
            return self.run_single(Y, K, mode, iterations, burn_in, seed, warm, chain=0)

        streams = spawn_seeds(seed, chains)
        results: List[Optional[PosteriorDraws]] = [None] * chains
        with concurrent.futures.ThreadPoolExecutor(max_workers=min(self.num_workers, chains)) as executor:
            future_to_chain = {
                executor.submit(self.run_single, Y, K, mode, iterations, burn_in, streams[c], warm, c): c
                for c in range(chains)
            }
            for future in concurrent.futures.as_completed(future_to_chain):
                results[future_to_chain[future]] = future.result()

        merged = PosteriorDraws(mode)
        for draws in results:
            merged.extend(draws)
        return merged


def run_chain(Y: ObservationMatrix, K: int, mode: Mode, iterations: int, burn_in: int,
              seed: SeedLike = None, warm: Optional[ModelState] = None, chains: int = 1,
              settings: SamplerSettings = DEFAULT_SETTINGS, show_progress: bool = False) -> PosteriorDraws:
    """Run Gibbs sampling and keep the (iterations - burn_in) post-burn-in draws of every chain."""
    runner = ChainRunner(settings=settings, show_progress=show_progress)
    return runner.run(Y, K, mode, iterations, burn_in, seed=seed, warm=warm, chains=chains)
