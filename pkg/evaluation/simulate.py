"""
Synthetic data with known additive outliers and level shifts.

Sources start at a random baseline level. Change locations are drawn without
replacement from the even indices {2, 4, ..., <= N-1}, so distinct changes are
never adjacent and two AOs can never be mistaken for a level shift.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from infer.errors import ShapeError
from infer.model import ObservationMatrix
from toolkits.csv_io import write_changes, write_matrix

logger = logging.getLogger(__name__)

Range = Tuple[float, float]


@dataclass
class SimConfig:
    P: int
    N: int
    r: int
    n_ao: int
    n_ls: int
    m_range: Range = (-1.0, 1.0)
    psi_range: Range = (0.1, 5.0)
    mag_range: Range = (1.0, 5.0)
    baseline_range: Range = (-1.0, 1.0)
    seed: Optional[int] = None

    def admissible_locations(self) -> np.ndarray:
        return np.arange(2, self.N, 2)

    def validate(self) -> "SimConfig":
        if self.P < 1 or self.N < 3:
            raise ShapeError(f"need P >= 1 and N >= 3, got P={self.P}, N={self.N}")
        if not 1 <= self.r <= self.P:
            raise ShapeError(f"number of sources r={self.r} must lie in 1..P={self.P}")
        if self.n_ao < 0 or self.n_ls < 0:
            raise ValueError("change counts must be nonnegative")
        available = len(self.admissible_locations())
        if self.n_ao + self.n_ls > available:
            raise ValueError(
                f"{self.n_ao + self.n_ls} changes requested but only {available} even locations exist for N={self.N}"
            )
        for name in ("m_range", "psi_range", "mag_range", "baseline_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} is empty: {lo} > {hi}")
        if self.psi_range[0] <= 0:
            raise ValueError("noise variances must be positive")
        if self.mag_range[0] <= 0:
            raise ValueError("change magnitudes must be positive")
        return self


@dataclass
class ChangeEvent:
    index: int
    kind: str
    signals: List[int]  # 1-based source rows
    magnitudes: List[float]

    def dominant_magnitude(self) -> float:
        """Signed magnitude of largest absolute value."""
        return self.magnitudes[int(np.argmax(np.abs(self.magnitudes)))]


@dataclass(eq=False)
class GroundTruth:
    M: np.ndarray
    S: np.ndarray
    psi: np.ndarray
    ao_locs: List[int]
    ls_locs: List[int]
    events: List[ChangeEvent] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "M": self.M.tolist(),
            "S": self.S.tolist(),
            "psi": self.psi.tolist(),
            "ao_locs": list(self.ao_locs),
            "ls_locs": list(self.ls_locs),
            "events": [asdict(e) for e in self.events],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "GroundTruth":
        return cls(
            M=np.asarray(data["M"], dtype=float),
            S=np.asarray(data["S"], dtype=float),
            psi=np.asarray(data["psi"], dtype=float),
            ao_locs=[int(n) for n in data["ao_locs"]],
            ls_locs=[int(n) for n in data["ls_locs"]],
            events=[ChangeEvent(**e) for e in data.get("events", [])],
        )


def generate(cfg: SimConfig) -> Tuple[ObservationMatrix, GroundTruth]:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    P, N, r = cfg.P, cfg.N, cfg.r

    M = rng.uniform(*cfg.m_range, size=(P, r))
    psi = rng.uniform(*cfg.psi_range, size=P)
    baseline = rng.uniform(*cfg.baseline_range, size=r)
    S = np.repeat(baseline[:, None], N, axis=1)

    locs = rng.choice(cfg.admissible_locations(), size=cfg.n_ao + cfg.n_ls, replace=False)
    ao = set(int(n) for n in locs[:cfg.n_ao])
    events = []
    for n in sorted(int(x) for x in locs):
        kind = "AO" if n in ao else "LS"
        count = int(rng.integers(1, r + 1))
        rows = np.sort(rng.choice(r, size=count, replace=False))
        mags = rng.uniform(*cfg.mag_range, size=count) * rng.choice([-1.0, 1.0], size=count)
        for h, m in zip(rows, mags):
            if kind == "AO":
                S[h, n - 1] += m
            else:
                S[h, n - 1:] += m
        events.append(ChangeEvent(index=n, kind=kind, signals=[int(h) + 1 for h in rows],
                                  magnitudes=[float(m) for m in mags]))

    noise = rng.standard_normal((P, N)) * np.sqrt(psi)[:, None]
    Y = M @ S + noise
    truth = GroundTruth(M=M, S=S, psi=psi,
                        ao_locs=sorted(ao),
                        ls_locs=sorted(e.index for e in events if e.kind == "LS"),
                        events=events)
    logger.info("simulated P=%d N=%d r=%d with AO at %s and LS at %s",
                P, N, r, truth.ao_locs, truth.ls_locs)
    return ObservationMatrix(Y), truth


def truth_changes(truth: GroundTruth) -> Tuple[np.ndarray, np.ndarray]:
    """Per-index signed dominant magnitudes for AO and LS events (zero elsewhere)."""
    N = truth.S.shape[1]
    g0, g1 = np.zeros(N), np.zeros(N)
    for e in truth.events:
        (g0 if e.kind == "AO" else g1)[e.index - 1] = e.dominant_magnitude()
    return g0, g1


def save_fixture(out_dir: Union[str, os.PathLike], Y: ObservationMatrix,
                 truth: GroundTruth) -> Dict[str, Path]:
    """data.csv (channels as rows), truth.json and truth_changes.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g0, g1 = truth_changes(truth)
    paths = {
        "data": write_matrix(out / "data.csv", Y.values),
        "truth_changes": write_changes(out / "truth_changes.csv", truth.ao_locs, truth.ls_locs, g0, g1),
    }
    with open(out / "truth.json", "w", encoding="utf-8") as f:
        json.dump(truth.to_dict(), f, indent=2)
    paths["truth"] = out / "truth.json"
    return paths
