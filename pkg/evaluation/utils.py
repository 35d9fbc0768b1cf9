import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from toolkits import csv_io

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]


@dataclass(eq=False)
class EvalRecord:
    """Change sets plus, when available, the matrices needed for recovery errors."""
    cpt0: List[int] = field(default_factory=list)
    cpt1: List[int] = field(default_factory=list)
    M: Optional[np.ndarray] = None
    S: Optional[np.ndarray] = None
    psi: Optional[np.ndarray] = None

    def has_matrices(self) -> bool:
        return self.M is not None and self.S is not None and self.psi is not None


def load_truth(path: PathLike) -> EvalRecord:
    """Ground truth from a truth.json sidecar or a changes CSV."""
    p = Path(path)
    if p.suffix.lower() == ".json":
        with open(p, "r", encoding="utf-8") as f:
            data = json.load(f)
        return EvalRecord(
            cpt0=sorted(int(n) for n in data["ao_locs"]),
            cpt1=sorted(int(n) for n in data["ls_locs"]),
            M=np.asarray(data["M"], dtype=float) if "M" in data else None,
            S=np.asarray(data["S"], dtype=float) if "S" in data else None,
            psi=np.asarray(data["psi"], dtype=float) if "psi" in data else None,
        )
    cpt0, cpt1 = csv_io.read_changes(p)
    return EvalRecord(cpt0=cpt0, cpt1=cpt1)


def load_estimate(path: PathLike) -> EvalRecord:
    """An estimate from a report directory (changes plus matrices) or a lone changes CSV."""
    p = Path(path)
    if not p.is_dir():
        cpt0, cpt1 = csv_io.read_changes(p)
        return EvalRecord(cpt0=cpt0, cpt1=cpt1)

    cpt0, cpt1 = csv_io.read_changes(p / csv_io.CHANGES_FILE)
    record = EvalRecord(cpt0=cpt0, cpt1=cpt1)
    files = [p / csv_io.SOURCES_FILE, p / csv_io.MIXING_FILE, p / csv_io.NOISE_FILE]
    if all(f.exists() for f in files):
        record.S = csv_io.read_matrix(files[0])
        record.M = csv_io.read_matrix(files[1])
        record.psi = csv_io.read_matrix(files[2]).ravel()
    else:
        logger.warning("%s has no complete set of matrices; recovery errors skipped", p)
    return record
