"""
Text formats for observations and reports.

All indices written to or read from disk are 1-based. Floats are written with
%.17g so that values reload bit-for-bit; an infinite cutoff is the token "inf".
"""

import logging
import os
import re
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
import pandas as pd

from infer.errors import CsvFormatError
from infer.model import ChangeReport, ObservationMatrix

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

FLOAT_FORMAT = "%.17g"
ORIENTATIONS = ("rows", "columns")

CHANGES_FILE = "changes.csv"
SOURCES_FILE = "sources.csv"
MIXING_FILE = "mixing.csv"
NOISE_FILE = "noise.csv"
G_SERIES_FILE = "g_series.csv"
METADATA_FILE = "run.txt"


def _is_number(cell) -> bool:
    try:
        float(cell)
        return True
    except (TypeError, ValueError):
        return False


def _read_cells(path: PathLike) -> pd.DataFrame:
    try:
        return pd.read_csv(path, header=None, dtype=str, keep_default_na=False,
                           skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise CsvFormatError(f"{path} is empty", line=1)
    except pd.errors.ParserError as e:
        m = re.search(r"Expected (\d+) fields in line (\d+), saw (\d+)", str(e))
        if m:
            raise CsvFormatError(f"ragged row: expected {m.group(1)} fields, saw {m.group(3)}",
                                 line=int(m.group(2)))
        raise CsvFormatError(f"cannot parse {path}: {e}")


def load_csv(path: PathLike, orientation: str = "rows", standardize: bool = False) -> ObservationMatrix:
    """
    Read a rectangular numeric CSV with an optional header row.

    orientation="rows" means each row is a channel; "columns" means each column
    is one. With standardize, every channel is centered and scaled to unit
    sample standard deviation (constant channels are only centered).
    """
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
    cells = _read_cells(path)

    # a blank line parses as at most one empty field padded with missing values; a row
    # of separators (",,,") has every field present and is reported below as empty cells
    lines = np.arange(1, len(cells) + 1)
    blank = (cells.fillna("") == "").all(axis=1) & cells.iloc[:, 1:].isna().all(axis=1)
    cells, lines = cells[~blank.to_numpy()], lines[~blank.to_numpy()]
    if cells.empty:
        raise CsvFormatError(f"{path} has no data rows", line=1)

    first = cells.iloc[0].dropna()
    if any(str(c).strip() for c in first) and not all(_is_number(c) for c in first):
        logger.debug("treating line %d of %s as a header", lines[0], path)
        cells, lines = cells.iloc[1:], lines[1:]
        if cells.empty:
            raise CsvFormatError(f"{path} has a header but no data rows", line=2)

    raw = cells.to_numpy(dtype=object)
    values = np.empty(raw.shape, dtype=float)
    for i, row in enumerate(raw):
        for j, cell in enumerate(row):
            if cell is None or (isinstance(cell, float) and np.isnan(cell)):
                raise CsvFormatError(f"ragged row: expected {raw.shape[1]} fields, saw {j}",
                                     line=int(lines[i]))
            text = str(cell).strip()
            if not text:
                raise CsvFormatError("empty cell", line=int(lines[i]), column=j + 1)
            try:
                x = float(text)
            except ValueError:
                raise CsvFormatError(f"non-numeric cell {text!r}", line=int(lines[i]), column=j + 1)
            if not np.isfinite(x):
                raise CsvFormatError(f"non-finite cell {text!r}", line=int(lines[i]), column=j + 1)
            values[i, j] = x

    if orientation == "columns":
        values = values.T
    if standardize:
        values = standardize_channels(values)
    logger.info("loaded %s: P=%d channels, N=%d points", path, values.shape[0], values.shape[1])
    return ObservationMatrix(values)


def standardize_channels(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    centered = values - values.mean(axis=1, keepdims=True)
    sd = values.std(axis=1, ddof=1, keepdims=True)
    sd = np.where(sd > 0, sd, 1.0)
    return centered / sd


def write_matrix(path: PathLike, values: np.ndarray) -> Path:
    """Write a matrix (or a vector as one column) without header or index."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    pd.DataFrame(values).to_csv(path, header=False, index=False, float_format=FLOAT_FORMAT)
    return Path(path)


def read_matrix(path: PathLike) -> np.ndarray:
    try:
        return pd.read_csv(path, header=None, dtype=float).to_numpy()
    except pd.errors.EmptyDataError:
        raise CsvFormatError(f"{path} is empty", line=1)
    except ValueError as e:
        raise CsvFormatError(f"{path} is not a numeric matrix: {e}")


def write_changes(path: PathLike, cpt0, cpt1, g0=None, g1=None) -> Path:
    """One row per change: index, type (AO/LS), g_value (left empty without a g series)."""
    rows = []
    for kind, cpt, g in (("AO", cpt0, g0), ("LS", cpt1, g1)):
        for n in cpt:
            rows.append({"index": int(n), "type": kind,
                         "g_value": float(g[n - 1]) if g is not None else np.nan})
    frame = pd.DataFrame(rows, columns=["index", "type", "g_value"])
    frame = frame.sort_values("index", kind="stable")
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return Path(path)


def read_changes(path: PathLike) -> Tuple[List[int], List[int]]:
    """(AO indices, LS indices) from a changes file."""
    try:
        frame = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise CsvFormatError(f"{path} is empty", line=1)
    missing = {"index", "type"} - set(frame.columns)
    if missing:
        raise CsvFormatError(f"{path} lacks columns {sorted(missing)}", line=1)
    kinds = frame["type"].astype(str).str.upper()
    unknown = ~kinds.isin(["AO", "LS"])
    if unknown.any():
        first = int(np.flatnonzero(unknown.to_numpy())[0])
        raise CsvFormatError(f"unknown change type {frame['type'].iloc[first]!r}", line=first + 2)
    idx = frame["index"].astype(int)
    return sorted(idx[kinds == "AO"].tolist()), sorted(idx[kinds == "LS"].tolist())


def _format_value(value) -> str:
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def write_metadata(path: PathLike, metadata: Dict) -> Path:
    lines = [f"{key}={_format_value(value)}" for key, value in metadata.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


def read_metadata(path: PathLike) -> Dict[str, str]:
    out = {}
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        if "=" not in line:
            raise CsvFormatError("expected key=value", line=i)
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def emit_report(report: ChangeReport, out_dir: PathLike) -> Dict[str, Path]:
    """Write every report artifact into out_dir and return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    N = report.S_hat.shape[1]
    paths = {
        "changes": write_changes(out / CHANGES_FILE, report.cpt0, report.cpt1,
                                 report.g0_hat, report.g1_hat),
        "sources": write_matrix(out / SOURCES_FILE, report.S_hat),
        "mixing": write_matrix(out / MIXING_FILE, report.M_hat),
        "noise": write_matrix(out / NOISE_FILE, report.psi_hat),
    }
    g_series = pd.DataFrame({"index": np.arange(1, N + 1), "g0": report.g0_hat, "g1": report.g1_hat})
    g_series.to_csv(out / G_SERIES_FILE, index=False, float_format=FLOAT_FORMAT)
    paths["g_series"] = out / G_SERIES_FILE

    metadata = dict(report.metadata)
    metadata["cutoff0"] = float(report.cutoff0)
    metadata["cutoff1"] = float(report.cutoff1)
    metadata["n_ao"] = len(report.cpt0)
    metadata["n_ls"] = len(report.cpt1)
    paths["metadata"] = write_metadata(out / METADATA_FILE, metadata)
    logger.info("report written to %s", out)
    return paths
