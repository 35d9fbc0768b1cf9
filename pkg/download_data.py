import argparse
import logging
import os
from typing import List

import numpy as np
import pandas as pd

from toolkits.csv_io import write_changes, write_matrix

logger = logging.getLogger(__name__)

POWER_URL = (
    "https://archive.ics.uci.edu/ml/machine-learning-databases/00235/"
    "household_power_consumption.zip"
)
POWER_COLUMNS = [
    "Global_active_power",
    "Global_reactive_power",
    "Voltage",
    "Global_intensity",
    "Sub_metering_1",
    "Sub_metering_2",
    "Sub_metering_3",
]
SUB_METERINGS = POWER_COLUMNS[4:]
MINUTES_PER_DAY = 1440


def read_power_archive(source: str = POWER_URL) -> pd.DataFrame:
    """
    Read the household power-consumption archive (URL or local .zip/.txt).

    Missing readings ('?') become NaN; rows are indexed by timestamp.
    """
    logger.info("Reading power data from %s ...", source)
    frame = pd.read_csv(source, sep=";", na_values=["?"], low_memory=False)
    stamps = pd.to_datetime(frame["Date"] + " " + frame["Time"], format="%d/%m/%Y %H:%M:%S")
    frame = frame.set_index(stamps)[POWER_COLUMNS].astype(float)
    return frame


def one_day(frame: pd.DataFrame, day: str) -> pd.DataFrame:
    """The 1440 minutes of one calendar day with gaps linearly interpolated."""
    start = pd.Timestamp(day)
    minutes = pd.date_range(start, periods=MINUTES_PER_DAY, freq="min")
    sliced = frame.reindex(minutes)
    missing = int(sliced.isna().any(axis=1).sum())
    if missing == MINUTES_PER_DAY:
        raise ValueError(f"no readings on {day}")
    if missing:
        logger.info("interpolating %d missing minutes on %s", missing, day)
    return sliced.interpolate(method="linear", limit_direction="both")


def _drop_short_runs(active: np.ndarray, min_run: int) -> np.ndarray:
    """Merge on/off runs shorter than min_run into the preceding run."""
    out = active.copy()
    start = 0
    for i in range(1, len(out) + 1):
        if i == len(out) or out[i] != out[start]:
            if i - start < min_run and start > 0:
                out[start:i] = out[start - 1]
            start = i
    return out


def submetering_truth(day_frame: pd.DataFrame, tol: float = 1.0, min_run: int = 2) -> List[int]:
    """
    Level-shift truth from the sub-meterings: 1-based minutes where a
    sub-metering leaves or returns to its base level (the daily mode).
    """
    changes = set()
    for column in SUB_METERINGS:
        values = day_frame[column].to_numpy()
        base = pd.Series(np.round(values)).mode().iloc[0]
        active = _drop_short_runs(np.abs(values - base) > tol, min_run)
        flips = np.flatnonzero(active[1:] != active[:-1]) + 2
        changes.update(int(n) for n in flips)
    return sorted(changes)


def download_power_day(day: str = "2007-02-01", target_dir: str = None, source: str = POWER_URL):
    """
    Writes power_<day>.csv (7 channels as rows, 1440 columns) and
    power_<day>_truth.csv (sub-metering level shifts) into target_dir.
    """
    if target_dir is None:
        current_dir = os.path.dirname(os.path.abspath(__file__))
        target_dir = os.path.join(current_dir, "data")
    os.makedirs(target_dir, exist_ok=True)

    day_frame = one_day(read_power_archive(source), day)
    truth = submetering_truth(day_frame)
    data_path = os.path.join(target_dir, f"power_{day}.csv")
    truth_path = os.path.join(target_dir, f"power_{day}_truth.csv")
    write_matrix(data_path, day_frame.to_numpy().T)
    write_changes(truth_path, [], truth)
    logger.info("Wrote %s and %s (%d level shifts)", data_path, truth_path, len(truth))
    return data_path, truth_path


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = argparse.ArgumentParser(description="Fetch one day of household power consumption")
    parser.add_argument("--day", default="2007-02-01", help="Calendar day, YYYY-MM-DD")
    parser.add_argument("--source", default=POWER_URL, help="Archive URL or local path")
    parser.add_argument("--target_dir", help="Output directory (default: ./data)")
    args = parser.parse_args()
    download_power_day(args.day, args.target_dir, args.source)
