"""CSV formats: observations, test outcomes, experiment reports."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from nsqlr.errors import DataError
from nsqlr.grid import ObservationGrid
from nsqlr.simulate import NonsyncData

OBS_HEADER = ["component", "time", "value"]
OUTCOME_HEADER = ["test", "statistic", "df", "p_value", "alpha", "reject"]


def fmt_number(x: float) -> str:
    """Positional decimal with 17 significant digits, trailing zeros trimmed (round-trips exactly)."""
    return np.format_float_positional(float(x), precision=17, unique=False, fractional=False, trim="-")


def write_observations(data: NonsyncData, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(OBS_HEADER) + "\n")
        for comp, grid, values in ((1, data.grid1, data.values1), (2, data.grid2, data.values2)):
            for t, v in zip(grid.times, values):
                fh.write(f"{comp},{fmt_number(t)},{fmt_number(v)}\n")


def read_observations(path) -> NonsyncData:
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"{path}: cannot open ({exc.strerror})") from None
    times = {1: [], 2: []}
    values = {1: [], 2: []}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != OBS_HEADER:
            raise DataError(f"{path}: header must be {','.join(OBS_HEADER)!r}, got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                comp, t, v = int(row[0]), float(row[1]), float(row[2])
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed row {row!r}") from None
            if comp not in (1, 2):
                raise DataError(f"{path}:{lineno}: component must be 1 or 2, got {comp}")
            times[comp].append(t)
            values[comp].append(v)
    try:
        g1 = ObservationGrid(np.array(times[1]), 1)
        g2 = ObservationGrid(np.array(times[2]), 2)
        return NonsyncData(g1, g2, np.array(values[1]), np.array(values[2]))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def outcome_row(outcome) -> list:
    return [outcome.test, fmt_number(outcome.statistic), str(outcome.df), fmt_number(outcome.p_value),
            repr(outcome.alpha), "true" if outcome.reject else "false"]


def write_outcomes(outcomes, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(OUTCOME_HEADER) + "\n")
        for out in outcomes:
            fh.write(",".join(outcome_row(out)) + "\n")
