"""CSV sample files and experiment report output.

Floats are written with ``repr`` (shortest round-trip form), so files read
back to the same bits.
"""

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .estimators import SampleSet
from .experiments import log_plot_data

REPORT_COLUMNS = ("n", "trials", "bias", "bias_ci", "variance", "variance_ci")
PLOT_COLUMNS = ("log10_n", "log10_abs_bias", "log10_variance")


class DataError(ValueError):
    """Malformed or unusable input data."""


@dataclass
class LoadedSamples:
    samples: SampleSet
    header: list | None
    duplicates: list


def _is_header(fields):
    try:
        [float(f) for f in fields]
    except ValueError:
        return True
    return False


def read_csv_rows(path):
    """Parse a numeric CSV; returns (rows as float array, header or None)."""
    rows = []
    header = None
    width = None
    with open(path, newline="") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            fields = [f.strip() for f in fields]
            if not fields or all(f == "" for f in fields):
                continue
            if lineno == 1 and header is None and _is_header(fields):
                header = fields
                width = len(fields)
                continue
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise DataError(f"{path}:{lineno}: expected {width} columns, got {len(fields)}")
            try:
                values = [float(f) for f in fields]
            except ValueError:
                bad = next(f for f in fields if not _parses(f))
                raise DataError(f"{path}:{lineno}: cannot parse {bad!r} as a number") from None
            if not all(math.isfinite(v) for v in values):
                raise DataError(f"{path}:{lineno}: NaN or infinite value")
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64), header


def _parses(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def duplicate_rows(data):
    """Indices of rows equal to an earlier row."""
    _, first, inverse = np.unique(data, axis=0, return_index=True, return_inverse=True)
    return sorted(int(i) for i in np.flatnonzero(first[inverse.ravel()] != np.arange(len(data))))


def load_samples(path):
    """Load a CSV of samples (one row each, header optional)."""
    data, header = read_csv_rows(path)
    if data.shape[0] < 2:
        raise DataError(f"{path}: need at least 2 samples, got {data.shape[0]}")
    return LoadedSamples(SampleSet(data), header, duplicate_rows(data))


def load_pair(path=None, dx=None, x_path=None, y_path=None):
    """Load (x, y) either from one file split after column ``dx`` or from two files."""
    if path is not None:
        if dx is None:
            raise DataError("a column split (dx) is required with a single input file")
        data, _ = read_csv_rows(path)
        if not 1 <= dx < data.shape[1]:
            raise DataError(f"{path}: dx={dx} must leave at least one column on each side "
                            f"(file has {data.shape[1]} columns)")
        x, y = data[:, :dx], data[:, dx:]
    else:
        x, _ = read_csv_rows(x_path)
        y, _ = read_csv_rows(y_path)
        if x.shape[0] != y.shape[0]:
            raise DataError(f"x has {x.shape[0]} samples but y has {y.shape[0]}")
    if x.shape[0] < 2:
        raise DataError("need at least 2 samples")
    return SampleSet(x), SampleSet(y)


def save_samples(samples, path, header=None):
    data = SampleSet.of(samples).data
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(header)
        for row in data:
            writer.writerow([repr(float(v)) for v in row])


def _fmt(value):
    return repr(float(value)) if isinstance(value, float) else str(value)


def report_rows(report):
    return [[r.n, r.trials, r.bias, r.bias_ci, r.variance, r.variance_ci] for r in report.rows]


def write_report(report, out_dir):
    """Write report.csv, summary.json and plot_data.csv into ``out_dir``; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, name)
             for name in ("report.csv", "summary.json", "plot_data.csv")}
    with open(paths["report.csv"], "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in report_rows(report):
            writer.writerow([_fmt(v) for v in row])
    with open(paths["plot_data.csv"], "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PLOT_COLUMNS)
        for row in log_plot_data(report.rows):
            writer.writerow([_fmt(v) for v in row])
    with open(paths["summary.json"], "w") as fh:
        json.dump(report.summary(), fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return paths


def read_report_csv(path):
    """Rows of a report.csv as dicts with int/float fields."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise DataError(f"{path}: unexpected header {reader.fieldnames}")
        return [{k: (int(v) if k in ("n", "trials") else float(v)) for k, v in row.items()}
                for row in reader]
