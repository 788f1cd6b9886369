"""Render sweep CSVs as log-log distance-vs-level figures.

The input format is the sweep CSV emitted by the vqenoise package:

    problem_id,noise_kind,epsilon,distance_l2,distance_linf,
    final_cost_noisy,final_cost_clean,iterations,flag

Rows flagged anything other than ``ok`` and rows whose distance is below
the degeneracy floor are dropped before fitting, mirroring the slope
protocol on the producing side, so the annotated slope agrees with the
producer's fit on the same file.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

EXPECTED_COLUMNS = (
    "problem_id",
    "noise_kind",
    "epsilon",
    "distance_l2",
    "distance_linf",
    "final_cost_noisy",
    "final_cost_clean",
    "iterations",
    "flag",
)

DEGENERATE_DISTANCE = 1e-12


class PlotDataError(ValueError):
    """Raised when an input CSV does not match the sweep schema."""


@dataclass(frozen=True)
class SweepSeries:
    """Usable (epsilon, distance) points from one CSV plus its fit."""

    path: str
    epsilons: np.ndarray
    distances: np.ndarray
    slope: float
    intercept: float
    dropped: int


@dataclass(frozen=True)
class PlotSpec:
    input_csvs: tuple
    labels: tuple
    output_image: str
    log_axes: bool = True

    def __post_init__(self):
        csvs = tuple(str(p) for p in self.input_csvs)
        labels = tuple(str(s) for s in self.labels)
        if len(csvs) == 0:
            raise PlotDataError("at least one input CSV is required")
        if len(labels) != len(csvs):
            raise PlotDataError(
                f"{len(labels)} labels for {len(csvs)} input files; counts must match"
            )
        object.__setattr__(self, "input_csvs", csvs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "output_image", str(self.output_image))


def read_sweep_csv(path) -> SweepSeries:
    """Parse one sweep CSV and fit a log-log line to its usable rows."""
    path = Path(path)
    if not path.exists():
        raise PlotDataError(f"input file {path} does not exist")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PlotDataError(f"input file {path} is empty") from None
        if tuple(header) != EXPECTED_COLUMNS:
            missing = [c for c in EXPECTED_COLUMNS if c not in header]
            extra = [c for c in header if c not in EXPECTED_COLUMNS]
            if missing:
                raise PlotDataError(
                    f"{path}: missing column {missing[0]!r} in header"
                )
            if extra:
                raise PlotDataError(f"{path}: unexpected column {extra[0]!r} in header")
            raise PlotDataError(
                f"{path}: columns out of order, expected {','.join(EXPECTED_COLUMNS)}"
            )
        rows = list(reader)
    if not rows:
        raise PlotDataError(f"input file {path} has a header but no data rows")

    eps, dist, dropped = [], [], 0
    col = {name: i for i, name in enumerate(EXPECTED_COLUMNS)}
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(EXPECTED_COLUMNS):
            raise PlotDataError(
                f"{path}: line {lineno} has {len(row)} fields, expected "
                f"{len(EXPECTED_COLUMNS)}"
            )
        try:
            e = float(row[col["epsilon"]])
            d = float(row[col["distance_l2"]])
        except ValueError as err:
            raise PlotDataError(f"{path}: line {lineno}: {err}") from None
        if row[col["flag"]] != "ok" or not np.isfinite(d) or d <= DEGENERATE_DISTANCE:
            dropped += 1
            continue
        eps.append(e)
        dist.append(d)

    if len(eps) < 1:
        raise PlotDataError(f"input file {path} has no usable rows")
    eps_arr = np.asarray(eps, dtype=np.float64)
    dist_arr = np.asarray(dist, dtype=np.float64)
    if len(eps) >= 2:
        slope, intercept = np.polyfit(np.log(eps_arr), np.log(dist_arr), 1)
    else:
        slope, intercept = float("nan"), float("nan")
    return SweepSeries(
        path=str(path),
        epsilons=eps_arr,
        distances=dist_arr,
        slope=float(slope),
        intercept=float(intercept),
        dropped=dropped,
    )


def series_label(label: str, series: SweepSeries) -> str:
    return f"{label} (slope≈{series.slope:.2f})"


def render(spec: PlotSpec):
    """Draw every CSV in ``spec`` into one figure and save it.

    Each file contributes a scatter of its usable rows plus the fitted
    power law as a line, labeled "<label> (slope~X.XX)". Returns the
    matplotlib Figure so callers can inspect the layout.
    """
    all_series = [read_sweep_csv(p) for p in spec.input_csvs]

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for label, series in zip(spec.labels, all_series):
        text = series_label(label, series)
        sc = ax.scatter(series.epsilons, series.distances, s=28, zorder=3, label=text)
        if np.isfinite(series.slope):
            grid = np.linspace(
                np.log(series.epsilons.min()), np.log(series.epsilons.max()), 50
            )
            ax.plot(
                np.exp(grid),
                np.exp(series.intercept + series.slope * grid),
                linewidth=1.2,
                color=sc.get_facecolor()[0],
                alpha=0.8,
            )
    if spec.log_axes:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("perturbation level")
    ax.set_ylabel("parameter distance")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.output_image, dpi=150)
    return fig
