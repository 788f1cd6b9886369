"""Log-log robustness plots for noisy-VQE sweep CSVs."""

from .render import (
    DEGENERATE_DISTANCE,
    EXPECTED_COLUMNS,
    PlotDataError,
    PlotSpec,
    SweepSeries,
    read_sweep_csv,
    render,
    series_label,
)

__version__ = "0.1.0"

__all__ = [
    "DEGENERATE_DISTANCE",
    "EXPECTED_COLUMNS",
    "PlotDataError",
    "PlotSpec",
    "SweepSeries",
    "read_sweep_csv",
    "render",
    "series_label",
    "__version__",
]
