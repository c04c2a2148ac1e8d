"""Static plots from qtlp diagnostics CSV files."""

__version__ = "0.1.0"

from .plots import (  # noqa: F401
    PLOT_KINDS,
    SCHEMA,
    PlotSpec,
    read_diagnostics,
    render,
)
