"""Render figure analogs from causalpm experiment CSV outputs.

Consumes only the harness's CSV/JSON files; the simulation package is
never imported, so figures can be re-rendered from archived run outputs
alone.
"""

__version__ = "0.1.0"

from .plot import FIGURE_KINDS, PlotSpec, SpecError, plot_figure

__all__ = ["FIGURE_KINDS", "PlotSpec", "SpecError", "plot_figure"]
