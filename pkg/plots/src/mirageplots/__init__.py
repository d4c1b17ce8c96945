"""Renders the four experiment figures from miragesim CSV/manifest output
directories.  Consumes only the documented CSV contract; never imports the
simulator."""

from .render import FigureJob, FigureKind, SchemaError, render

__version__ = "0.1.0"

__all__ = ["FigureJob", "FigureKind", "SchemaError", "render", "__version__"]
