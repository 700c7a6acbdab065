"""Figure rendering for warpbasis CSV exports."""

from .render import FigureInputError, FigureJob, main, render_all

__all__ = ["FigureInputError", "FigureJob", "main", "render_all"]
