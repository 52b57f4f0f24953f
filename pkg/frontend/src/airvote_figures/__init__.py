"""Figure rendering for airvote experiment outputs."""

__version__ = "0.1.0"

from .render import FigureError, FigureInput, FigureSpec, empirical_ccdf, load_spec, render
