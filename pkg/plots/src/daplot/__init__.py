"""Batch figure rendering for assimilation-run CSV outputs."""

__version__ = "0.1.0"

from .figures import FIGURE_KINDS, FigureSpec, read_csv, render  # noqa: F401
