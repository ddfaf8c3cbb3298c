"""Offline rendering of ewave result files into figures and animations.

Pure file -> file: nothing here computes physics, every curve drawn comes
from a column the simulation CLI wrote.
"""

from .figures import FIGURE_KINDS, FigureJob, render
from .io import SchemaError, load_frames, load_scan, load_spectrum, read_table

__all__ = [
    "FIGURE_KINDS",
    "FigureJob",
    "SchemaError",
    "load_frames",
    "load_scan",
    "load_spectrum",
    "read_table",
    "render",
]

__version__ = "0.1.0"
