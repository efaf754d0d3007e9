"""Offline figure generation for the MHD solver's CSV/VTK outputs."""

from .figures import FigureSpec, FormatError, render
from .io import (read_linecut_csv, read_report_csv, read_snapshot_csv,
                 read_vtk_structured_points)

__version__ = "0.1.0"
