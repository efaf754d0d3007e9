"""Readers for the solver's output files (snapshot CSV, report CSV,
legacy structured-points VTK).  The formats are validated strictly; a
malformed header is reported with the offending column."""

from __future__ import annotations

import numpy as np

SNAPSHOT_COLUMNS = ("x", "y", "rho", "mx", "my", "mz", "Bx", "By", "Bz", "E", "p")
REPORT_COLUMNS = ("t", "dt", "theta", "vartheta1_ratio", "vartheta2_ratio",
                  "max_div", "limited_cells", "min_rho", "min_p")


class FormatError(ValueError):
    pass


def _check_header(line: str, expected, path: str):
    got = [c.strip() for c in line.strip().split(",")]
    for k, name in enumerate(expected):
        if k >= len(got) or got[k] != name:
            actual = got[k] if k < len(got) else "<missing>"
            raise FormatError(
                f"{path}: unexpected column {actual!r} at position {k} "
                f"(expected {name!r})")
    if len(got) > len(expected):
        raise FormatError(f"{path}: unexpected extra column {got[len(expected)]!r}")


def read_snapshot_csv(path: str) -> dict:
    """Snapshot table as a dict of 2D (nx, ny) arrays plus the axis vectors."""
    with open(path, "r", encoding="utf-8") as fh:
        _check_header(fh.readline(), SNAPSHOT_COLUMNS, path)
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != len(SNAPSHOT_COLUMNS):
        raise FormatError(f"{path}: wrong column count {data.shape[1]}")
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    nx, ny = xs.size, ys.size
    if nx * ny != data.shape[0]:
        raise FormatError(f"{path}: rows do not form a full grid")
    out = {"x": xs, "y": ys}
    # rows are written y-major (j outer); map back to [i, j]
    order = np.lexsort((data[:, 1], data[:, 0]))
    for k, name in enumerate(SNAPSHOT_COLUMNS[2:], start=2):
        out[name] = data[order, k].reshape(nx, ny)
    return out


def read_linecut_csv(path: str) -> dict:
    """A single-row cut in the snapshot schema, kept as 1D arrays."""
    with open(path, "r", encoding="utf-8") as fh:
        _check_header(fh.readline(), SNAPSHOT_COLUMNS, path)
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return {name: data[:, k] for k, name in enumerate(SNAPSHOT_COLUMNS)}


def read_report_csv(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        _check_header(fh.readline(), REPORT_COLUMNS, path)
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return {name: data[:, k] for k, name in enumerate(REPORT_COLUMNS)}


def read_vtk_structured_points(path: str) -> dict:
    """Legacy ASCII structured-points reader for the solver's snapshots."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith("# vtk DataFile"):
        raise FormatError(f"{path}: not a legacy VTK file")
    idx = {ln.split()[0]: k for k, ln in enumerate(lines)
           if ln and ln.split()[0] in ("DIMENSIONS", "ORIGIN", "SPACING",
                                       "POINT_DATA")}
    for key in ("DIMENSIONS", "ORIGIN", "SPACING", "POINT_DATA"):
        if key not in idx:
            raise FormatError(f"{path}: missing {key}")
    nx, ny, nz = (int(v) for v in lines[idx["DIMENSIONS"]].split()[1:4])
    origin = tuple(float(v) for v in lines[idx["ORIGIN"]].split()[1:4])
    spacing = tuple(float(v) for v in lines[idx["SPACING"]].split()[1:4])
    npts = int(lines[idx["POINT_DATA"]].split()[1])
    if npts != nx * ny * nz:
        raise FormatError(f"{path}: POINT_DATA does not match DIMENSIONS")
    fields = {}
    k = idx["POINT_DATA"] + 1
    while k < len(lines):
        if not lines[k].strip():
            k += 1
            continue
        parts = lines[k].split()
        if parts[0] != "SCALARS":
            raise FormatError(f"{path}: expected SCALARS block, got {lines[k]!r}")
        name = parts[1]
        k += 2   # skip LOOKUP_TABLE
        vals = []
        while k < len(lines) and len(vals) < npts:
            vals.extend(float(v) for v in lines[k].split())
            k += 1
        if len(vals) != npts:
            raise FormatError(f"{path}: field {name!r} truncated")
        fields[name] = np.array(vals).reshape(ny, nx).T   # rows were y-major
    return {"dims": (nx, ny, nz), "origin": origin, "spacing": spacing,
            "fields": fields}
