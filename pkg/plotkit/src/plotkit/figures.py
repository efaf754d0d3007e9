"""Figure rendering for solver outputs.

Every render writes the image plus a text sidecar (same path + ``.txt``)
recording colormaps, contour levels, and any reported statistics, so a
figure can be reproduced and its numbers checked without reopening the
image.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import (FormatError, read_linecut_csv, read_report_csv,
                 read_snapshot_csv, read_vtk_structured_points)

__all__ = ["FigureSpec", "render", "FormatError"]

_KINDS = ("schlieren", "contour", "line_overlay", "timeseries", "table")


@dataclass(frozen=True)
class FigureSpec:
    inputs: tuple
    kind: str
    out: str
    field: str = "rho"
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if self.kind not in _KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        for p in self.inputs:
            if not os.path.exists(p):
                raise FileNotFoundError(p)


def _load_grid(path: str) -> dict:
    if path.endswith(".vtk"):
        v = read_vtk_structured_points(path)
        nx, ny, _ = v["dims"]
        out = dict(v["fields"])
        out["x"] = v["origin"][0] + v["spacing"][0] * np.arange(nx)
        out["y"] = v["origin"][1] + v["spacing"][1] * np.arange(ny)
        return out
    return read_snapshot_csv(path)


def _sidecar(path: str, lines) -> str:
    side = path + ".txt"
    with open(side, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return side


def _save(fig, spec: FigureSpec) -> None:
    fig.savefig(spec.out, dpi=int(spec.options.get("dpi", 150)))
    plt.close(fig)


def _render_schlieren(spec: FigureSpec):
    grid = _load_grid(spec.inputs[0])
    rho = grid[spec.field]
    c = float(spec.options.get("c", 10.0))
    gx = np.gradient(rho, axis=0)
    gy = np.gradient(rho, axis=1)
    g = np.hypot(gx, gy)
    gmax = g.max() if g.max() > 0 else 1.0
    img = np.exp(-c * g / gmax)
    cmap = spec.options.get("cmap", "gray")
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.imshow(img.T, origin="lower", cmap=cmap,
              extent=(grid["x"][0], grid["x"][-1], grid["y"][0], grid["y"][-1]))
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    _save(fig, spec)
    return [f"kind = schlieren", f"field = {spec.field}", f"c = {c:.17g}",
            f"cmap = {cmap}", f"max_gradient = {gmax:.17g}"]


def _render_contour(spec: FigureSpec):
    grid = _load_grid(spec.inputs[0])
    z = grid[spec.field]
    nlev = int(spec.options.get("levels", 30))
    lo, hi = float(z.min()), float(z.max())
    if hi <= lo:
        hi = lo + 1.0
    levels = np.linspace(lo, hi, nlev)
    cmap = spec.options.get("cmap", "viridis")
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.contour(grid["x"], grid["y"], z.T, levels=levels, cmap=cmap,
               linewidths=0.7)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    _save(fig, spec)
    return ([f"kind = contour", f"field = {spec.field}", f"cmap = {cmap}",
             "levels:"] + [f"  {v:.17g}" for v in levels])


def _diagonal_component(cut: dict, name: str) -> np.ndarray:
    if name == "Bpar":
        return (cut["Bx"] + cut["By"]) / np.sqrt(2.0)
    if name == "Bperp":
        return (cut["By"] - cut["Bx"]) / np.sqrt(2.0)
    if name == "vpar":
        return (cut["mx"] + cut["my"]) / (np.sqrt(2.0) * cut["rho"])
    if name == "vperp":
        return (cut["my"] - cut["mx"]) / (np.sqrt(2.0) * cut["rho"])
    return cut[name]


def _render_line_overlay(spec: FigureSpec):
    cut = read_linecut_csv(spec.inputs[0])
    name = spec.field
    prof = _diagonal_component(cut, name)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(cut["x"], prof, "o", ms=2.5, label="solution")
    lines = [f"kind = line_overlay", f"field = {name}"]
    if len(spec.inputs) > 1:
        ref = read_linecut_csv(spec.inputs[1])
        rprof = _diagonal_component(ref, name)
        ax.plot(ref["x"], rprof, "-", lw=1.0, label="reference")
        lines.append(f"reference = {spec.inputs[1]}")
    if name in ("Bpar",):
        # the diagonal field component is constant in the exact solution;
        # report the drift against the inflow value (first sample)
        dev = float(np.max(np.abs(prof - prof[0])))
        ax.axhline(prof[0], color="k", lw=0.6)
        lines.append(f"constant_reference = {prof[0]:.17g}")
        lines.append(f"max_deviation = {dev:.17g}")
    ax.set_xlabel("x")
    ax.set_ylabel(name)
    ax.legend(loc="best")
    _save(fig, spec)
    return lines


def _render_timeseries(spec: FigureSpec):
    rep = read_report_csv(spec.inputs[0])
    fig, ax = plt.subplots(figsize=(6, 4))
    t = rep["t"]
    if np.any(np.diff(t) <= 0):
        raise FormatError("report times are not strictly increasing")
    if spec.field == "theta":
        series = {"theta": rep["theta"]}
    elif spec.field == "ratios":
        series = {"vartheta1_ratio": rep["vartheta1_ratio"],
                  "vartheta2_ratio": rep["vartheta2_ratio"]}
    else:
        series = {spec.field: rep[spec.field]}
    for label, vals in series.items():
        ax.plot(t, vals, lw=1.0, label=label)
    ax.set_xlabel("t")
    ax.legend(loc="best")
    _save(fig, spec)
    lines = [f"kind = timeseries", f"field = {spec.field}"]
    for label, vals in series.items():
        lines.append(f"{label}_min = {vals.min():.17g}")
        lines.append(f"{label}_max = {vals.max():.17g}")
    return lines


def _render_table(spec: FigureSpec):
    """Error table with computed refinement rates.

    Input: CSV with header "n,<name>[,<name>...]"; one row per mesh,
    refined by factor two between consecutive rows.
    """
    path = spec.inputs[0]
    with open(path, "r", encoding="utf-8") as fh:
        header = [c.strip() for c in fh.readline().strip().split(",")]
        if header[0] != "n":
            raise FormatError(f"{path}: first column must be 'n'")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    names = header[1:]
    ns = data[:, 0].astype(int)
    cols = ["mesh"]
    for name in names:
        cols += [name, "order"]
    rows = []
    rates = {}
    for r in range(data.shape[0]):
        row = [f"{ns[r]} x {ns[r]}"]
        for k, name in enumerate(names, start=1):
            row.append(f"{data[r, k]:.3e}")
            if r == 0:
                row.append("-")
            else:
                rate = np.log2(data[r - 1, k] / data[r, k])
                rates.setdefault(name, []).append(rate)
                row.append(f"{rate:.2f}")
        rows.append(row)
    fig, ax = plt.subplots(figsize=(1.6 + 1.1 * len(cols), 0.5 + 0.32 * len(rows)))
    ax.axis("off")
    tab = ax.table(cellText=rows, colLabels=cols, loc="center")
    tab.scale(1.0, 1.3)
    _save(fig, spec)
    lines = [f"kind = table"]
    for name, rs in rates.items():
        lines.append(f"{name}_orders = " + ", ".join(f"{r:.4f}" for r in rs))
    return lines


_RENDERERS = {
    "schlieren": _render_schlieren,
    "contour": _render_contour,
    "line_overlay": _render_line_overlay,
    "timeseries": _render_timeseries,
    "table": _render_table,
}


def render(spec: FigureSpec) -> tuple[str, str]:
    """Render a figure; returns (image_path, sidecar_path)."""
    lines = [f"inputs = {', '.join(spec.inputs)}"] + _RENDERERS[spec.kind](spec)
    side = _sidecar(spec.out, lines)
    return spec.out, side
