"""Command line front end: config parsing, run orchestration, output files.

Exit codes: 0 success, 2 usage error, 3 positivity failure (expected when
the admissibility limiter is disabled on the harsh problems), 4 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import physics
from .diagnostics import RunReport
from .driver import Simulation
from .mesh import Mesh
from .problems import PROBLEM_IDS, make_problem

__all__ = ["RunConfig", "parse_config", "run", "write_snapshot",
           "write_linecut", "main"]

SNAPSHOT_HEADER = "x,y,rho,mx,my,mz,Bx,By,Bz,E,p"


@dataclass
class RunConfig:
    problem: str
    nx: int | None = None
    ny: int | None = None
    degree: int = 2
    cfl: float | None = None
    tend: float | None = None
    pp_limiter: bool = True
    tvb_m: float | None = None
    out: str = "out"
    dump_every: int = 0
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.degree not in (0, 1, 2):
            raise ValueError("degree must be 0, 1, or 2")
        if self.cfl is not None and not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if self.nx is not None and self.nx < 4 or self.ny is not None and self.ny < 4:
            raise ValueError("mesh must be at least 4 cells per direction")
        if self.problem not in PROBLEM_IDS:
            raise ValueError(f"unknown problem {self.problem!r}")


class UsageError(Exception):
    pass


_FLAGS = {
    "problem": str, "nx": int, "ny": int, "degree": int, "cfl": float,
    "tend": float, "tvb_m": float, "out": str, "dump_every": int,
    "seed": int, "threads": int, "no_pp_limiter": bool,
}


def _read_config_file(path: str) -> dict:
    vals = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{ln}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _FLAGS:
                raise UsageError(f"{path}:{ln}: unknown key {key!r}")
            typ = _FLAGS[key]
            if typ is bool:
                if val.lower() not in ("true", "false", "1", "0"):
                    raise UsageError(f"{path}:{ln}: boolean expected")
                vals[key] = val.lower() in ("true", "1")
            else:
                vals[key] = typ(val)
    return vals


def _build_argparser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ppmhd",
        description="Positivity-preserving locally divergence-free DG solver "
                    "for 2D ideal MHD")
    ap.add_argument("--problem", choices=sorted(PROBLEM_IDS))
    ap.add_argument("--nx", type=int)
    ap.add_argument("--ny", type=int)
    ap.add_argument("--degree", type=int, choices=(0, 1, 2))
    ap.add_argument("--cfl", type=float)
    ap.add_argument("--tend", type=float)
    ap.add_argument("--no-pp-limiter", action="store_true", default=None,
                    help="disable the admissibility limiter (harsh problems "
                         "are then expected to fail)")
    ap.add_argument("--tvb-m", type=float,
                    help="oscillation-limiter constant; overrides the "
                         "problem default")
    ap.add_argument("--out", type=str)
    ap.add_argument("--dump-every", type=int,
                    help="snapshot cadence in steps (0: final only)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--threads", type=int)
    ap.add_argument("--config", type=str, help="flat key=value config file")
    return ap


def parse_config(argv, config_file: str | None = None) -> RunConfig:
    """Build a RunConfig from flags, with file values as defaults."""
    ap = _build_argparser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:     # argparse already printed the message
        raise UsageError("bad command line") from exc
    vals: dict = {}
    path = config_file if config_file is not None else ns.config
    if path:
        vals.update(_read_config_file(path))
    for key in _FLAGS:
        flag = getattr(ns, key if key != "no_pp_limiter" else "no_pp_limiter", None)
        if flag is not None:
            vals[key] = flag
    no_pp = vals.pop("no_pp_limiter", False)
    if "problem" not in vals:
        raise UsageError("a problem id is required (--problem)")
    try:
        return RunConfig(pp_limiter=not no_pp, **vals)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


def _averages_with_pressure(sim: Simulation):
    avg = sim.field.cell_averages()
    p = (sim.eos.gamma - 1.0) * physics.internal_energy_arr(avg)
    return avg, p


def write_snapshot(sim_or_avg, mesh: Mesh, out_dir: str, step: int,
                   gamma: float | None = None) -> tuple[str, str]:
    """Write the cell-average grid as CSV and legacy structured-points VTK.

    Accepts either a Simulation or a raw (nx, ny, 8) average array plus the
    gamma needed for the derived pressure column.  Returns the two paths.
    """
    if isinstance(sim_or_avg, Simulation):
        avg, p = _averages_with_pressure(sim_or_avg)
    else:
        avg = np.asarray(sim_or_avg, dtype=float)
        if gamma is None:
            raise ValueError("gamma required for raw average arrays")
        p = (gamma - 1.0) * physics.internal_energy_arr(avg)
    xc, yc = mesh.cell_centers_x(), mesh.cell_centers_y()
    csv_path = os.path.join(out_dir, f"snap_{step:06d}.csv")
    vtk_path = os.path.join(out_dir, f"snap_{step:06d}.vtk")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(SNAPSHOT_HEADER + "\n")
        for j in range(mesh.ny):
            for i in range(mesh.nx):
                row = avg[i, j]
                fh.write("%.17g,%.17g," % (xc[i], yc[j]))
                fh.write(",".join("%.17g" % v for v in row))
                fh.write(",%.17g\n" % p[i, j])
    names = ("rho", "mx", "my", "mz", "Bx", "By", "Bz", "E", "p")
    fields = [avg[:, :, c] for c in range(8)] + [p]
    with open(vtk_path, "w", encoding="utf-8") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("ppmhd cell averages\n")
        fh.write("ASCII\nDATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {mesh.nx} {mesh.ny} 1\n")
        fh.write(f"ORIGIN {xc[0]:.17g} {yc[0]:.17g} 0\n")
        fh.write(f"SPACING {mesh.dx:.17g} {mesh.dy:.17g} 1\n")
        fh.write(f"POINT_DATA {mesh.nx * mesh.ny}\n")
        for name, data in zip(names, fields):
            fh.write(f"SCALARS {name} double\nLOOKUP_TABLE default\n")
            for j in range(mesh.ny):
                fh.write(" ".join("%.17g" % data[i, j] for i in range(mesh.nx)))
                fh.write("\n")
    return csv_path, vtk_path


def write_linecut(sim_or_avg, mesh: Mesh, j: int, path: str,
                  gamma: float | None = None) -> str:
    """Write one mesh row (fixed j) in the snapshot CSV schema."""
    if isinstance(sim_or_avg, Simulation):
        avg, p = _averages_with_pressure(sim_or_avg)
    else:
        avg = np.asarray(sim_or_avg, dtype=float)
        p = (gamma - 1.0) * physics.internal_energy_arr(avg)
    xc, yc = mesh.cell_centers_x(), mesh.cell_centers_y()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SNAPSHOT_HEADER + "\n")
        for i in range(mesh.nx):
            fh.write("%.17g,%.17g," % (xc[i], yc[j]))
            fh.write(",".join("%.17g" % v for v in avg[i, j]))
            fh.write(",%.17g\n" % p[i, j])
    return path


def run(config: RunConfig):
    """Execute a configured run; returns (exit_code, RunResult or None)."""
    try:
        spec = make_problem(config.problem, {"tvb_m": config.tvb_m})
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2, None
    import numba
    numba.set_num_threads(max(1, config.threads))
    sim = Simulation(spec, nx=config.nx, ny=config.ny, k=config.degree,
                     cfl=config.cfl, pp_limiter=config.pp_limiter,
                     tvb_m="problem" if config.tvb_m is None else config.tvb_m)
    try:
        os.makedirs(config.out, exist_ok=True)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4, None

    def callback(s: Simulation):
        if config.dump_every > 0 and s.steps % config.dump_every == 0:
            write_snapshot(s, s.mesh, config.out, s.steps)

    try:
        result = sim.run(t_end=config.tend, callback=callback)
        write_snapshot(sim, sim.mesh, config.out, sim.steps)
        if spec.id in ("rotated_tube", "shock_tube"):
            write_linecut(sim, sim.mesh, 0, os.path.join(config.out, "cut_j0.csv"))
        result.report.to_csv(os.path.join(config.out, "report.csv"))
        with open(os.path.join(config.out, "status.txt"), "w", encoding="utf-8") as fh:
            if result.failed:
                fh.write(f"positivity failure at t = {result.t:.9g}\n")
                fh.write(result.failure_message + "\n")
            else:
                fh.write(f"completed t = {result.t:.9g} in {result.steps} steps\n")
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4, None
    if result.failed:
        print(f"positivity failure at t = {result.t:.9g}: "
              f"{result.failure_message}", file=sys.stderr)
        return 3, result
    return 0, result


def main(argv=None) -> int:
    try:
        config = parse_config(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    code, _ = run(config)
    return code


if __name__ == "__main__":
    sys.exit(main())
