"""Run orchestration: initialization, the limited SSP-RK3 loop, diagnostics.

The loop follows the scheme's operating procedure: project the initial data,
then per step (i) limit the field (oscillation limiter first, then the
admissibility limiter), (ii) set the LF viscosities from the limited traces
and the step size from the jump-aware CFL bound, (iii) advance the three RK
stages with stage-wise limiting, asserting the admissibility of every stage's
cell averages.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .basis import DGField
from .diagnostics import RunReport
from .limiters import pp_limit_field, tvb_limit
from .mesh import fill_ghosts
from .problems import ProblemSpec
from .scheme import PositivityError, SchemeParams, dg_operator, dg_stats
from .timestep import cfl_dg

__all__ = ["RunResult", "run_problem", "Simulation"]


@dataclass
class RunResult:
    field: DGField
    report: RunReport
    t: float
    steps: int
    failed: bool = False
    failure_message: str = ""


class Simulation:
    """Stateful driver for one configured problem."""

    def __init__(self, spec: ProblemSpec, nx: int | None = None,
                 ny: int | None = None, k: int = 2, cfl: float | None = None,
                 pp_limiter: bool = True, tvb_m: float | None = "problem",
                 margin: float = 1.0001):
        self.spec = spec
        self.mesh = spec.build_mesh(nx, ny)
        self.eos = spec.eos()
        self.k = k
        self.cfl = float(cfl if cfl is not None else spec.cfl)
        self.pp_limiter = pp_limiter
        self.tvb_m = spec.tvb_m if tvb_m == "problem" else tvb_m
        self.margin = margin
        self.t = 0.0
        self.steps = 0
        self.report = RunReport()
        self.field = DGField.project(self.mesh, k, spec.init)
        self.last_limited = 0
        self.last_minima = (np.nan, np.nan)

    # -- limiting ----------------------------------------------------------
    def limit(self, fld: DGField) -> int:
        fill_ghosts(fld.coef, self.mesh, fld.tables, self.t)
        if self.tvb_m is not None:
            tvb_limit(fld, self.tvb_m, self.eos)
        count = 0
        if self.pp_limiter:
            count, min_rho, min_e = pp_limit_field(fld)
            self.last_minima = (min_rho, min_e)
        else:
            t = fld.tables
            min_rho, min_e = K.scan_pp_minima(fld.coef, t.ns, t.nv,
                                              t.phi_pp, t.b1_pp, t.b2_pp)
            self.last_minima = (min_rho, min_e)
        fill_ghosts(fld.coef, self.mesh, fld.tables, self.t)
        return count

    def _check_avgs(self, fld: DGField, label: str):
        i, j = K.check_averages(fld.coef, fld.tables.const_dofs, 1e-11)
        if i >= 0:
            raise PositivityError(
                f"inadmissible cell average after {label} at cell ({i}, {j}), "
                f"t = {self.t:.9g}")

    def _stage_rhs(self, fld: DGField):
        params = SchemeParams(margin=self.margin)
        res, _ = dg_operator(fld, self.eos, params, guard=True)
        return res

    # -- one full RK step ----------------------------------------------------
    def step(self, dt_cap: float | None = None) -> float:
        self.last_limited = self.limit(self.field)
        stats = dg_stats(self.field, self.eos)
        if max(stats.alpha1_pp, stats.alpha2_pp) >= 1e100:
            raise PositivityError(
                f"viscosity bound diverged at t = {self.t:.9g}; an interface "
                f"trace left the admissible set")
        params = SchemeParams(alpha1=self.margin * max(stats.alpha1_pp, 1e-300),
                              alpha2=self.margin * max(stats.alpha2_pp, 1e-300),
                              margin=self.margin)
        rep = cfl_dg(self.field, self.mesh, params, self.eos, self.cfl, stats=stats)
        dt = rep.dt if dt_cap is None else min(rep.dt, dt_cap)

        gamma = self.eos.gamma
        min_rho, min_e = self.last_minima
        self.report.add(self.t, dt, rep.theta,
                        stats.vartheta1 / rep.alpha1, stats.vartheta2 / rep.alpha2,
                        stats.max_div, self.last_limited,
                        min_rho, (gamma - 1.0) * min_e)

        u0 = self.field
        r = self._stage_rhs(u0)
        u1 = u0.copy()
        u1.interior[...] = u0.interior + dt * r
        self._check_avgs(u1, "stage 1")
        self.limit(u1)
        r = self._stage_rhs(u1)
        u2 = u0.copy()
        u2.interior[...] = 0.75 * u0.interior + 0.25 * (u1.interior + dt * r)
        self._check_avgs(u2, "stage 2")
        self.limit(u2)
        r = self._stage_rhs(u2)
        out = u0.copy()
        out.interior[...] = (u0.interior + 2.0 * (u2.interior + dt * r)) / 3.0
        self._check_avgs(out, "stage 3")

        self.field = out
        self.t += dt
        self.steps += 1
        return dt

    def run(self, t_end: float | None = None, max_steps: int = 10 ** 9,
            callback=None) -> RunResult:
        t_end = float(t_end if t_end is not None else self.spec.t_end)
        try:
            while self.t < t_end * (1.0 - 1e-13) and self.steps < max_steps:
                self.step(dt_cap=t_end - self.t)
                if callback is not None:
                    callback(self)
        except PositivityError as exc:
            return RunResult(self.field, self.report, self.t, self.steps,
                             failed=True, failure_message=str(exc))
        # leave the final field limited so admissibility holds pointwise
        self.limit(self.field)
        return RunResult(self.field, self.report, self.t, self.steps)


def run_problem(spec: ProblemSpec, **kwargs) -> RunResult:
    sim_kwargs = {k: kwargs.pop(k) for k in
                  ("nx", "ny", "k", "cfl", "pp_limiter", "tvb_m", "margin")
                  if k in kwargs}
    callback = kwargs.pop("callback", None)
    t_end = kwargs.pop("t_end", None)
    max_steps = kwargs.pop("max_steps", 10 ** 9)
    if kwargs:
        raise TypeError(f"unknown run options: {sorted(kwargs)}")
    sim = Simulation(spec, **sim_kwargs)
    return sim.run(t_end=t_end, max_steps=max_steps, callback=callback)
