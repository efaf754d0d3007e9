"""CFL control and the SSP-RK3 driver step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .basis import DGField
from .limiters import pp_limit_field, tvb_limit
from .mesh import Mesh, fill_ghosts
from .scheme import (DGStats, PositivityError, SchemeParams, dg_operator,
                     dg_stats, discrete_divergence_fo)

__all__ = ["CflReport", "cfl_first_order", "cfl_dg", "ssp_rk3_step",
           "ssp_rk3_combine"]


@dataclass(frozen=True)
class CflReport:
    dt: float
    alpha1: float
    alpha2: float
    binding: str
    vartheta: float = 0.0          # first-order jump term
    theta: float = 1.0             # DG jump attenuation factor
    vartheta1: float = 0.0
    vartheta2: float = 0.0
    lambda_sum: float = 0.0        # dt (a1/dx + a2/dy) actually taken
    lambda_limit: float = 0.0      # theorem bound on the same quantity

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("time step must be positive")
        if self.lambda_sum > self.lambda_limit * (1 + 1e-12):
            raise ValueError("reported step exceeds its stability bound")


def cfl_first_order(avgs: np.ndarray, mesh: Mesh, params: SchemeParams,
                    eos, cfl_fraction: float = 0.9) -> CflReport:
    """Step size for the penalized LF scheme on ghosted averages."""
    if not 0.0 < cfl_fraction <= 1.0:
        raise ValueError("cfl fraction must lie in (0, 1]")
    inner = avgs[1:-1, 1:-1]
    div = discrete_divergence_fo(avgs, mesh)
    vt = float(np.max(np.abs(div) / np.sqrt(inner[..., 0])))
    t1 = params.alpha1 / mesh.dx
    t2 = params.alpha2 / mesh.dy
    dt = cfl_fraction / (t1 + t2 + vt)
    binding = ("alpha1/dx", "alpha2/dy", "divergence")[int(np.argmax([t1, t2, vt]))]
    return CflReport(dt=dt, alpha1=params.alpha1, alpha2=params.alpha2,
                     binding=binding, vartheta=vt,
                     lambda_sum=dt * (t1 + t2), lambda_limit=1.0)


def _theta(stats: DGStats, alpha1: float, alpha2: float) -> float:
    return 1.0 / (1.0 + max(stats.vartheta1 / alpha1, stats.vartheta2 / alpha2))


def cfl_dg(field: DGField, mesh: Mesh, params: SchemeParams, eos,
           cfl_fraction: float = 0.15, stats: DGStats | None = None) -> CflReport:
    """Step size dt = fraction * theta * w1 / (a1/dx + a2/dy) for the DG scheme.

    ``w1`` is the endpoint Gauss-Lobatto weight of the enforcement rule and
    theta attenuates the bound by the normal-B interface jumps of the
    (limited) field.  Ghosts must be filled unless `stats` is supplied.
    """
    if not 0.0 < cfl_fraction <= 1.0:
        raise ValueError("cfl fraction must lie in (0, 1]")
    if stats is None:
        stats = dg_stats(field, eos)
    a1 = params.alpha1 if params.alpha1 > 0 else params.margin * stats.alpha1_pp
    a2 = params.alpha2 if params.alpha2 > 0 else params.margin * stats.alpha2_pp
    if a1 <= stats.alpha1_pp or a2 <= stats.alpha2_pp:
        raise ValueError("LF viscosities must strictly exceed the PP bounds")
    th = _theta(stats, a1, a2)
    w1 = field.tables.lobatto_w1
    denom = a1 / mesh.dx + a2 / mesh.dy
    dt = cfl_fraction * th * w1 / denom
    return CflReport(dt=dt, alpha1=a1, alpha2=a2, binding="dg-jump-cfl",
                     theta=th, vartheta1=stats.vartheta1, vartheta2=stats.vartheta2,
                     lambda_sum=dt * denom, lambda_limit=th * w1)


def ssp_rk3_combine(u0, rhs, dt: float, post=None):
    """Three-stage SSP-RK3 on any +/* arithmetic type.

    ``u0`` is assumed already post-processed; ``post`` is applied to each
    intermediate stage before its residual evaluation (the limiter slot).
    Returns the end-of-step state.
    """
    if post is None:
        post = lambda u: u
    u1 = post(u0 + dt * rhs(u0))
    u2 = post(0.75 * u0 + 0.25 * (u1 + dt * rhs(u1)))
    return (1.0 / 3.0) * u0 + (2.0 / 3.0) * (u2 + dt * rhs(u2))


def ssp_rk3_step(field: DGField, mesh: Mesh, params: SchemeParams, eos,
                 dt: float, *, pp_limiter: bool = True, tvb_m: float | None = None,
                 t: float = 0.0, include_source: bool = True,
                 stage_stats: list | None = None):
    """Advance one SSP-RK3 step with stage-wise limiting.

    The field must already be limited (the driver limits each new step
    before computing dt); stage outputs are limited before the following
    residual evaluation.  Raises PositivityError when a stage average
    leaves the admissible set, which the supporting theory excludes when
    the limiter is active.
    """

    def limit(f: DGField):
        fill_ghosts(f.coef, mesh, f.tables, t)
        if tvb_m is not None:
            tvb_limit(f, tvb_m, eos)
        if pp_limiter:
            pp_limit_field(f)
        fill_ghosts(f.coef, mesh, f.tables, t)
        return f

    def rhs(f: DGField):
        p = SchemeParams(margin=params.margin)
        res, st = dg_operator(f, eos, p, include_source=include_source,
                              guard=pp_limiter)
        if stage_stats is not None:
            stage_stats.append((p.alpha1, p.alpha2, st))
        return res

    def check(f: DGField, label: str):
        i, j = K.check_averages(f.coef, f.tables.const_dofs, 1e-11)
        if i >= 0:
            raise PositivityError(
                f"inadmissible cell average after {label} at cell ({i}, {j})")

    u0 = field
    r = rhs(u0)
    u1 = u0.copy()
    u1.interior[...] = u0.interior + dt * r
    check(u1, "stage 1")
    limit(u1)
    r = rhs(u1)
    u2 = u0.copy()
    u2.interior[...] = 0.75 * u0.interior + 0.25 * (u1.interior + dt * r)
    check(u2, "stage 2")
    limit(u2)
    r = rhs(u2)
    out = u0.copy()
    out.interior[...] = (u0.interior + 2.0 * (u2.interior + dt * r)) / 3.0
    check(out, "stage 3")
    return out
