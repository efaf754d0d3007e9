"""Spatial discretizations.

``first_order_step`` is a plain-numpy implementation of the penalized LF
update on cell averages; it doubles as the independent oracle for the K = 0
DG operator.  ``dg_operator`` drives the numba kernels and returns the
semidiscrete residual together with the interface statistics (viscosity
bounds, normal-B jump ratios, discrete divergence) the CFL theory needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from . import physics
from .basis import BasisTables, DGField
from .mesh import Mesh

__all__ = [
    "InterfaceTrace", "SchemeParams", "PositivityError",
    "lf_flux", "interface_b_jump", "discrete_divergence_fo",
    "first_order_step", "dg_operator", "dg_residual", "discrete_divergence_ho",
    "fo_rhs",
]

#: relative slack granted to admissibility guards before declaring a state
#: inadmissible (cancellation noise in E - |m|^2/(2 rho) - |B|^2/2)
GUARD_REL_TOL = 1e-11


class PositivityError(RuntimeError):
    """An operation met a state outside the admissible set."""


@dataclass(frozen=True)
class InterfaceTrace:
    left: np.ndarray
    right: np.ndarray
    axis: int

    def __post_init__(self):
        lu = np.asarray(self.left, dtype=float)
        ru = np.asarray(self.right, dtype=float)
        object.__setattr__(self, "left", lu)
        object.__setattr__(self, "right", ru)
        if not (np.all(np.isfinite(lu)) and np.all(np.isfinite(ru))):
            raise ValueError("trace states must be finite")
        if self.axis not in (1, 2):
            raise ValueError("face normal axis must be 1 or 2")


@dataclass
class SchemeParams:
    """LF viscosity parameters; must strictly exceed the PP lower bounds."""

    alpha1: float = 0.0
    alpha2: float = 0.0
    margin: float = 1.0001

    def __post_init__(self):
        if self.margin < 1.0:
            raise ValueError("viscosity margin must be >= 1")


def lf_flux(trace: InterfaceTrace, alpha: float, eos) -> np.ndarray:
    """(F(U-) + F(U+) - alpha (U+ - U-)) / 2 along the trace's axis."""
    if alpha <= 0:
        raise ValueError("LF viscosity must be positive")
    ul, ur = trace.left, trace.right
    if ul[0] <= 0 or ur[0] <= 0:
        raise PositivityError("nonpositive density in interface trace")
    fl = physics.flux_arr(ul, trace.axis, eos.gamma)
    fr = physics.flux_arr(ur, trace.axis, eos.gamma)
    return 0.5 * (fl + fr - alpha * (ur - ul))


def interface_b_jump(trace: InterfaceTrace) -> float:
    """Half-jump of the normal magnetic component across the face."""
    d = trace.axis - 1
    return 0.5 * float(trace.right[4 + d] - trace.left[4 + d])


def discrete_divergence_fo(avgs: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Central-difference divergence of the average field, interior cells.

    `avgs` must carry the one-cell ghost frame, shape (nx+2, ny+2, 8).
    """
    nx, ny = mesh.nx, mesh.ny
    if avgs.shape != (nx + 2, ny + 2, 8):
        raise ValueError("expected ghosted average array (nx+2, ny+2, 8)")
    b1 = avgs[:, :, 4]
    b2 = avgs[:, :, 5]
    return ((b1[2:, 1:-1] - b1[:-2, 1:-1]) / (2.0 * mesh.dx)
            + (b2[1:-1, 2:] - b2[1:-1, :-2]) / (2.0 * mesh.dy))


def fo_rhs(avgs: np.ndarray, mesh: Mesh, params: SchemeParams, eos,
           include_source: bool = True) -> np.ndarray:
    """Right-hand side of the first-order penalized LF scheme (interior)."""
    nx, ny = mesh.nx, mesh.ny
    g = eos.gamma
    a1, a2 = params.alpha1, params.alpha2

    def facediff_x():
        ul = avgs[:-1, 1:-1]
        ur = avgs[1:, 1:-1]
        fh = 0.5 * (physics.flux_arr(ul, 1, g) + physics.flux_arr(ur, 1, g)
                    - a1 * (ur - ul))
        return (fh[1:] - fh[:-1]) / mesh.dx

    def facediff_y():
        ul = avgs[1:-1, :-1]
        ur = avgs[1:-1, 1:]
        fh = 0.5 * (physics.flux_arr(ul, 2, g) + physics.flux_arr(ur, 2, g)
                    - a2 * (ur - ul))
        return (fh[:, 1:] - fh[:, :-1]) / mesh.dy

    rhs = -(facediff_x() + facediff_y())
    if include_source:
        div = discrete_divergence_fo(avgs, mesh)
        rhs -= div[..., None] * physics.godunov_source_arr(avgs[1:-1, 1:-1])
    return rhs


def first_order_step(avgs: np.ndarray, mesh: Mesh, params: SchemeParams,
                     dt: float, eos, include_source: bool = True,
                     enforce_cfl: bool = True) -> np.ndarray:
    """One penalized-LF Euler step on ghosted cell averages.

    Returns the updated interior averages.  The step refuses to run outside
    its CFL region and reports an output admissibility violation (which the
    supporting theory rules out under the preconditions) as a fatal
    diagnostic.
    """
    inner = avgs[1:-1, 1:-1]
    if not np.all(physics.is_admissible_arr(inner)):
        raise PositivityError("first-order step requires admissible averages")
    if enforce_cfl:
        div = discrete_divergence_fo(avgs, mesh)
        with np.errstate(invalid="ignore"):
            vt = np.max(np.abs(div) / np.sqrt(inner[..., 0]))
        lam = dt * (params.alpha1 / mesh.dx + params.alpha2 / mesh.dy + vt)
        if lam > 1.0 + 1e-12:
            raise ValueError(f"time step violates the first-order CFL bound "
                             f"(dt*(a1/dx+a2/dy+jump) = {lam:.6f} > 1)")
    out = inner + dt * fo_rhs(avgs, mesh, params, eos, include_source)
    if include_source and not np.all(physics.is_admissible_arr(out)):
        raise PositivityError(
            "inadmissible average produced by the first-order step; "
            "this indicates a scheme implementation bug")
    return out


# ---------------------------------------------------------------------------
# DG operator
# ---------------------------------------------------------------------------

@dataclass
class DGStats:
    alpha1_pp: float
    alpha2_pp: float
    vartheta1: float
    vartheta2: float
    max_div: float


def _trace_arrays(field: DGField):
    t = field.tables
    m = field.mesh
    tx = np.empty((m.nx + 1, m.ny, t.q, 2, 8))
    ty = np.empty((m.nx, m.ny + 1, t.q, 2, 8))
    K.traces_x(field.coef, t.ns, t.nv, t.phi_xr, t.phi_xl,
               t.b1_xr, t.b1_xl, t.b2_xr, t.b2_xl, tx)
    K.traces_y(field.coef, t.ns, t.nv, t.phi_yt, t.phi_yb,
               t.b1_yt, t.b1_yb, t.b2_yt, t.b2_yb, ty)
    return tx, ty


def dg_stats(field: DGField, eos) -> DGStats:
    """Interface statistics of a (ghost-filled) field."""
    tx, ty = _trace_arrays(field)
    return _stats_from_traces(field, tx, ty, eos)


def _stats_from_traces(field: DGField, tx, ty, eos) -> DGStats:
    t = field.tables
    m = field.mesh
    a1, a2 = K.reduce_pp_alpha(tx, ty, eos.gamma)
    th1, th2 = K.reduce_jump_ratios(tx, ty)
    div = np.empty((m.nx, m.ny))
    K.divergence_faces(tx, ty, t.wf, m.dx, m.dy, div)
    return DGStats(a1, a2, th1, th2, float(np.max(np.abs(div))))


def dg_operator(field: DGField, eos, params: SchemeParams,
                include_source: bool = True, guard: bool = True,
                stats: bool = True):
    """Semidiscrete DG residual (time derivative of every dof).

    Ghosts must be filled beforehand.  When ``params`` carries zero
    viscosities they are set from the PP bounds times the margin.  Returns
    (residual, DGStats or None); the residual spans interior cells only.
    """
    t = field.tables
    m = field.mesh
    tx, ty = _trace_arrays(field)
    st = None
    if stats or params.alpha1 <= 0.0 or params.alpha2 <= 0.0:
        st = _stats_from_traces(field, tx, ty, eos)
        if params.alpha1 <= 0.0:
            params.alpha1 = params.margin * st.alpha1_pp
        if params.alpha2 <= 0.0:
            params.alpha2 = params.margin * st.alpha2_pp
    gtol = GUARD_REL_TOL if guard else -1.0
    q = t.q
    fx = np.empty((m.nx + 1, m.ny, q, 8))
    bjx = np.empty((m.nx + 1, m.ny, q))
    sxl = np.empty((m.nx + 1, m.ny, q, 8))
    sxr = np.empty((m.nx + 1, m.ny, q, 8))
    badx = np.zeros((m.nx + 1, m.ny), dtype=np.int8)
    K.lf_flux_faces(tx, 0, params.alpha1, eos.gamma, gtol, fx, bjx, sxl, sxr, badx)
    fy = np.empty((m.nx, m.ny + 1, q, 8))
    bjy = np.empty((m.nx, m.ny + 1, q))
    syl = np.empty((m.nx, m.ny + 1, q, 8))
    syr = np.empty((m.nx, m.ny + 1, q, 8))
    bady = np.zeros((m.nx, m.ny + 1), dtype=np.int8)
    K.lf_flux_faces(ty, 1, params.alpha2, eos.gamma, gtol, fy, bjy, syl, syr, bady)
    for name, bad in (("x", badx), ("y", bady)):
        if bad.any():
            f, j = np.argwhere(bad)[0]
            raise PositivityError(
                f"inadmissible trace state at {name}-face {f}, row {j}, "
                f"node {int(bad[f, j]) - 1}")
    res = np.empty((m.nx, m.ny, t.ndof))
    K.residual_cells(field.coef, fx, fy, bjx, bjy, sxl, sxr, syl, syr,
                     t.ns, t.nv, t.wv, t.phi_v, t.dphix_v, t.dphiy_v,
                     t.b1_v, t.b2_v, t.db1x_v, t.db1y_v, t.db2x_v, t.db2y_v,
                     t.wf, t.phi_xr, t.phi_xl, t.phi_yt, t.phi_yb,
                     t.b1_xr, t.b1_xl, t.b1_yt, t.b1_yb,
                     t.b2_xr, t.b2_xl, t.b2_yt, t.b2_yb,
                     t.gram_inv, m.dx, m.dy, eos.gamma, include_source, res)
    return res, st


def dg_residual(field: DGField, mesh: Mesh, params: SchemeParams, eos,
                include_source: bool = True) -> np.ndarray:
    """Spec-facing wrapper around :func:`dg_operator` (ghosts prefilled)."""
    if mesh is not field.mesh:
        raise ValueError("field/mesh mismatch")
    res, _ = dg_operator(field, eos, params, include_source=include_source,
                         stats=False)
    return res


def discrete_divergence_ho(field: DGField) -> np.ndarray:
    """Face-average discrete divergence per interior cell (ghosts prefilled)."""
    t = field.tables
    m = field.mesh
    tx, ty = _trace_arrays(field)
    div = np.empty((m.nx, m.ny))
    K.divergence_faces(tx, ty, t.wf, m.dx, m.dy, div)
    return div
