"""Admissibility (scaling) limiter and the TVB minmod oscillation limiter.

``pp_limit_cell`` is a readable single-cell reference implementation; the
field-level entry points drive the numba kernels and are exercised against
it in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .basis import BasisTables, DGField, build_divfree_basis, build_scalar_basis
from .scheme import PositivityError

__all__ = [
    "EPS_RHO", "EPS_E", "PPPointSet", "pp_point_set",
    "pp_limit_cell", "pp_limit_field", "tvb_limit",
]

# numerical floors for the enforced point values; the trigger threshold is
# half the floor so re-application is a no-op (see pp_limit_cells kernel)
EPS_RHO = 1e-13
EPS_E = 1e-13


@dataclass(frozen=True)
class PPPointSet:
    """Mixed Lobatto/Gauss point set through which admissibility is enforced."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.x.shape != self.y.shape:
            raise ValueError("coordinate arrays must match")

    @property
    def n(self) -> int:
        return self.x.size

    def contains_face_nodes(self, q_nodes: np.ndarray) -> bool:
        pts = set(zip(self.x.tolist(), self.y.tolist()))
        for g in q_nodes:
            for e in (-0.5, 0.5):
                if (e, g) not in pts or (g, e) not in pts:
                    return False
        return True


def pp_point_set(tables: BasisTables) -> PPPointSet:
    return PPPointSet(tables.pp_x, tables.pp_y)


def _eval_cell(dof: np.ndarray, tables: BasisTables, x, y) -> np.ndarray:
    sb = build_scalar_basis(tables.k)
    vb = build_divfree_basis(tables.k)
    phi = sb.values(x, y)
    b1, b2 = vb.values(x, y)
    ns = tables.ns
    out = np.empty(np.shape(x) + (8,))
    from .basis import SCALAR_COMPONENTS
    for blk, comp in enumerate(SCALAR_COMPONENTS):
        out[..., comp] = np.tensordot(dof[blk * ns:(blk + 1) * ns], phi, axes=(0, 0))
    vc = dof[6 * ns:]
    out[..., 4] = np.tensordot(vc, b1, axes=(0, 0))
    out[..., 5] = np.tensordot(vc, b2, axes=(0, 0))
    return out


def pp_limit_cell(dof: np.ndarray, tables: BasisTables,
                  eps_rho: float = EPS_RHO, eps_e: float = EPS_E) -> np.ndarray:
    """Reference two-stage scaling limiter for one cell's dof vector.

    Stage one scales the non-constant density modes so the point densities
    reach the floor; stage two scales all non-constant modes so the internal
    energy does.  Cell averages are preserved exactly.
    """
    dof = np.array(dof, dtype=float, copy=True)
    ns, nv = tables.ns, tables.nv
    avg = dof[tables.const_dofs]
    ebar = avg[7] - 0.5 * ((avg[1:4] @ avg[1:4]) / avg[0] + avg[4:7] @ avg[4:7])
    if not (avg[0] >= eps_rho and ebar >= eps_e):
        raise PositivityError("cell average below the admissibility floors")
    pts = (tables.pp_x, tables.pp_y)
    u = _eval_cell(dof, tables, *pts)
    rmin = float(np.min(u[:, 0]))
    if rmin < 0.5 * eps_rho:
        th1 = (avg[0] - eps_rho) / (avg[0] - rmin)
        dof[1:ns] *= th1
        u = _eval_cell(dof, tables, *pts)
    e = u[:, 7] - 0.5 * (np.sum(u[:, 1:4] ** 2, axis=1) / u[:, 0]
                         + np.sum(u[:, 4:7] ** 2, axis=1))
    th2 = 1.0
    for n in np.nonzero(e < 0.5 * eps_e)[0]:
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            z = avg + mid * (u[n] - avg)
            ez = z[7] - 0.5 * ((z[1:4] @ z[1:4]) / z[0] + z[4:7] @ z[4:7])
            if ez >= eps_e:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-14:
                break
        th2 = min(th2, lo)
    if th2 < 1.0:
        for blk in range(6):
            dof[blk * ns + 1:(blk + 1) * ns] *= th2
        dof[6 * ns + 2:6 * ns + nv] *= th2
    return dof


def pp_limit_field(field: DGField, eps_rho: float = EPS_RHO,
                   eps_e: float = EPS_E):
    """Limit every interior cell in place.

    Returns (limited_cell_count, min_rho, min_e) where the minima run over
    the enforcement points of the limited field.
    """
    t = field.tables
    m = field.mesh
    changed = np.zeros((m.nx, m.ny), dtype=np.int8)
    min_rho = np.empty((m.nx, m.ny))
    min_e = np.empty((m.nx, m.ny))
    bad = np.zeros((m.nx, m.ny), dtype=np.int8)
    K.pp_limit_cells(field.coef, t.ns, t.nv, t.const_dofs,
                     t.phi_pp, t.b1_pp, t.b2_pp, eps_rho, eps_e,
                     changed, min_rho, min_e, bad)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise PositivityError(f"cell average below the admissibility floors "
                              f"at cell ({i}, {j})")
    return int(changed.sum()), float(min_rho.min()), float(min_e.min())


def tvb_limit(field: DGField, m_const: float, eos):
    """TVB minmod limiter with characteristic trouble detection.

    Troubled cells have their modes above linear removed and the linear
    modes replaced by minmod-limited slopes; the magnetic pair is repaired
    back onto the divergence-free block.  Ghosts must be filled.  Returns
    the trouble map (nx, ny) of 0/1 flags.
    """
    t = field.tables
    msh = field.mesh
    trouble = np.zeros((msh.nx, msh.ny), dtype=np.int8)
    if t.k == 0:
        return trouble
    tol_x = m_const * msh.dx ** 2
    tol_y = m_const * msh.dy ** 2
    K.tvb_limit_cells(field.coef, t.ns, t.nv, t.const_dofs, eos.gamma,
                      tol_x, tol_y,
                      t.fmean_phi_xr, t.fmean_phi_xl, t.fmean_phi_yt, t.fmean_phi_yb,
                      t.fmean_b1_xr, t.fmean_b1_xl, t.fmean_b1_yt, t.fmean_b1_yb,
                      t.fmean_b2_xr, t.fmean_b2_xl, t.fmean_b2_yt, t.fmean_b2_yb,
                      trouble)
    return trouble
