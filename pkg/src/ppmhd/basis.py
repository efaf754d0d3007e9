"""Modal bases on the reference cell [-1/2, 1/2]^2 and the DG field container.

Scalar components (rho, m1, m2, m3, B3, E) use an orthonormal tensor-Legendre
modal basis of total degree K.  The in-plane magnetic pair (B1, B2) lives in
the divergence-free polynomial block, spanned by vector-valued members whose
reference divergence vanishes identically; coefficients therefore can only
produce fields with zero in-cell divergence.  Square cells (dx == dy) are
required so the reference property carries over to physical coordinates.

Degrees K = 0, 1, 2 are supported.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as npoly

from .quadrature import gauss_legendre, gauss_lobatto

__all__ = [
    "ScalarBasis", "DivFreeVectorBasis", "BasisTables", "DGField",
    "build_scalar_basis", "build_divfree_basis", "build_tables",
    "project_cell", "scalar_dim", "vector_dim",
]

_SUPPORTED_K = (0, 1, 2)

# 1D orthonormal Legendre coefficients on [-1/2, 1/2] (unit measure):
#   L0 = 1, L1 = sqrt(12) x, L2 = sqrt(5) (6 x^2 - 1/2)
_L1D = [
    np.array([1.0]),
    np.array([0.0, np.sqrt(12.0)]),
    np.array([-0.5 * np.sqrt(5.0), 0.0, 6.0 * np.sqrt(5.0)]),
]

# scalar block order within a cell dof vector; U-component index of each block
SCALAR_COMPONENTS = (0, 1, 2, 3, 6, 7)   # rho, m1, m2, m3, B3, E


def scalar_dim(k: int) -> int:
    return (k + 1) * (k + 2) // 2


def vector_dim(k: int) -> int:
    return (k + 1) * (k + 2) - k * (k + 1) // 2


def _check_k(k: int):
    if k not in _SUPPORTED_K:
        raise ValueError(f"polynomial degree K must be one of {_SUPPORTED_K}, got {k}")


def _poly2(c1d_x: np.ndarray, c1d_y: np.ndarray) -> np.ndarray:
    """2D coefficient matrix c[i,j] x^i y^j from 1D factors."""
    return np.outer(c1d_x, c1d_y)


@dataclass(frozen=True)
class ScalarBasis:
    degree: int
    exponents: tuple          # (a, b) per member; member = L_a(x) L_b(y)
    coeffs: tuple             # 2D coefficient matrices

    @property
    def n(self) -> int:
        return len(self.coeffs)

    def values(self, x, y) -> np.ndarray:
        """Member values at points; shape (n, *pts)."""
        return np.stack([npoly.polyval2d(x, y, c) for c in self.coeffs])

    def deriv_values(self, x, y, axis: int) -> np.ndarray:
        out = []
        for c in self.coeffs:
            dc = npoly.polyder(c, axis=axis)
            out.append(npoly.polyval2d(x, y, dc))
        return np.stack(out)


@dataclass(frozen=True)
class DivFreeVectorBasis:
    degree: int
    coeffs: tuple             # (c1, c2) 2D coefficient matrices per member

    @property
    def n(self) -> int:
        return len(self.coeffs)

    def values(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        b1 = np.stack([npoly.polyval2d(x, y, c1) for c1, _ in self.coeffs])
        b2 = np.stack([npoly.polyval2d(x, y, c2) for _, c2 in self.coeffs])
        return b1, b2

    def deriv_values(self, x, y, comp: int, axis: int) -> np.ndarray:
        out = []
        for pair in self.coeffs:
            dc = npoly.polyder(pair[comp], axis=axis)
            out.append(npoly.polyval2d(x, y, dc))
        return np.stack(out)

    def divergence(self, x, y) -> np.ndarray:
        """Reference divergence of each member at points (identically ~0)."""
        return self.deriv_values(x, y, 0, 0) + self.deriv_values(x, y, 1, 1)


def build_scalar_basis(k: int) -> ScalarBasis:
    """Orthonormal modal basis of the total-degree-K space, constant first."""
    _check_k(k)
    expo = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)][:scalar_dim(k)]
    coeffs = tuple(_poly2(_L1D[a], _L1D[b]) for a, b in expo)
    return ScalarBasis(k, tuple(expo), coeffs)


def _c(rows) -> np.ndarray:
    return np.array(rows, dtype=float)


def build_divfree_basis(k: int) -> DivFreeVectorBasis:
    """Divergence-free vector members.

    The quadratic members are centered (zero cell mean) so that the first two
    coefficients are exactly the cell averages of (B1, B2); the span is the
    full divergence-free subspace of P_K x P_K.
    """
    _check_k(k)
    zero = _c([[0.0]])
    members = [
        (_c([[1.0]]), zero),                       # (1, 0)
        (zero, _c([[1.0]])),                       # (0, 1)
    ]
    if k >= 1:
        members += [
            (_c([[0.0, 1.0]]), zero),              # (y, 0)
            (zero, _c([[0.0], [1.0]])),            # (0, x)
            (_c([[0.0], [1.0]]), _c([[0.0, -1.0]])),   # (x, -y)
        ]
    if k >= 2:
        third = 1.0 / 12.0
        members += [
            (_c([[-third], [0.0], [1.0]]), _c([[0.0, 0.0], [0.0, -2.0]])),   # (x^2-1/12, -2xy)
            (_c([[0.0, 0.0], [0.0, 2.0]]), _c([[third, 0.0, -1.0]])),        # (2xy, -(y^2-1/12))
            (_c([[-third, 0.0, 1.0]]), zero),                                # (y^2-1/12, 0)
            (zero, _c([[-third], [0.0], [1.0]])),                            # (0, x^2-1/12)
        ]
    return DivFreeVectorBasis(k, tuple(members))


def _pp_point_set(k: int, q: int, ell: int):
    """Mixed Lobatto/Gauss point set covering all face trace nodes."""
    gl = gauss_legendre(q).nodes
    lob = gauss_lobatto(ell).nodes
    pts = []
    for xl in lob:
        for yg in gl:
            pts.append((xl, yg))
    for xg in gl:
        for yl in lob:
            if not any(xg == px and yl == py for px, py in pts):
                pts.append((xg, yl))
    arr = np.array(pts)
    return arr[:, 0], arr[:, 1]


@dataclass(frozen=True)
class BasisTables:
    """Precomputed evaluation tables consumed by the numba kernels.

    All point tables are indexed [node, member].  Face tables hold traces at
    the Q Gauss nodes of each face; `_xr` means the x = +1/2 face, `_yb` the
    y = -1/2 face, and so on.
    """

    k: int
    q: int
    ell: int
    ns: int
    nv: int
    ndof: int
    # volume (tensor Q x Q)
    wv: np.ndarray
    phi_v: np.ndarray
    dphix_v: np.ndarray
    dphiy_v: np.ndarray
    b1_v: np.ndarray
    b2_v: np.ndarray
    db1x_v: np.ndarray
    db1y_v: np.ndarray
    db2x_v: np.ndarray
    db2y_v: np.ndarray
    # faces
    wf: np.ndarray
    face_nodes: np.ndarray
    phi_xr: np.ndarray
    phi_xl: np.ndarray
    phi_yt: np.ndarray
    phi_yb: np.ndarray
    b1_xr: np.ndarray
    b1_xl: np.ndarray
    b1_yt: np.ndarray
    b1_yb: np.ndarray
    b2_xr: np.ndarray
    b2_xl: np.ndarray
    b2_yt: np.ndarray
    b2_yb: np.ndarray
    # admissibility enforcement point set
    pp_x: np.ndarray
    pp_y: np.ndarray
    phi_pp: np.ndarray
    b1_pp: np.ndarray
    b2_pp: np.ndarray
    # vector-block Gram inverse
    gram: np.ndarray
    gram_inv: np.ndarray
    # face means of members (scalar; and vector component on its face)
    fmean_phi_xr: np.ndarray
    fmean_phi_xl: np.ndarray
    fmean_phi_yt: np.ndarray
    fmean_phi_yb: np.ndarray
    fmean_b1_xr: np.ndarray
    fmean_b1_xl: np.ndarray
    fmean_b1_yt: np.ndarray
    fmean_b1_yb: np.ndarray
    fmean_b2_xr: np.ndarray
    fmean_b2_xl: np.ndarray
    fmean_b2_yt: np.ndarray
    fmean_b2_yb: np.ndarray
    # ghost-reflection sign maps (full dof vector), per boundary axis
    reflect_sign_x: np.ndarray
    reflect_sign_y: np.ndarray
    # dof bookkeeping
    const_dofs: np.ndarray       # dof index of the constant mode per U component
    lin_x_dof: int               # scalar-block offset of the x mode (K>=1)
    lin_y_dof: int
    lobatto_w1: float


def _scalar_block_signs(sb: ScalarBasis, axis: int) -> np.ndarray:
    return np.array([(-1.0) ** (e[axis]) for e in sb.exponents])


_VEC_SIGN_X = {0: -1, 1: 1, 2: -1, 3: -1, 4: 1, 5: -1, 6: 1, 7: -1, 8: 1}
_VEC_SIGN_Y = {0: 1, 1: -1, 2: -1, 3: -1, 4: 1, 5: 1, 6: -1, 7: 1, 8: -1}


def build_tables(k: int, q: int | None = None, ell: int | None = None) -> BasisTables:
    _check_k(k)
    if q is None:
        q = k + 1
    if ell is None:
        ell = max(2, (k + 3 + 1) // 2)  # smallest L with 2L - 3 >= K
    if 2 * ell - 3 < k:
        raise ValueError("Lobatto rule too short for the requested degree")
    sb = build_scalar_basis(k)
    vb = build_divfree_basis(k)
    ns, nv = sb.n, vb.n
    gl = gauss_legendre(q)
    xg, wg = gl.nodes, gl.weights
    lob = gauss_lobatto(ell)

    # volume tensor grid, x fastest then y: node index = ix * q + iy
    XV, YV = np.meshgrid(xg, xg, indexing="ij")
    xv, yv = XV.ravel(), YV.ravel()
    wv = np.outer(wg, wg).ravel()

    def s_tab(fn, *a):
        return np.ascontiguousarray(fn(*a).T)

    half = 0.5
    pts_pp = _pp_point_set(k, q, ell)

    # face means over the Q-node Gauss rule on the face
    def fmean(vals2d):                      # vals2d: (node, member)
        return wg @ vals2d

    phi_xr = s_tab(sb.values, np.full(q, half), xg)
    phi_xl = s_tab(sb.values, np.full(q, -half), xg)
    phi_yt = s_tab(sb.values, xg, np.full(q, half))
    phi_yb = s_tab(sb.values, xg, np.full(q, -half))

    def v_tabs(x, y):
        b1, b2 = vb.values(x, y)
        return np.ascontiguousarray(b1.T), np.ascontiguousarray(b2.T)

    b1_xr, b2_xr = v_tabs(np.full(q, half), xg)
    b1_xl, b2_xl = v_tabs(np.full(q, -half), xg)
    b1_yt, b2_yt = v_tabs(xg, np.full(q, half))
    b1_yb, b2_yb = v_tabs(xg, np.full(q, -half))

    b1_v, b2_v = v_tabs(xv, yv)
    phi_pp = s_tab(sb.values, *pts_pp)
    b1_pp, b2_pp = v_tabs(*pts_pp)

    # vector Gram over the reference cell; q >= k+1 makes it exact
    glg = gauss_legendre(max(q, k + 1))
    XG, YG = np.meshgrid(glg.nodes, glg.nodes, indexing="ij")
    wG = np.outer(glg.weights, glg.weights).ravel()
    g1, g2 = vb.values(XG.ravel(), YG.ravel())
    gram = (g1 * wG) @ g1.T + (g2 * wG) @ g2.T

    ndof = 6 * ns + nv
    sgn_x_s = _scalar_block_signs(sb, 0)
    sgn_y_s = _scalar_block_signs(sb, 1)
    vx = np.array([_VEC_SIGN_X[i] for i in range(nv)], dtype=float)
    vy = np.array([_VEC_SIGN_Y[i] for i in range(nv)], dtype=float)
    rx = np.empty(ndof)
    ry = np.empty(ndof)
    for blk in range(6):
        comp_flip_x = -1.0 if blk == 1 else 1.0   # m1 flips at an x boundary
        comp_flip_y = -1.0 if blk == 2 else 1.0   # m2 flips at a y boundary
        rx[blk * ns:(blk + 1) * ns] = comp_flip_x * sgn_x_s
        ry[blk * ns:(blk + 1) * ns] = comp_flip_y * sgn_y_s
    rx[6 * ns:] = vx
    ry[6 * ns:] = vy

    const_dofs = np.array([0, ns, 2 * ns, 3 * ns, 6 * ns, 6 * ns + 1,
                           4 * ns, 5 * ns], dtype=np.int64)
    # order above is per U component: rho,m1,m2,m3,B1,B2,B3,E

    return BasisTables(
        k=k, q=q, ell=ell, ns=ns, nv=nv, ndof=ndof,
        wv=wv,
        phi_v=s_tab(sb.values, xv, yv),
        dphix_v=s_tab(sb.deriv_values, xv, yv, 0),
        dphiy_v=s_tab(sb.deriv_values, xv, yv, 1),
        b1_v=b1_v, b2_v=b2_v,
        db1x_v=np.ascontiguousarray(vb.deriv_values(xv, yv, 0, 0).T),
        db1y_v=np.ascontiguousarray(vb.deriv_values(xv, yv, 0, 1).T),
        db2x_v=np.ascontiguousarray(vb.deriv_values(xv, yv, 1, 0).T),
        db2y_v=np.ascontiguousarray(vb.deriv_values(xv, yv, 1, 1).T),
        wf=wg.copy(), face_nodes=xg.copy(),
        phi_xr=phi_xr, phi_xl=phi_xl, phi_yt=phi_yt, phi_yb=phi_yb,
        b1_xr=b1_xr, b1_xl=b1_xl, b1_yt=b1_yt, b1_yb=b1_yb,
        b2_xr=b2_xr, b2_xl=b2_xl, b2_yt=b2_yt, b2_yb=b2_yb,
        pp_x=pts_pp[0], pp_y=pts_pp[1],
        phi_pp=phi_pp, b1_pp=b1_pp, b2_pp=b2_pp,
        gram=gram, gram_inv=np.linalg.inv(gram),
        fmean_phi_xr=fmean(phi_xr), fmean_phi_xl=fmean(phi_xl),
        fmean_phi_yt=fmean(phi_yt), fmean_phi_yb=fmean(phi_yb),
        fmean_b1_xr=fmean(b1_xr), fmean_b1_xl=fmean(b1_xl),
        fmean_b1_yt=fmean(b1_yt), fmean_b1_yb=fmean(b1_yb),
        fmean_b2_xr=fmean(b2_xr), fmean_b2_xl=fmean(b2_xl),
        fmean_b2_yt=fmean(b2_yt), fmean_b2_yb=fmean(b2_yb),
        reflect_sign_x=rx, reflect_sign_y=ry,
        const_dofs=const_dofs,
        lin_x_dof=1 if ns > 1 else -1,
        lin_y_dof=2 if ns > 1 else -1,
        lobatto_w1=float(lob.weights[0]),
    )


def project_cell(fn: Callable, xc: float, yc: float, dx: float, dy: float,
                 tables: BasisTables, nq: int | None = None) -> np.ndarray:
    """L2-project pointwise data onto one cell's dof vector.

    `fn(x, y)` must accept broadcast arrays and return (..., 8) conserved
    states.  Scalar components project independently onto the orthonormal
    modes; (B1, B2) project jointly onto the divergence-free block through
    its Gram system.
    """
    k = tables.k
    if nq is None:
        nq = k + 3
    gl = gauss_legendre(nq)
    XI, ETA = np.meshgrid(gl.nodes, gl.nodes, indexing="ij")
    w = np.outer(gl.weights, gl.weights).ravel()
    xi, eta = XI.ravel(), ETA.ravel()
    u = np.asarray(fn(xc + dx * xi, yc + dy * eta), dtype=float)
    if u.shape != (xi.size, 8):
        raise ValueError("initial-data function must return (npts, 8)")
    if not np.all(np.isfinite(u)):
        raise ValueError("initial data must be finite on the cell")
    sb = build_scalar_basis(k)
    vb = build_divfree_basis(k)
    phi = sb.values(xi, eta)              # (ns, npts)
    b1, b2 = vb.values(xi, eta)
    dof = np.empty(tables.ndof)
    ns = tables.ns
    for blk, comp in enumerate(SCALAR_COMPONENTS):
        dof[blk * ns:(blk + 1) * ns] = phi @ (w * u[:, comp])
    rhs = b1 @ (w * u[:, 4]) + b2 @ (w * u[:, 5])
    g1w = (b1 * w) @ b1.T + (b2 * w) @ b2.T
    dof[6 * ns:] = np.linalg.solve(g1w, rhs)
    return dof


class DGField:
    """Per-cell modal coefficients of the 8 components, with one ghost layer.

    The coefficient array has shape (nx + 2, ny + 2, ndof); interior cells
    live at [1:nx+1, 1:ny+1].
    """

    def __init__(self, mesh, k: int, tables: BasisTables | None = None,
                 coef: np.ndarray | None = None):
        _check_k(k)
        if abs(mesh.dx - mesh.dy) > 1e-12 * max(mesh.dx, mesh.dy):
            raise ValueError("DG fields require square cells (dx == dy)")
        self.mesh = mesh
        self.k = k
        self.tables = tables if tables is not None else build_tables(k)
        shape = (mesh.nx + 2, mesh.ny + 2, self.tables.ndof)
        if coef is None:
            coef = np.zeros(shape)
        if coef.shape != shape:
            raise ValueError("coefficient array has wrong shape")
        self.coef = coef

    # -- construction -----------------------------------------------------
    @classmethod
    def project(cls, mesh, k: int, fn: Callable, nq: int | None = None,
                tables: BasisTables | None = None) -> "DGField":
        fld = cls(mesh, k, tables=tables)
        t = fld.tables
        if nq is None:
            nq = k + 3
        gl = gauss_legendre(nq)
        XI, ETA = np.meshgrid(gl.nodes, gl.nodes, indexing="ij")
        w = np.outer(gl.weights, gl.weights).ravel()
        xi, eta = XI.ravel(), ETA.ravel()
        sb = build_scalar_basis(k)
        vb = build_divfree_basis(k)
        phi = sb.values(xi, eta)
        b1, b2 = vb.values(xi, eta)
        g = (b1 * w) @ b1.T + (b2 * w) @ b2.T
        g_inv = np.linalg.inv(g)
        xc = mesh.cell_centers_x()
        yc = mesh.cell_centers_y()
        X = xc[:, None, None] + mesh.dx * xi[None, None, :]
        Y = yc[None, :, None] + mesh.dy * eta[None, None, :]
        u = np.asarray(fn(X, Y), dtype=float)   # (nx, ny, npts, 8)
        if u.shape != (mesh.nx, mesh.ny, xi.size, 8):
            raise ValueError("initial-data function must broadcast to "
                             f"(nx, ny, npts, 8); got {u.shape}")
        if not np.all(np.isfinite(u)):
            raise ValueError("initial data must be finite")
        ns = t.ns
        for blk, comp in enumerate(SCALAR_COMPONENTS):
            fld.coef[1:-1, 1:-1, blk * ns:(blk + 1) * ns] = \
                np.einsum("xyq,aq->xya", u[..., comp] * w, phi)
        rhs = (np.einsum("xyq,kq->xyk", u[..., 4] * w, b1)
               + np.einsum("xyq,kq->xyk", u[..., 5] * w, b2))
        fld.coef[1:-1, 1:-1, 6 * ns:] = rhs @ g_inv.T
        return fld

    # -- views ------------------------------------------------------------
    @property
    def interior(self) -> np.ndarray:
        return self.coef[1:-1, 1:-1, :]

    def copy(self) -> "DGField":
        return DGField(self.mesh, self.k, tables=self.tables, coef=self.coef.copy())

    def cell_averages(self) -> np.ndarray:
        """(nx, ny, 8) array of cell averages (constant-mode coefficients)."""
        return self.interior[:, :, self.tables.const_dofs]

    # -- evaluation --------------------------------------------------------
    def evaluate(self, i: int, j: int, xi, eta) -> np.ndarray:
        """Evaluate at reference coordinates inside interior cell (i, j)."""
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        if np.any(np.abs(xi) > 0.5 + 1e-14) or np.any(np.abs(eta) > 0.5 + 1e-14):
            raise ValueError("evaluation point outside the closed reference cell")
        sb = build_scalar_basis(self.k)
        vb = build_divfree_basis(self.k)
        phi = sb.values(xi, eta)
        b1, b2 = vb.values(xi, eta)
        dof = self.coef[i + 1, j + 1]
        ns = self.tables.ns
        out = np.empty(xi.shape + (8,))
        for blk, comp in enumerate(SCALAR_COMPONENTS):
            out[..., comp] = np.tensordot(dof[blk * ns:(blk + 1) * ns], phi, axes=(0, 0))
        vc = dof[6 * ns:]
        out[..., 4] = np.tensordot(vc, b1, axes=(0, 0))
        out[..., 5] = np.tensordot(vc, b2, axes=(0, 0))
        return out

    def divergence_b(self, i: int, j: int, xi, eta) -> np.ndarray:
        """In-cell divergence of (B1, B2) at reference points of cell (i, j).

        Each member's reference divergence is the zero polynomial, and for
        square cells the physical divergence is (1/dx) times the per-member
        sum, so the result vanishes to rounding by construction.
        """
        vb = build_divfree_basis(self.k)
        d1 = vb.deriv_values(xi, eta, 0, 0)
        d2 = vb.deriv_values(xi, eta, 1, 1)
        vc = self.coef[i + 1, j + 1, 6 * self.tables.ns:]
        div_ref = np.tensordot(vc, d1 / self.mesh.dx + d2 / self.mesh.dy, axes=(0, 0))
        return div_ref
