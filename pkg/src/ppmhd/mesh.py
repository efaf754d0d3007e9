"""Uniform Cartesian mesh, boundary descriptors, and ghost filling.

Ghost cells carry whole coefficient blocks (one layer), so the same filling
routine serves both the DG fields and plain cell-average arrays (which are
the K = 0 special case of a coefficient array).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "BoundaryKind", "Mesh", "build_mesh", "fill_ghosts",
    "periodic", "outflow", "reflect", "inflow", "shifted_periodic",
]

_SIDES = ("left", "right", "bottom", "top")
_TAGS = ("periodic", "shifted_periodic", "outflow", "inflow", "reflect")


@dataclass(frozen=True)
class BoundaryKind:
    tag: str
    shift: int = 0
    state: np.ndarray | None = None
    mask: Callable | None = None

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ValueError(f"unknown boundary tag {self.tag!r}")
        if self.tag == "inflow":
            if self.state is None:
                raise ValueError("inflow boundary requires a state")
            object.__setattr__(self, "state", np.asarray(self.state, dtype=float))


def periodic() -> BoundaryKind:
    return BoundaryKind("periodic")


def outflow() -> BoundaryKind:
    return BoundaryKind("outflow")


def reflect() -> BoundaryKind:
    return BoundaryKind("reflect")


def inflow(state, mask: Callable | None = None) -> BoundaryKind:
    return BoundaryKind("inflow", state=state, mask=mask)


def shifted_periodic(shift: int) -> BoundaryKind:
    return BoundaryKind("shifted_periodic", shift=int(shift))


@dataclass(frozen=True)
class Mesh:
    nx: int
    ny: int
    xmin: float
    xmax: float
    ymin: float
    ymax: float
    bc: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.nx <= 0 or self.ny <= 0:
            raise ValueError("cell counts must be positive")
        if self.xmax <= self.xmin or self.ymax <= self.ymin:
            raise ValueError("domain extents must be positive")
        bc = dict(self.bc)
        for side in _SIDES:
            bc.setdefault(side, periodic())
        object.__setattr__(self, "bc", bc)
        for side in ("left", "right"):
            if bc[side].tag == "shifted_periodic":
                raise ValueError("shifted-periodic boundaries are y-only")
        for a, b in (("left", "right"), ("bottom", "top")):
            pa = bc[a].tag in ("periodic", "shifted_periodic")
            pb = bc[b].tag in ("periodic", "shifted_periodic")
            if pa != pb:
                raise ValueError(f"{a}/{b} periodicity must match")
        for side in ("bottom", "top"):
            k = bc[side]
            if k.tag == "shifted_periodic" and abs(k.shift) >= self.nx:
                raise ValueError("shifted-periodic shift exceeds the mesh width")

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / self.nx

    @property
    def dy(self) -> float:
        return (self.ymax - self.ymin) / self.ny

    @property
    def ghost_width(self) -> int:
        return 1

    def cell_centers_x(self) -> np.ndarray:
        return self.xmin + (np.arange(self.nx) + 0.5) * self.dx

    def cell_centers_y(self) -> np.ndarray:
        return self.ymin + (np.arange(self.ny) + 0.5) * self.dy

    def x_faces(self) -> np.ndarray:
        return self.xmin + np.arange(self.nx + 1) * self.dx

    def y_faces(self) -> np.ndarray:
        return self.ymin + np.arange(self.ny + 1) * self.dy


def build_mesh(nx: int, ny: int, xmin: float, xmax: float, ymin: float,
               ymax: float, bc: dict | None = None) -> Mesh:
    return Mesh(int(nx), int(ny), float(xmin), float(xmax), float(ymin),
                float(ymax), bc or {})


def _ghost_constant(state: np.ndarray, ndof: int, const_dofs: np.ndarray) -> np.ndarray:
    dof = np.zeros(ndof)
    dof[const_dofs] = state
    return dof


def fill_ghosts(coef: np.ndarray, mesh: Mesh, tables, t: float = 0.0) -> None:
    """Populate the one-layer ghost frame of `coef` in place.

    `tables` supplies the reflection sign maps and constant-mode indices
    (a K = 0 tables object makes this work on plain average arrays).
    Corners are never consumed by the face-based stencils and stay zero.
    """
    nx, ny = mesh.nx, mesh.ny
    if coef.shape[0] != nx + 2 or coef.shape[1] != ny + 2:
        raise ValueError("coefficient array does not match the mesh")
    ndof = coef.shape[2]
    xc = mesh.cell_centers_x()
    yc = mesh.cell_centers_y()

    def fill_side(side: str):
        kind = mesh.bc[side]
        tag = kind.tag
        if side in ("left", "right"):
            gcol = 0 if side == "left" else nx + 1
            icol = 1 if side == "left" else nx       # adjacent interior
            pcol = nx if side == "left" else 1       # periodic partner
            if tag == "periodic":
                coef[gcol, 1:ny + 1] = coef[pcol, 1:ny + 1]
            elif tag == "outflow":
                coef[gcol, 1:ny + 1] = coef[icol, 1:ny + 1]
            elif tag == "reflect":
                coef[gcol, 1:ny + 1] = coef[icol, 1:ny + 1] * tables.reflect_sign_x
            elif tag == "inflow":
                dof = _ghost_constant(kind.state, ndof, tables.const_dofs)
                if kind.mask is None:
                    coef[gcol, 1:ny + 1] = dof
                else:
                    sel = np.asarray(kind.mask(yc), dtype=bool)
                    coef[gcol, 1:ny + 1][sel] = dof
                    coef[gcol, 1:ny + 1][~sel] = coef[icol, 1:ny + 1][~sel]
            else:
                raise ValueError("shifted-periodic boundaries are y-only")
        else:
            grow = 0 if side == "bottom" else ny + 1
            irow = 1 if side == "bottom" else ny
            prow = ny if side == "bottom" else 1
            if tag == "periodic":
                coef[1:nx + 1, grow] = coef[1:nx + 1, prow]
            elif tag == "shifted_periodic":
                s = kind.shift if side == "top" else -kind.shift
                src = np.clip(np.arange(nx) + s, 0, nx - 1) + 1
                coef[1:nx + 1, grow] = coef[src, prow]
            elif tag == "outflow":
                coef[1:nx + 1, grow] = coef[1:nx + 1, irow]
            elif tag == "reflect":
                coef[1:nx + 1, grow] = coef[1:nx + 1, irow] * tables.reflect_sign_y
            elif tag == "inflow":
                dof = _ghost_constant(kind.state, ndof, tables.const_dofs)
                if kind.mask is None:
                    coef[1:nx + 1, grow] = dof
                else:
                    sel = np.asarray(kind.mask(xc), dtype=bool)
                    coef[1:nx + 1, grow][sel] = dof
                    coef[1:nx + 1, grow][~sel] = coef[1:nx + 1, irow][~sel]

    for side in _SIDES:
        fill_side(side)
