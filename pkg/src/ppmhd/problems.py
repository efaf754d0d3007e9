"""Initial/boundary data for the experiment library.

Every problem provides a vectorized ``init(x, y) -> (..., 8)`` conserved
state function, default mesh and final time, boundary kinds, and limiter
settings.  States follow the usual nondimensional MHD conventions with the
gamma-law EOS.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import mesh as msh
from . import physics

__all__ = ["ProblemSpec", "make_problem", "exact_solution", "PROBLEM_IDS"]

_SQRT4PI = np.sqrt(4.0 * np.pi)


@dataclass(frozen=True)
class ProblemSpec:
    id: str
    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int
    ny: int
    gamma: float
    t_end: float
    bc: dict
    init: Callable
    exact: Callable | None = None
    tvb_m: float | None = None       # None disables the oscillation limiter
    cfl: float = 0.15
    notes: str = ""

    def build_mesh(self, nx: int | None = None, ny: int | None = None) -> msh.Mesh:
        return msh.build_mesh(nx or self.nx, ny or self.ny, self.xmin,
                              self.xmax, self.ymin, self.ymax, self.bc)

    def eos(self) -> physics.EosIdeal:
        return physics.EosIdeal(self.gamma)


def _stack(rho, vx, vy, vz, bx, by, bz, p, gamma):
    rho, vx, vy, vz, bx, by, bz, p = np.broadcast_arrays(
        rho, vx, vy, vz, bx, by, bz, p)
    w = np.stack([rho, vx, vy, vz, bx, by, bz, p], axis=-1).astype(float)
    return physics.cons_from_prim_arr(w, gamma)


def _smooth_sine(o):
    gamma = o.get("gamma", 1.4)

    def init(x, y, t=0.0):
        rho = 1.0 + 0.99 * np.sin(x + y - 2.0 * t)
        return _stack(rho, 1.0, 1.0, 0.0, 0.1, 0.1, 0.0, 1.0, gamma)

    return ProblemSpec(
        id="smooth_sine", xmin=0.0, xmax=2.0 * np.pi, ymin=0.0, ymax=2.0 * np.pi,
        nx=60, ny=60, gamma=gamma, t_end=0.1,
        bc={s: msh.periodic() for s in ("left", "right", "bottom", "top")},
        init=init, exact=init,
        notes="advected low-density sound-free wave; exact solution attached")


_VORTEX_MU = 5.389489439


def _smooth_vortex(o):
    gamma = o.get("gamma", 5.0 / 3.0)
    mu = o.get("mu", _VORTEX_MU)
    lo, hi = -10.0, 10.0

    def profile(x, y):
        r2 = x * x + y * y
        damp = np.exp(0.5 * (1.0 - r2))
        dv = mu / (np.sqrt(2.0) * np.pi) * damp
        db = mu / (2.0 * np.pi) * damp
        dp = -mu * mu * (1.0 + r2) / (8.0 * np.pi ** 2) * np.exp(1.0 - r2)
        return _stack(1.0, 1.0 - dv * y, 1.0 + dv * x, 0.0,
                      -db * y, db * x, 0.0, 1.0 + dp, gamma)

    def init(x, y):
        return profile(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def exact(x, y, t=0.05):
        span = hi - lo
        xs = (np.asarray(x, dtype=float) - t - lo) % span + lo
        ys = (np.asarray(y, dtype=float) - t - lo) % span + lo
        return profile(xs, ys)

    return ProblemSpec(
        id="smooth_vortex", xmin=lo, xmax=hi, ymin=lo, ymax=hi,
        nx=40, ny=40, gamma=gamma, t_end=0.05,
        bc={s: msh.periodic() for s in ("left", "right", "bottom", "top")},
        init=init, exact=exact,
        notes="near-vacuum pressure at the core; exercises the limiter")


def _shock_cloud(o):
    gamma = o.get("gamma", 5.0 / 3.0)
    left = np.array([3.86859, 0.0, 0.0, 0.0, 0.0, 2.1826182, -2.1826182, 167.345])
    right = np.array([1.0, -11.2536, 0.0, 0.0, 0.0, 0.56418958, 0.56418958, 1.0])

    def init(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        sel = x < 0.6
        rho = np.where(sel, left[0], right[0])
        cloud = (x - 0.8) ** 2 + (y - 0.5) ** 2 < 0.15 ** 2
        rho = np.where(cloud, 10.0, rho)
        pick = lambda i: np.where(sel, left[i], right[i])
        return _stack(rho, pick(1), pick(2), pick(3), pick(4), pick(5),
                      pick(6), pick(7), gamma)

    inflow_state = physics.cons_from_prim_arr(right, gamma)
    return ProblemSpec(
        id="shock_cloud", xmin=0.0, xmax=1.0, ymin=0.0, ymax=1.0,
        nx=200, ny=200, gamma=gamma, t_end=0.06,
        bc={"left": msh.outflow(), "right": msh.inflow(inflow_state),
            "bottom": msh.outflow(), "top": msh.outflow()},
        init=init, tvb_m=o.get("tvb_m", 50.0),
        notes="dense cloud hit by a strong fast shock; right side feeds in")


def _rotated_tube(o):
    gamma = o.get("gamma", 5.0 / 3.0)
    n = int(o.get("nx", 256))
    phi = np.deg2rad(45.0)
    c, s = np.cos(phi), np.sin(phi)
    b0 = 5.0 / _SQRT4PI
    # (rho, v_par, v_perp, v3, p, B_par, B_perp, B3) rotated into the grid frame
    left = dict(rho=1.0, vpar=10.0, vperp=0.0, v3=0.0, p=20.0, bpar=b0, bperp=b0, b3=0.0)
    right = dict(rho=1.0, vpar=-10.0, vperp=0.0, v3=0.0, p=1.0, bpar=b0, bperp=b0, b3=0.0)

    def cart(d):
        return (d["rho"],
                d["vpar"] * c - d["vperp"] * s, d["vpar"] * s + d["vperp"] * c,
                d["v3"],
                d["bpar"] * c - d["bperp"] * s, d["bpar"] * s + d["bperp"] * c,
                d["b3"], d["p"])

    lc, rc = cart(left), cart(right)

    def init(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        xi = x * c + y * s          # 1D coordinate across the oblique jump
        sel = xi < 0.5 * c + (1.0 / n) * s
        out = [np.where(sel, lc[i], rc[i]) for i in range(8)]
        return _stack(out[0], out[1], out[2], out[3], out[4], out[5],
                      out[6], out[7], gamma)

    lstate = physics.cons_from_prim_arr(np.array([lc[0], lc[1], lc[2], lc[3],
                                                  lc[4], lc[5], lc[6], lc[7]]), gamma)
    rstate = physics.cons_from_prim_arr(np.array([rc[0], rc[1], rc[2], rc[3],
                                                  rc[4], rc[5], rc[6], rc[7]]), gamma)
    return ProblemSpec(
        id="rotated_tube", xmin=0.0, xmax=1.0, ymin=0.0, ymax=2.0 / n,
        nx=n, ny=2, gamma=gamma, t_end=0.08 * c,
        bc={"left": msh.inflow(lstate), "right": msh.inflow(rstate),
            "bottom": msh.shifted_periodic(2), "top": msh.shifted_periodic(2)},
        init=init, tvb_m=o.get("tvb_m", 50.0),
        notes="oblique Riemann problem on a two-row strip; the diagonal "
              "field component stays constant in the exact solution")


def _shock_tube(o):
    """Axis-aligned variant of the oblique tube, used as the 1D reference."""
    gamma = o.get("gamma", 5.0 / 3.0)
    n = int(o.get("nx", 1024))
    b0 = 5.0 / _SQRT4PI
    lc = (1.0, 10.0, 0.0, 0.0, b0, b0, 0.0, 20.0)
    rc = (1.0, -10.0, 0.0, 0.0, b0, b0, 0.0, 1.0)

    def init(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float),
                                   np.asarray(y, dtype=float))
        sel = x < 0.5
        out = [np.where(sel, lc[i], rc[i]) for i in range(8)]
        return _stack(out[0], out[1], out[2], out[3], out[4], out[5],
                      out[6], out[7], gamma)

    lstate = physics.cons_from_prim_arr(np.array(lc, dtype=float), gamma)
    rstate = physics.cons_from_prim_arr(np.array(rc, dtype=float), gamma)
    return ProblemSpec(
        id="shock_tube", xmin=0.0, xmax=1.0, ymin=0.0, ymax=2.0 / n,
        nx=n, ny=2, gamma=gamma, t_end=0.08,
        bc={"left": msh.inflow(lstate), "right": msh.inflow(rstate),
            "bottom": msh.periodic(), "top": msh.periodic()},
        init=init, tvb_m=o.get("tvb_m", 50.0),
        notes="axis-aligned counterpart of rotated_tube (reference profile)")


def _blast(o, extreme: bool):
    gamma = o.get("gamma", 1.4)
    if extreme:
        pe, pa, ba = 1e4, 0.1, 1000.0 / _SQRT4PI
        t_end, pid = 0.001, "blast_extreme"
    else:
        pe, pa, ba = 1e3, 0.1, 100.0 / _SQRT4PI
        t_end, pid = 0.01, "blast_standard"

    def init(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        p = np.where(r < 0.1, pe, pa)
        return _stack(1.0, 0.0, 0.0, 0.0, ba, 0.0, 0.0, p, gamma)

    return ProblemSpec(
        id=pid, xmin=-0.5, xmax=0.5, ymin=-0.5, ymax=0.5,
        nx=128, ny=128, gamma=gamma, t_end=t_end,
        bc={s: msh.outflow() for s in ("left", "right", "bottom", "top")},
        init=init, tvb_m=o.get("tvb_m", 50.0),
        notes="circular overpressure in a strongly magnetized quiet medium")


def _jet(o):
    gamma = o.get("gamma", 1.4)
    ba = float(o.get("b_ambient", np.sqrt(20000.0)))
    rho_a = 0.1 * gamma
    jet_state = physics.cons_from_prim_arr(
        np.array([gamma, 0.0, 800.0, 0.0, 0.0, ba, 0.0, 1.0]), gamma)

    def init(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        one = np.ones(np.broadcast(x, y).shape)
        return _stack(rho_a * one, 0.0, 0.0, 0.0, 0.0, ba, 0.0, 1.0, gamma)

    return ProblemSpec(
        id="jet", xmin=0.0, xmax=0.5, ymin=0.0, ymax=1.5,
        nx=100, ny=300, gamma=gamma, t_end=0.002,
        bc={"left": msh.reflect(), "right": msh.outflow(),
            "bottom": msh.inflow(jet_state, mask=lambda x: np.abs(x) < 0.05),
            "top": msh.outflow()},
        init=init, tvb_m=o.get("tvb_m", 50.0),
        notes="dense hypersonic beam entering a magnetized medium; the "
              "computation uses the mirror half-domain")


def _pressure_probe(o):
    gamma = float(o.get("gamma", 5.0 / 3.0))
    eps = float(o.get("epsilon", 0.01))
    n = int(o.get("nx", 65))

    def init(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        p = 1.0 - np.exp(-(x * x + y * y))
        bx = 1.0 + 0.5 * eps * np.arctan(x)
        by = 1.0 + 0.5 * eps * np.arctan(y)
        return _stack(1.0, 1.0, 1.0, 0.0, bx, by, 0.0, p, gamma)

    return ProblemSpec(
        id="pressure_probe", xmin=-0.5, xmax=0.5, ymin=-0.5, ymax=0.5,
        nx=n, ny=int(o.get("ny", n)), gamma=gamma, t_end=2e-3,
        bc={s: msh.outflow() for s in ("left", "right", "bottom", "top")},
        init=init,
        notes="pressure touches zero at the origin; the field perturbation "
              "carries nonzero divergence there")


def _orszag_tang(o):
    gamma = o.get("gamma", 5.0 / 3.0)

    def init(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return _stack(gamma ** 2, -np.sin(y), np.sin(x), 0.0,
                      -np.sin(y), np.sin(2.0 * x), 0.0, gamma, gamma)

    return ProblemSpec(
        id="orszag_tang", xmin=0.0, xmax=2.0 * np.pi, ymin=0.0, ymax=2.0 * np.pi,
        nx=200, ny=200, gamma=gamma, t_end=2.0,
        bc={s: msh.periodic() for s in ("left", "right", "bottom", "top")},
        init=init, tvb_m=o.get("tvb_m", 50.0),
        notes="smooth vortical data steepening into interacting shocks")


def _rotor(o):
    gamma = o.get("gamma", 5.0 / 3.0)
    r0, r1 = 0.1, 0.115
    u0 = 1.0
    b0 = 2.5 / _SQRT4PI

    def init(x, y):
        x = np.asarray(x, dtype=float) - 0.5
        y = np.asarray(y, dtype=float) - 0.5
        r = np.hypot(x, y)
        taper = np.clip((r1 - r) / (r1 - r0), 0.0, 1.0)
        rho = 1.0 + 9.0 * taper
        rsafe = np.maximum(r, 1e-30)
        fac = np.where(r < r0, u0 / r0, u0 * taper / rsafe)
        return _stack(rho, -fac * y, fac * x, 0.0, b0, 0.0, 0.0, 0.5, gamma)

    return ProblemSpec(
        id="rotor", xmin=0.0, xmax=1.0, ymin=0.0, ymax=1.0,
        nx=200, ny=200, gamma=gamma, t_end=0.295,
        bc={s: msh.outflow() for s in ("left", "right", "bottom", "top")},
        init=init, tvb_m=o.get("tvb_m", 50.0),
        notes="spinning dense disk winding up the field")


def _constant_state(o):
    gamma = o.get("gamma", 5.0 / 3.0)

    def init(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        one = np.ones(np.broadcast(x, y).shape)
        return _stack(one, 0.5, -0.25, 0.1, 0.75, -0.3, 0.2, 2.0, gamma)

    def exact(x, y, t=0.0):
        return init(x, y)

    return ProblemSpec(
        id="constant_state", xmin=0.0, xmax=1.0, ymin=0.0, ymax=1.0,
        nx=16, ny=16, gamma=gamma, t_end=0.1,
        bc={s: msh.periodic() for s in ("left", "right", "bottom", "top")},
        init=init, exact=exact, notes="debug problem; must stay constant")


_BUILDERS = {
    "smooth_sine": _smooth_sine,
    "smooth_vortex": _smooth_vortex,
    "shock_cloud": _shock_cloud,
    "rotated_tube": _rotated_tube,
    "shock_tube": _shock_tube,
    "blast_standard": lambda o: _blast(o, extreme=False),
    "blast_extreme": lambda o: _blast(o, extreme=True),
    "jet": _jet,
    "pressure_probe": _pressure_probe,
    "orszag_tang": _orszag_tang,
    "rotor": _rotor,
    "constant_state": _constant_state,
}

PROBLEM_IDS = tuple(sorted(_BUILDERS))

_SPEC_FIELDS = ("nx", "ny", "t_end", "tvb_m", "cfl")


def make_problem(problem_id: str, overrides: dict | None = None) -> ProblemSpec:
    """Build a fully populated problem description.

    ``overrides`` may adjust mesh size, final time, limiter constant, and
    problem-specific parameters (documented per problem).
    """
    if problem_id not in _BUILDERS:
        raise KeyError(f"unknown problem {problem_id!r}; valid ids: "
                       + ", ".join(PROBLEM_IDS))
    o = dict(overrides or {})
    spec = _BUILDERS[problem_id](o)
    upd = {}
    for k in _SPEC_FIELDS:
        if k in o and o[k] is not None:
            cast = int if k in ("nx", "ny") else float
            upd[k] = cast(o[k])
    return replace(spec, **upd) if upd else spec


def exact_solution(problem_id: str, x, y, t):
    """Pointwise exact conserved state where one is defined."""
    spec = make_problem(problem_id)
    if problem_id == "smooth_sine":
        return spec.init(x, y, t)
    if problem_id == "smooth_vortex":
        return spec.exact(x, y, t)
    if problem_id == "constant_state":
        return spec.init(x, y)
    raise KeyError(f"no exact solution registered for {problem_id!r}")
