"""Pointwise ideal-MHD physics.

Conserved state layout (index constants below):
    U = (rho, m1, m2, m3, B1, B2, B3, E)

The module provides small frozen dataclasses for single states plus
vectorized array functions operating on (..., 8) arrays.  The array
functions are the single source of truth for the formulas; the typed
wrappers delegate to them.  Admissibility (rho > 0 and positive internal
energy) is checked by operations, never enforced by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RHO", "MX", "MY", "MZ", "BX", "BY", "BZ", "EN",
    "EosIdeal", "ConservedState", "PrimitiveState", "StarDirection",
    "to_primitive", "to_conserved", "internal_energy", "is_admissible",
    "nstar_functional", "flux", "godunov_source", "spectral_radius",
    "pp_viscosity_alpha", "lf_split_functional",
    "internal_energy_arr", "is_admissible_arr", "nstar_arr", "flux_arr",
    "godunov_source_arr", "spectral_radius_arr", "pp_viscosity_alpha_arr",
    "lf_split_arr", "prim_from_cons_arr", "cons_from_prim_arr",
]

RHO, MX, MY, MZ, BX, BY, BZ, EN = range(8)


def _vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape == ():
        v = np.full(3, float(v))
    if v.shape != (3,):
        raise ValueError("expected a 3-component vector")
    return v


@dataclass(frozen=True)
class EosIdeal:
    """Gamma-law equation of state p = (gamma - 1) rho e."""

    gamma: float

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma <= 1.0:
            raise ValueError("adiabatic index must be a finite real > 1")

    def pressure(self, rho, e):
        return (self.gamma - 1.0) * rho * e

    def specific_internal_energy(self, rho, p):
        return p / ((self.gamma - 1.0) * rho)

    def sound_speed(self, rho, p):
        return np.sqrt(self.gamma * p / rho)


@dataclass(frozen=True)
class ConservedState:
    rho: float
    m: np.ndarray = field(default_factory=lambda: np.zeros(3))
    B: np.ndarray = field(default_factory=lambda: np.zeros(3))
    E: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "m", _vec3(self.m))
        object.__setattr__(self, "B", _vec3(self.B))
        object.__setattr__(self, "E", float(self.E))
        if not (np.isfinite(self.rho) and np.isfinite(self.E)
                and np.all(np.isfinite(self.m)) and np.all(np.isfinite(self.B))):
            raise ValueError("conserved state entries must be finite")

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.rho], self.m, self.B, [self.E]])

    @classmethod
    def from_array(cls, u) -> "ConservedState":
        u = np.asarray(u, dtype=float)
        return cls(u[RHO], u[MX:MZ + 1], u[BX:BZ + 1], u[EN])


@dataclass(frozen=True)
class PrimitiveState:
    rho: float
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    B: np.ndarray = field(default_factory=lambda: np.zeros(3))
    p: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "v", _vec3(self.v))
        object.__setattr__(self, "B", _vec3(self.B))
        object.__setattr__(self, "p", float(self.p))
        if self.rho <= 0:
            raise ValueError("nonpositive density")

    @property
    def p_total(self) -> float:
        return self.p + 0.5 * float(self.B @ self.B)


@dataclass(frozen=True)
class StarDirection:
    """Auxiliary (v*, B*) pair parameterizing the linear admissibility form."""

    v_star: np.ndarray = field(default_factory=lambda: np.zeros(3))
    B_star: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "v_star", _vec3(self.v_star))
        object.__setattr__(self, "B_star", _vec3(self.B_star))
        if not (np.all(np.isfinite(self.v_star)) and np.all(np.isfinite(self.B_star))):
            raise ValueError("star direction entries must be finite")


# ---------------------------------------------------------------------------
# array kernels on (..., 8)
# ---------------------------------------------------------------------------

def _asu(u) -> np.ndarray:
    if isinstance(u, ConservedState):
        return u.as_array()
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != 8:
        raise ValueError("conserved array must have trailing dimension 8")
    return u


def _check_axis(axis: int, allowed=(1, 2, 3)) -> int:
    if axis not in allowed:
        raise ValueError(f"axis index must be one of {allowed}, got {axis}")
    return axis - 1


def internal_energy_arr(u: np.ndarray) -> np.ndarray:
    rho = u[..., RHO]
    m2 = u[..., MX] ** 2 + u[..., MY] ** 2 + u[..., MZ] ** 2
    b2 = u[..., BX] ** 2 + u[..., BY] ** 2 + u[..., BZ] ** 2
    return u[..., EN] - 0.5 * (m2 / rho + b2)


def is_admissible_arr(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    finite = np.all(np.isfinite(u), axis=-1)
    rho = u[..., RHO]
    with np.errstate(divide="ignore", invalid="ignore"):
        e = internal_energy_arr(u)
    return finite & (rho > 0.0) & (e > 0.0)


def prim_from_cons_arr(u: np.ndarray, gamma: float) -> np.ndarray:
    """(rho, v1, v2, v3, B1, B2, B3, p) from conserved; requires rho > 0."""
    w = np.array(u, dtype=float, copy=True)
    rho = u[..., RHO]
    w[..., MX:MZ + 1] = u[..., MX:MZ + 1] / rho[..., None]
    w[..., EN] = (gamma - 1.0) * internal_energy_arr(u)
    return w


def cons_from_prim_arr(w: np.ndarray, gamma: float) -> np.ndarray:
    u = np.array(w, dtype=float, copy=True)
    rho = w[..., RHO]
    v2 = w[..., MX] ** 2 + w[..., MY] ** 2 + w[..., MZ] ** 2
    b2 = w[..., BX] ** 2 + w[..., BY] ** 2 + w[..., BZ] ** 2
    u[..., MX:MZ + 1] = w[..., MX:MZ + 1] * rho[..., None]
    u[..., EN] = w[..., EN] / (gamma - 1.0) + 0.5 * (rho * v2 + b2)
    return u


def nstar_arr(u: np.ndarray, v_star: np.ndarray, b_star: np.ndarray) -> np.ndarray:
    """U . n* + |B*|^2/2 with n* = (|v*|^2/2, -v*, -B*, 1)."""
    u = np.asarray(u, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    b_star = np.asarray(b_star, dtype=float)
    vs2 = np.sum(v_star * v_star, axis=-1)
    bs2 = np.sum(b_star * b_star, axis=-1)
    mdv = np.sum(u[..., MX:MZ + 1] * v_star, axis=-1)
    bdb = np.sum(u[..., BX:BZ + 1] * b_star, axis=-1)
    return 0.5 * u[..., RHO] * vs2 - mdv - bdb + u[..., EN] + 0.5 * bs2


def flux_arr(u: np.ndarray, axis: int, gamma: float) -> np.ndarray:
    """Ideal-MHD flux along `axis` (1-based); requires rho > 0."""
    d = _check_axis(axis)
    u = np.asarray(u, dtype=float)
    rho = u[..., RHO]
    v = u[..., MX:MZ + 1] / rho[..., None]
    B = u[..., BX:BZ + 1]
    p = (gamma - 1.0) * internal_energy_arr(u)
    b2 = np.sum(B * B, axis=-1)
    ptot = p + 0.5 * b2
    vd = v[..., d]
    Bd = B[..., d]
    vB = np.sum(v * B, axis=-1)
    f = np.empty_like(u)
    f[..., RHO] = rho * vd
    f[..., MX:MZ + 1] = u[..., MX:MZ + 1] * vd[..., None] - Bd[..., None] * B
    f[..., MX + d] += ptot
    f[..., BX:BZ + 1] = vd[..., None] * B - Bd[..., None] * v
    f[..., EN] = vd * (u[..., EN] + ptot) - Bd * vB
    return f


def godunov_source_arr(u: np.ndarray) -> np.ndarray:
    """Source direction S(U) = (0, B, v, v.B) of the symmetrizable form."""
    u = np.asarray(u, dtype=float)
    rho = u[..., RHO]
    v = u[..., MX:MZ + 1] / rho[..., None]
    B = u[..., BX:BZ + 1]
    s = np.empty_like(u)
    s[..., RHO] = 0.0
    s[..., MX:MZ + 1] = B
    s[..., BX:BZ + 1] = v
    s[..., EN] = np.sum(v * B, axis=-1)
    return s


def _fast_speed_sq(cs2, b2, bd2):
    """Largest root of the magnetosonic quadratic, given cs^2, |B|^2/rho, Bd^2/rho."""
    ssum = cs2 + b2
    rad = np.sqrt(np.maximum(ssum * ssum - 4.0 * cs2 * bd2, 0.0))
    return 0.5 * (ssum + rad)


def spectral_radius_arr(u: np.ndarray, axis: int, gamma: float) -> np.ndarray:
    d = _check_axis(axis)
    u = np.asarray(u, dtype=float)
    rho = u[..., RHO]
    vd = u[..., MX + d] / rho
    b2 = (u[..., BX] ** 2 + u[..., BY] ** 2 + u[..., BZ] ** 2) / rho
    bd2 = u[..., BX + d] ** 2 / rho
    p = (gamma - 1.0) * internal_energy_arr(u)
    cs2 = gamma * p / rho
    return np.abs(vd) + np.sqrt(_fast_speed_sq(cs2, b2, bd2))


def pp_viscosity_alpha_arr(u: np.ndarray, ut: np.ndarray, axis: int,
                           gamma: float) -> np.ndarray:
    """Lower bound for the LF viscosity that makes the flux splitting
    admissibility-safe.

    Evaluates the bound at the two closed-form averaging weights
    sigma = rho/(rho+rho~) and sigma = sqrt(rho)/(sqrt(rho)+sqrt(rho~))
    and returns the smaller value.
    """
    d = _check_axis(axis)
    u = np.asarray(u, dtype=float)
    ut = np.asarray(ut, dtype=float)

    def parts(z):
        rho = z[..., RHO]
        e = internal_energy_arr(z) / rho
        p = (gamma - 1.0) * rho * e
        cs2 = (p / (rho * np.sqrt(2.0 * e))) ** 2
        b2 = (z[..., BX] ** 2 + z[..., BY] ** 2 + z[..., BZ] ** 2) / rho
        bd2 = z[..., BX + d] ** 2 / rho
        c = np.sqrt(_fast_speed_sq(cs2, b2, bd2))
        vd = z[..., MX + d] / rho
        return rho, vd, c

    rho, vd, c = parts(u)
    rhot, vdt, ct = parts(ut)
    cmax = np.maximum(c, ct)
    base = np.maximum(np.abs(vd) + c, np.abs(vdt) + ct)
    db = np.sqrt(np.sum((u[..., BX:BZ + 1] - ut[..., BX:BZ + 1]) ** 2, axis=-1))

    mid1 = np.abs(rho * vd + rhot * vdt) / (rho + rhot) + cmax
    a1 = np.maximum(base, mid1) + db / np.sqrt(2.0 * (rho + rhot))
    sq, sqt = np.sqrt(rho), np.sqrt(rhot)
    mid2 = np.abs(sq * vd + sqt * vdt) / (sq + sqt) + cmax
    a2 = np.maximum(base, mid2) + db / (sq + sqt)
    return np.minimum(a1, a2)


def lf_split_arr(u, ut, v_star, b_star, alpha, axis: int, gamma: float):
    """Functional whose positivity underwrites the PP property of the
    LF flux splitting: (U - F(U)/a + U~ + F(U~)/a) . n* + |B*|^2
    + (Bd - Bd~)/a * (v* . B*)."""
    d = _check_axis(axis)
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha == 0.0):
        raise ZeroDivisionError("viscosity parameter alpha must be nonzero")
    z = u - flux_arr(u, axis, gamma) / alpha[..., None]
    zt = ut + flux_arr(ut, axis, gamma) / alpha[..., None]
    v_star = np.asarray(v_star, dtype=float)
    b_star = np.asarray(b_star, dtype=float)
    # nstar_arr carries |B*|^2/2; the split functional wants the full |B*|^2.
    tot = nstar_arr(z + zt, v_star, b_star) + 0.5 * np.sum(b_star * b_star, axis=-1)
    jump = (u[..., BX + d] - ut[..., BX + d]) / alpha
    return tot + jump * np.sum(v_star * b_star, axis=-1)


# ---------------------------------------------------------------------------
# typed single-state API
# ---------------------------------------------------------------------------

def _require_positive_rho(u: np.ndarray):
    if np.any(~np.isfinite(u)):
        raise ValueError("state entries must be finite")
    if u[RHO] <= 0.0:
        raise ValueError("nonpositive density")


def to_primitive(state: ConservedState, eos: EosIdeal) -> PrimitiveState:
    u = _asu(state)
    _require_positive_rho(u)
    w = prim_from_cons_arr(u, eos.gamma)
    return PrimitiveState(w[RHO], w[MX:MZ + 1], w[BX:BZ + 1], w[EN])


def to_conserved(state: PrimitiveState, eos: EosIdeal) -> ConservedState:
    w = np.concatenate([[state.rho], state.v, state.B, [state.p]])
    u = cons_from_prim_arr(w, eos.gamma)
    return ConservedState.from_array(u)


def internal_energy(state: ConservedState) -> float:
    u = _asu(state)
    _require_positive_rho(u)
    return float(internal_energy_arr(u))


def is_admissible(state: ConservedState) -> bool:
    return bool(is_admissible_arr(_asu(state)))


def nstar_functional(state: ConservedState, star: StarDirection) -> float:
    return float(nstar_arr(_asu(state), star.v_star, star.B_star))


def flux(state: ConservedState, axis: int, eos: EosIdeal) -> np.ndarray:
    _check_axis(axis, allowed=(1, 2))
    u = _asu(state)
    _require_positive_rho(u)
    return flux_arr(u, axis, eos.gamma)


def godunov_source(state: ConservedState) -> np.ndarray:
    u = _asu(state)
    _require_positive_rho(u)
    return godunov_source_arr(u)


def spectral_radius(state: ConservedState, axis: int, eos: EosIdeal) -> float:
    u = _asu(state)
    if not is_admissible_arr(u):
        raise ValueError("spectral radius requires an admissible state")
    return float(spectral_radius_arr(u, axis, eos.gamma))


def pp_viscosity_alpha(state: ConservedState, other: ConservedState,
                       axis: int, eos: EosIdeal) -> float:
    u, ut = _asu(state), _asu(other)
    if not (is_admissible_arr(u) and is_admissible_arr(ut)):
        raise ValueError("viscosity bound requires admissible states")
    return float(pp_viscosity_alpha_arr(u, ut, axis, eos.gamma))


def lf_split_functional(state: ConservedState, other: ConservedState,
                        star: StarDirection, alpha: float, axis: int,
                        eos: EosIdeal) -> float:
    u, ut = _asu(state), _asu(other)
    return float(lf_split_arr(u, ut, star.v_star, star.B_star,
                              float(alpha), axis, eos.gamma))
