"""Numba kernels for the DG operator, limiters, and reductions.

The pointwise formulas here intentionally mirror ``physics``; the two code
paths cross-check each other in the test suite (the K = 0 DG operator must
reproduce the numpy first-order scheme).  Scalar component blocks appear in
the dof vector in the order (rho, m1, m2, m3, B3, E) followed by the
divergence-free (B1, B2) block.
"""

from __future__ import annotations

import os

# the portable built-in work queue avoids TBB/OMP version sensitivities;
# must be selected before numba's parallel machinery loads
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

import numpy as np
from numba import njit, prange

_SCOMP = (0, 1, 2, 3, 6, 7)   # U-component of each scalar block


# ---------------------------------------------------------------------------
# pointwise helpers
# ---------------------------------------------------------------------------

@njit(inline="always")
def _eval_state(dof, ns, nv, phi, b1, b2, iq, out):
    for c in range(6):
        acc = 0.0
        base = c * ns
        for a in range(ns):
            acc += dof[base + a] * phi[iq, a]
        out[_SCOMP[c]] = acc
    a4 = 0.0
    a5 = 0.0
    base = 6 * ns
    for k in range(nv):
        a4 += dof[base + k] * b1[iq, k]
        a5 += dof[base + k] * b2[iq, k]
    out[4] = a4
    out[5] = a5


@njit(inline="always")
def _eint(u):
    return u[7] - 0.5 * ((u[1] * u[1] + u[2] * u[2] + u[3] * u[3]) / u[0]
                         + u[4] * u[4] + u[5] * u[5] + u[6] * u[6])


@njit(inline="always")
def _flux_dir(u, gamma, d, out):
    rho = u[0]
    vx = u[1] / rho
    vy = u[2] / rho
    vz = u[3] / rho
    bx = u[4]
    by = u[5]
    bz = u[6]
    b2 = bx * bx + by * by + bz * bz
    p = (gamma - 1.0) * _eint(u)
    ptot = p + 0.5 * b2
    vb = vx * bx + vy * by + vz * bz
    if d == 0:
        vd = vx
        bd = bx
    else:
        vd = vy
        bd = by
    out[0] = rho * vd
    out[1] = u[1] * vd - bd * bx
    out[2] = u[2] * vd - bd * by
    out[3] = u[3] * vd - bd * bz
    out[1 + d] += ptot
    out[4] = vd * bx - bd * vx
    out[5] = vd * by - bd * vy
    out[6] = vd * bz - bd * vz
    out[7] = vd * (u[7] + ptot) - bd * vb
    return p


@njit(inline="always")
def _source(u, out):
    rho = u[0]
    vx = u[1] / rho
    vy = u[2] / rho
    vz = u[3] / rho
    out[0] = 0.0
    out[1] = u[4]
    out[2] = u[5]
    out[3] = u[6]
    out[4] = vx
    out[5] = vy
    out[6] = vz
    out[7] = vx * u[4] + vy * u[5] + vz * u[6]


@njit(inline="always")
def _tech_speed(u, gamma, d):
    """Dissipation wave speed with c_s = p/(rho sqrt(2e)), e clamped >= 0."""
    rho = u[0]
    if rho <= 0.0:
        return 1e300
    e = _eint(u) / rho
    if e < 0.0:
        e = 0.0
    # p/(rho sqrt(2e)) squared for the gamma law: (gamma-1)^2 e / 2
    cs2 = 0.5 * (gamma - 1.0) * (gamma - 1.0) * e
    b2 = (u[4] * u[4] + u[5] * u[5] + u[6] * u[6]) / rho
    bd = u[4 + d]
    bd2 = bd * bd / rho
    ssum = cs2 + b2
    rad = ssum * ssum - 4.0 * cs2 * bd2
    if rad < 0.0:
        rad = 0.0
    return np.sqrt(0.5 * (ssum + np.sqrt(rad)))


@njit(inline="always")
def _pp_alpha_pair(u, ut, d, gamma):
    """Min over the two averaging weights of the PP viscosity bound."""
    rho = u[0]
    rhot = ut[0]
    if rho <= 0.0 or rhot <= 0.0:
        return 1e300
    vd = u[1 + d] / rho
    vdt = ut[1 + d] / rhot
    c = _tech_speed(u, gamma, d)
    ct = _tech_speed(ut, gamma, d)
    cmax = max(c, ct)
    base = max(abs(vd) + c, abs(vdt) + ct)
    db1 = u[4] - ut[4]
    db2 = u[5] - ut[5]
    db3 = u[6] - ut[6]
    db = np.sqrt(db1 * db1 + db2 * db2 + db3 * db3)
    a1 = max(base, abs(rho * vd + rhot * vdt) / (rho + rhot) + cmax) \
        + db / np.sqrt(2.0 * (rho + rhot))
    sq = np.sqrt(rho)
    sqt = np.sqrt(rhot)
    a2 = max(base, abs(sq * vd + sqt * vdt) / (sq + sqt) + cmax) + db / (sq + sqt)
    return min(a1, a2)


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def traces_x(coef, ns, nv, phi_xr, phi_xl, b1_xr, b1_xl, b2_xr, b2_xl, tx):
    nxf, ny, q = tx.shape[0], tx.shape[1], tx.shape[2]
    for f in prange(nxf):
        for j in range(ny):
            dof_l = coef[f, j + 1]
            dof_r = coef[f + 1, j + 1]
            for mu in range(q):
                _eval_state(dof_l, ns, nv, phi_xr, b1_xr, b2_xr, mu, tx[f, j, mu, 0])
                _eval_state(dof_r, ns, nv, phi_xl, b1_xl, b2_xl, mu, tx[f, j, mu, 1])


@njit(cache=True, parallel=True)
def traces_y(coef, ns, nv, phi_yt, phi_yb, b1_yt, b1_yb, b2_yt, b2_yb, ty):
    nx, nyf, q = ty.shape[0], ty.shape[1], ty.shape[2]
    for i in prange(nx):
        for f in range(nyf):
            dof_b = coef[i + 1, f]
            dof_t = coef[i + 1, f + 1]
            for mu in range(q):
                _eval_state(dof_b, ns, nv, phi_yt, b1_yt, b2_yt, mu, ty[i, f, mu, 0])
                _eval_state(dof_t, ns, nv, phi_yb, b1_yb, b2_yb, mu, ty[i, f, mu, 1])


# ---------------------------------------------------------------------------
# reductions over traces
# ---------------------------------------------------------------------------

@njit(cache=True)
def reduce_pp_alpha(tx, ty, gamma):
    a1 = 0.0
    nxf, nyr, q = tx.shape[0], tx.shape[1], tx.shape[2]
    for f in range(nxf - 1):
        for j in range(nyr):
            for mu in range(q):
                for s in range(2):
                    v = _pp_alpha_pair(tx[f + 1, j, mu, s], tx[f, j, mu, s], 0, gamma)
                    if v > a1:
                        a1 = v
    a2 = 0.0
    nxr, nyf, q2 = ty.shape[0], ty.shape[1], ty.shape[2]
    for i in range(nxr):
        for f in range(nyf - 1):
            for mu in range(q2):
                for s in range(2):
                    v = _pp_alpha_pair(ty[i, f + 1, mu, s], ty[i, f, mu, s], 1, gamma)
                    if v > a2:
                        a2 = v
    return a1, a2


@njit(cache=True)
def reduce_jump_ratios(tx, ty):
    """Max over faces of |normal-B jump|/2 scaled by 1/sqrt(rho) of the
    adjacent interior traces (both sides)."""
    th1 = 0.0
    nxf, nyr, q = tx.shape[0], tx.shape[1], tx.shape[2]
    for f in range(nxf):
        for j in range(nyr):
            for mu in range(q):
                bj = 0.5 * abs(tx[f, j, mu, 1, 4] - tx[f, j, mu, 0, 4])
                r = min(tx[f, j, mu, 0, 0], tx[f, j, mu, 1, 0])
                if r <= 0.0:
                    r = 1e-300
                v = bj / np.sqrt(r)
                if v > th1:
                    th1 = v
    th2 = 0.0
    nxr, nyf, q2 = ty.shape[0], ty.shape[1], ty.shape[2]
    for i in range(nxr):
        for f in range(nyf):
            for mu in range(q2):
                bj = 0.5 * abs(ty[i, f, mu, 1, 5] - ty[i, f, mu, 0, 5])
                r = min(ty[i, f, mu, 0, 0], ty[i, f, mu, 1, 0])
                if r <= 0.0:
                    r = 1e-300
                v = bj / np.sqrt(r)
                if v > th2:
                    th2 = v
    return th1, th2


@njit(cache=True, parallel=True)
def divergence_faces(tx, ty, wf, dx, dy, out):
    """Face-average discrete divergence of B per cell (arithmetic-mean traces)."""
    nx, ny = out.shape
    q = wf.shape[0]
    for i in prange(nx):
        for j in range(ny):
            accx = 0.0
            accy = 0.0
            for mu in range(q):
                br = 0.5 * (tx[i + 1, j, mu, 0, 4] + tx[i + 1, j, mu, 1, 4])
                bl = 0.5 * (tx[i, j, mu, 0, 4] + tx[i, j, mu, 1, 4])
                accx += wf[mu] * (br - bl)
                bt = 0.5 * (ty[i, j + 1, mu, 0, 5] + ty[i, j + 1, mu, 1, 5])
                bb = 0.5 * (ty[i, j, mu, 0, 5] + ty[i, j, mu, 1, 5])
                accy += wf[mu] * (bt - bb)
            out[i, j] = accx / dx + accy / dy


# ---------------------------------------------------------------------------
# interface fluxes
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def lf_flux_faces(tr, d, alpha, gamma, guard_tol, fhat, bjump, s_lo, s_hi, bad):
    """LF flux, normal-B half-jump, and source traces per face node.

    ``tr`` is a trace array (nfaces, nrows, q, 2, 8); side 0 is the lower /
    left cell's trace.  ``guard_tol`` < 0 disables the admissibility guard,
    otherwise a trace is rejected when rho <= 0 or when the internal energy
    is negative beyond rounding of its positive parts.
    """
    nf, nr, q = tr.shape[0], tr.shape[1], tr.shape[2]
    for f in prange(nf):
        floc = np.empty(8)
        froc = np.empty(8)
        for j in range(nr):
            for mu in range(q):
                ul = tr[f, j, mu, 0]
                ur = tr[f, j, mu, 1]
                if guard_tol >= 0.0:
                    for s in range(2):
                        u = tr[f, j, mu, s]
                        rho = u[0]
                        ok = rho > 0.0
                        if ok:
                            scale = abs(u[7]) + 0.5 * ((u[1] * u[1] + u[2] * u[2]
                                        + u[3] * u[3]) / rho + u[4] * u[4]
                                        + u[5] * u[5] + u[6] * u[6]) + 1.0
                            ok = _eint(u) > -guard_tol * scale
                        if not ok:
                            bad[f, j] = mu + 1
                if ul[0] <= 0.0 or ur[0] <= 0.0:
                    bad[f, j] = mu + 1
                    continue
                _flux_dir(ul, gamma, d, floc)
                _flux_dir(ur, gamma, d, froc)
                for c in range(8):
                    fhat[f, j, mu, c] = 0.5 * (floc[c] + froc[c] - alpha * (ur[c] - ul[c]))
                bjump[f, j, mu] = 0.5 * (ur[4 + d] - ul[4 + d])
                _source(ul, s_lo[f, j, mu])
                _source(ur, s_hi[f, j, mu])


# ---------------------------------------------------------------------------
# DG residual assembly
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def residual_cells(coef, fx, fy, bjx, bjy, sxl, sxr, syl, syr,
                   ns, nv, wv, phi_v, dphix_v, dphiy_v, b1_v, b2_v,
                   db1x_v, db1y_v, db2x_v, db2y_v,
                   wf, phi_xr, phi_xl, phi_yt, phi_yb,
                   b1_xr, b1_xl, b1_yt, b1_yb, b2_xr, b2_xl, b2_yt, b2_yb,
                   gram_inv, dx, dy, gamma, include_source, res):
    nx, ny, ndof = res.shape
    nqv = wv.shape[0]
    q = wf.shape[0]
    for idx in prange(nx * ny):
        i = idx // ny
        j = idx % ny
        dof = coef[i + 1, j + 1]
        u = np.empty(8)
        f1 = np.empty(8)
        f2 = np.empty(8)
        r = np.zeros(ndof)
        rv = np.zeros(nv)
        for qq in range(nqv):
            _eval_state(dof, ns, nv, phi_v, b1_v, b2_v, qq, u)
            _flux_dir(u, gamma, 0, f1)
            _flux_dir(u, gamma, 1, f2)
            w = wv[qq]
            for c in range(6):
                comp = _SCOMP[c]
                base = c * ns
                fc1 = f1[comp] / dx
                fc2 = f2[comp] / dy
                for a in range(1, ns):
                    r[base + a] += w * (dphix_v[qq, a] * fc1 + dphiy_v[qq, a] * fc2)
            for k in range(nv):
                rv[k] += w * ((db1x_v[qq, k] * f1[4] + db2x_v[qq, k] * f1[5]) / dx
                              + (db1y_v[qq, k] * f2[4] + db2y_v[qq, k] * f2[5]) / dy)
        for mu in range(q):
            wmu = wf[mu]
            for c in range(6):
                comp = _SCOMP[c]
                base = c * ns
                gr = fx[i + 1, j, mu, comp]
                gl = fx[i, j, mu, comp]
                gt = fy[i, j + 1, mu, comp]
                gb = fy[i, j, mu, comp]
                if include_source:
                    gr += bjx[i + 1, j, mu] * sxl[i + 1, j, mu, comp]
                    gl -= bjx[i, j, mu] * sxr[i, j, mu, comp]
                    gt += bjy[i, j + 1, mu] * syl[i, j + 1, mu, comp]
                    gb -= bjy[i, j, mu] * syr[i, j, mu, comp]
                for a in range(ns):
                    r[base + a] -= wmu * ((phi_xr[mu, a] * gr - phi_xl[mu, a] * gl) / dx
                                          + (phi_yt[mu, a] * gt - phi_yb[mu, a] * gb) / dy)
            gr4 = fx[i + 1, j, mu, 4]
            gr5 = fx[i + 1, j, mu, 5]
            gl4 = fx[i, j, mu, 4]
            gl5 = fx[i, j, mu, 5]
            gt4 = fy[i, j + 1, mu, 4]
            gt5 = fy[i, j + 1, mu, 5]
            gb4 = fy[i, j, mu, 4]
            gb5 = fy[i, j, mu, 5]
            if include_source:
                gr4 += bjx[i + 1, j, mu] * sxl[i + 1, j, mu, 4]
                gr5 += bjx[i + 1, j, mu] * sxl[i + 1, j, mu, 5]
                gl4 -= bjx[i, j, mu] * sxr[i, j, mu, 4]
                gl5 -= bjx[i, j, mu] * sxr[i, j, mu, 5]
                gt4 += bjy[i, j + 1, mu] * syl[i, j + 1, mu, 4]
                gt5 += bjy[i, j + 1, mu] * syl[i, j + 1, mu, 5]
                gb4 -= bjy[i, j, mu] * syr[i, j, mu, 4]
                gb5 -= bjy[i, j, mu] * syr[i, j, mu, 5]
            for k in range(nv):
                rv[k] -= wmu * (((b1_xr[mu, k] * gr4 + b2_xr[mu, k] * gr5)
                                 - (b1_xl[mu, k] * gl4 + b2_xl[mu, k] * gl5)) / dx
                                + ((b1_yt[mu, k] * gt4 + b2_yt[mu, k] * gt5)
                                   - (b1_yb[mu, k] * gb4 + b2_yb[mu, k] * gb5)) / dy)
        for c in range(6 * ns):
            res[i, j, c] = r[c]
        for k in range(nv):
            acc = 0.0
            for l in range(nv):
                acc += gram_inv[k, l] * rv[l]
            res[i, j, 6 * ns + k] = acc


# ---------------------------------------------------------------------------
# admissibility limiter
# ---------------------------------------------------------------------------

@njit(inline="always")
def _combo_eint(avg, upt, th):
    r = avg[0] + th * (upt[0] - avg[0])
    m1 = avg[1] + th * (upt[1] - avg[1])
    m2 = avg[2] + th * (upt[2] - avg[2])
    m3 = avg[3] + th * (upt[3] - avg[3])
    b1 = avg[4] + th * (upt[4] - avg[4])
    b2 = avg[5] + th * (upt[5] - avg[5])
    b3 = avg[6] + th * (upt[6] - avg[6])
    en = avg[7] + th * (upt[7] - avg[7])
    return en - 0.5 * ((m1 * m1 + m2 * m2 + m3 * m3) / r + b1 * b1 + b2 * b2 + b3 * b3)


@njit(cache=True, parallel=True)
def pp_limit_cells(coef, ns, nv, const_dofs, phi_pp, b1_pp, b2_pp,
                   eps_rho, eps_e, changed, min_rho, min_e, bad):
    """Two-stage scaling limiter toward the cell average.

    Triggers at half the floor (hysteresis keeps re-application a no-op)
    and enforces the full floor.  Cell averages are untouched.
    """
    nx = coef.shape[0] - 2
    ny = coef.shape[1] - 2
    npts = phi_pp.shape[0]
    for idx in prange(nx * ny):
        i = idx // ny
        j = idx % ny
        dof = coef[i + 1, j + 1]
        avg = np.empty(8)
        for c in range(8):
            avg[c] = dof[const_dofs[c]]
        abar = _eint(avg)
        if not (avg[0] >= eps_rho and abar >= eps_e):
            bad[i, j] = 1
            continue
        upt = np.empty(8)
        # stage 1: density
        rmin = 1e300
        for n in range(npts):
            acc = 0.0
            for a in range(ns):
                acc += dof[a] * phi_pp[n, a]
            if acc < rmin:
                rmin = acc
        th1 = 1.0
        if rmin < 0.5 * eps_rho:
            th1 = (avg[0] - eps_rho) / (avg[0] - rmin)
            for a in range(1, ns):
                dof[a] *= th1
        # stage 2: internal energy
        th2 = 1.0
        emin = 1e300
        for n in range(npts):
            _eval_state(dof, ns, nv, phi_pp, b1_pp, b2_pp, n, upt)
            e = _eint(upt)
            if e < emin:
                emin = e
            if e < 0.5 * eps_e:
                lo = 0.0
                hi = 1.0
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if _combo_eint(avg, upt, mid) >= eps_e:
                        lo = mid
                    else:
                        hi = mid
                    if hi - lo < 1e-14:
                        break
                if lo < th2:
                    th2 = lo
        if th2 < 1.0:
            for c in range(6):
                base = c * ns
                for a in range(1, ns):
                    dof[base + a] *= th2
            base = 6 * ns
            for k in range(2, nv):
                dof[base + k] *= th2
        if th1 < 1.0 or th2 < 1.0:
            changed[i, j] = 1
            # recompute reported minima on the limited polynomial
            rmin = 1e300
            emin = 1e300
            for n in range(npts):
                _eval_state(dof, ns, nv, phi_pp, b1_pp, b2_pp, n, upt)
                if upt[0] < rmin:
                    rmin = upt[0]
                e = _eint(upt)
                if e < emin:
                    emin = e
        min_rho[i, j] = rmin
        min_e[i, j] = emin


@njit(cache=True)
def scan_pp_minima(coef, ns, nv, phi_pp, b1_pp, b2_pp):
    nx = coef.shape[0] - 2
    ny = coef.shape[1] - 2
    npts = phi_pp.shape[0]
    u = np.empty(8)
    rmin = 1e300
    emin = 1e300
    for i in range(nx):
        for j in range(ny):
            dof = coef[i + 1, j + 1]
            for n in range(npts):
                _eval_state(dof, ns, nv, phi_pp, b1_pp, b2_pp, n, u)
                if u[0] < rmin:
                    rmin = u[0]
                e = _eint(u)
                if e < emin:
                    emin = e
    return rmin, emin


@njit(cache=True)
def check_averages(coef, const_dofs, tol_rel):
    """First cell whose average is inadmissible beyond rounding; (-1,-1) if none."""
    nx = coef.shape[0] - 2
    ny = coef.shape[1] - 2
    u = np.empty(8)
    for i in range(nx):
        for j in range(ny):
            dof = coef[i + 1, j + 1]
            for c in range(8):
                u[c] = dof[const_dofs[c]]
            if not np.isfinite(u[0]) or not np.isfinite(u[7]):
                return i, j
            if u[0] <= 0.0:
                return i, j
            scale = abs(u[7]) + 0.5 * ((u[1] * u[1] + u[2] * u[2] + u[3] * u[3]) / u[0]
                                       + u[4] * u[4] + u[5] * u[5] + u[6] * u[6]) + 1.0
            if _eint(u) <= -tol_rel * scale:
                return i, j
    return -1, -1


# ---------------------------------------------------------------------------
# oscillation limiter (TVB minmod with characteristic detection)
# ---------------------------------------------------------------------------

@njit(inline="always")
def _minmod_tvb(a1, a2, a3, tol):
    if abs(a1) <= tol:
        return a1
    if a1 > 0.0 and a2 > 0.0 and a3 > 0.0:
        return min(a1, min(a2, a3))
    if a1 < 0.0 and a2 < 0.0 and a3 < 0.0:
        return max(a1, max(a2, a3))
    return 0.0


@njit(inline="always")
def _du_to_dw(ubar, du, gamma, dw):
    rho = ubar[0]
    vx = ubar[1] / rho
    vy = ubar[2] / rho
    vz = ubar[3] / rho
    dw[0] = du[0]
    dw[1] = (du[1] - vx * du[0]) / rho
    dw[2] = (du[2] - vy * du[0]) / rho
    dw[3] = (du[3] - vz * du[0]) / rho
    dw[4] = du[4]
    dw[5] = du[5]
    dw[6] = du[6]
    dw[7] = (gamma - 1.0) * (du[7] - vx * du[1] - vy * du[2] - vz * du[3]
                             + 0.5 * (vx * vx + vy * vy + vz * vz) * du[0]
                             - ubar[4] * du[4] - ubar[5] * du[5] - ubar[6] * du[6])


@njit(inline="always")
def _char_project(wbar, dw, d, gamma, out):
    """Characteristic components of a primitive increment.

    ``wbar`` is the primitive state (rho, v, B, p); ``d`` selects the sweep
    axis (0 or 1).  Axis 1 is handled by the in-place index swap (u<->v,
    B1<->B2).  The eight rows are the left eigenvectors of the source-
    modified quasilinear form (fast/Alfven/slow pairs, entropy, normal-B).
    """
    if d == 0:
        rho, u, v, w = wbar[0], wbar[1], wbar[2], wbar[3]
        bx, by, bz, p = wbar[4], wbar[5], wbar[6], wbar[7]
        d_r, d_u, d_v, d_w = dw[0], dw[1], dw[2], dw[3]
        d_bx, d_by, d_bz, d_p = dw[4], dw[5], dw[6], dw[7]
    else:
        rho, u, v, w = wbar[0], wbar[2], wbar[1], wbar[3]
        bx, by, bz, p = wbar[5], wbar[4], wbar[6], wbar[7]
        d_r, d_u, d_v, d_w = dw[0], dw[2], dw[1], dw[3]
        d_bx, d_by, d_bz, d_p = dw[5], dw[4], dw[6], dw[7]
    a2 = gamma * p / rho
    if a2 <= 0.0:
        # degenerate thermodynamics; fall back to raw components
        for c in range(8):
            out[c] = dw[c]
        return
    sqd = np.sqrt(rho)
    bx2 = bx * bx / rho
    btot2 = bx2 + (by * by + bz * bz) / rho
    disc = (a2 + btot2) * (a2 + btot2) - 4.0 * a2 * bx2
    if disc < 0.0:
        disc = 0.0
    disc = np.sqrt(disc)
    cf2 = 0.5 * (a2 + btot2 + disc)
    cs2 = 0.5 * (a2 + btot2 - disc)
    if cs2 < 0.0:
        cs2 = 0.0
    cf = np.sqrt(cf2)
    cs = np.sqrt(cs2)
    bperp = np.sqrt(by * by + bz * bz)
    if bperp > 1e-14 * (abs(bx) + np.sqrt(a2 * rho)):
        beta_y = by / bperp
        beta_z = bz / bperp
    else:
        beta_y = np.sqrt(0.5)
        beta_z = np.sqrt(0.5)
    dd = cf2 - cs2
    if dd > 1e-14 * (a2 + btot2):
        alf2 = (a2 - cs2) / dd
        als2 = (cf2 - a2) / dd
        if alf2 < 0.0:
            alf2 = 0.0
        if alf2 > 1.0:
            alf2 = 1.0
        if als2 < 0.0:
            als2 = 0.0
        if als2 > 1.0:
            als2 = 1.0
        alf = np.sqrt(alf2)
        als = np.sqrt(als2)
    else:
        alf = 1.0
        als = 0.0
    s = 1.0 if bx >= 0.0 else -1.0
    n = 0.5 / a2
    # fast pair (u -/+ cf)
    t_u = alf * cf * d_u
    t_v = als * cs * s * (beta_y * d_v + beta_z * d_w)
    t_b = als * np.sqrt(a2) / sqd * (beta_y * d_by + beta_z * d_bz)
    t_p = alf * d_p / rho
    out[0] = n * (-t_u + t_v + t_b + t_p)
    out[7] = n * (t_u - t_v + t_b + t_p)
    # slow pair (u -/+ cs)
    t_u = als * cs * d_u
    t_v = alf * cf * s * (beta_y * d_v + beta_z * d_w)
    t_b = alf * np.sqrt(a2) / sqd * (beta_y * d_by + beta_z * d_bz)
    t_p = als * d_p / rho
    out[2] = n * (-t_u - t_v - t_b + t_p)
    out[5] = n * (t_u + t_v - t_b + t_p)
    # Alfven pair (u -/+ ca)
    t_v = s * (beta_z * d_v - beta_y * d_w)
    t_b = (beta_z * d_by - beta_y * d_bz) / sqd
    out[1] = 0.5 * (-t_v - t_b)
    out[6] = 0.5 * (t_v - t_b)
    # entropy and normal-B waves (u)
    out[3] = d_r - d_p / a2
    out[4] = d_bx


@njit(cache=True, parallel=True)
def tvb_limit_cells(coef, ns, nv, const_dofs, gamma, tol_x, tol_y,
                    fm_phi_xr, fm_phi_xl, fm_phi_yt, fm_phi_yb,
                    fm_b1_xr, fm_b1_xl, fm_b1_yt, fm_b1_yb,
                    fm_b2_xr, fm_b2_xl, fm_b2_yt, fm_b2_yb,
                    trouble):
    """Troubled cells get their high modes replaced by a limited linear part.

    Detection compares characteristic projections of the face-mean
    fluctuations against neighbor average differences (TVB minmod); the
    rebuilt (B1, B2) linear part is re-projected onto the divergence-free
    block, which amounts to sharing the trace between dB1/dx and -dB2/dy.
    """
    nx = coef.shape[0] - 2
    ny = coef.shape[1] - 2
    sq12 = np.sqrt(12.0)
    for idx in prange(nx * ny):
        i = idx // ny
        j = idx % ny
        dof = coef[i + 1, j + 1]
        ubar = np.empty(8)
        wbar = np.empty(8)
        dup = np.empty(8)
        dum = np.empty(8)
        flr = np.empty(8)
        fll = np.empty(8)
        dw = np.empty(8)
        ch_f = np.empty(8)
        ch_p = np.empty(8)
        ch_m = np.empty(8)
        for c in range(8):
            ubar[c] = dof[const_dofs[c]]
        rho = ubar[0]
        wbar[0] = rho
        wbar[1] = ubar[1] / rho
        wbar[2] = ubar[2] / rho
        wbar[3] = ubar[3] / rho
        wbar[4] = ubar[4]
        wbar[5] = ubar[5]
        wbar[6] = ubar[6]
        wbar[7] = (gamma - 1.0) * _eint(ubar)
        bad = False
        for d in range(2):
            tol = tol_x if d == 0 else tol_y
            if d == 0:
                nb_p = coef[i + 2, j + 1]
                nb_m = coef[i, j + 1]
                fm_phi_hi = fm_phi_xr
                fm_phi_lo = fm_phi_xl
                fm_b1_hi = fm_b1_xr
                fm_b1_lo = fm_b1_xl
                fm_b2_hi = fm_b2_xr
                fm_b2_lo = fm_b2_xl
            else:
                nb_p = coef[i + 1, j + 2]
                nb_m = coef[i + 1, j]
                fm_phi_hi = fm_phi_yt
                fm_phi_lo = fm_phi_yb
                fm_b1_hi = fm_b1_yt
                fm_b1_lo = fm_b1_yb
                fm_b2_hi = fm_b2_yt
                fm_b2_lo = fm_b2_yb
            for c in range(8):
                cd = const_dofs[c]
                dup[c] = nb_p[cd] - ubar[c]
                dum[c] = ubar[c] - nb_m[cd]
            # face-mean fluctuations of the own polynomial
            for c in range(6):
                comp = _SCOMP[c]
                base = c * ns
                hi = 0.0
                lo = 0.0
                for a in range(ns):
                    hi += dof[base + a] * fm_phi_hi[a]
                    lo += dof[base + a] * fm_phi_lo[a]
                flr[comp] = hi - ubar[comp]
                fll[comp] = ubar[comp] - lo
            hi1 = 0.0
            lo1 = 0.0
            hi2 = 0.0
            lo2 = 0.0
            base = 6 * ns
            for k in range(nv):
                hi1 += dof[base + k] * fm_b1_hi[k]
                lo1 += dof[base + k] * fm_b1_lo[k]
                hi2 += dof[base + k] * fm_b2_hi[k]
                lo2 += dof[base + k] * fm_b2_lo[k]
            flr[4] = hi1 - ubar[4]
            fll[4] = ubar[4] - lo1
            flr[5] = hi2 - ubar[5]
            fll[5] = ubar[5] - lo2
            _du_to_dw(ubar, dup, gamma, dw)
            _char_project(wbar, dw, d, gamma, ch_p)
            _du_to_dw(ubar, dum, gamma, dw)
            _char_project(wbar, dw, d, gamma, ch_m)
            for side in range(2):
                fl = flr if side == 0 else fll
                _du_to_dw(ubar, fl, gamma, dw)
                _char_project(wbar, dw, d, gamma, ch_f)
                for c in range(8):
                    mm = _minmod_tvb(ch_f[c], ch_p[c], ch_m[c], tol)
                    if mm != ch_f[c]:
                        bad = True
                        break
                if bad:
                    break
            if bad:
                break
        if not bad:
            continue
        trouble[i, j] = 1
        if ns <= 1:
            continue
        # limited linear rebuild, component-wise on conserved slopes
        for c in range(6):
            comp = _SCOMP[c]
            base = c * ns
            sx = sq12 * dof[base + 1]
            sy = sq12 * dof[base + 2]
            dxp = coef[i + 2, j + 1][const_dofs[comp]] - ubar[comp]
            dxm = ubar[comp] - coef[i, j + 1][const_dofs[comp]]
            dyp = coef[i + 1, j + 2][const_dofs[comp]] - ubar[comp]
            dym = ubar[comp] - coef[i + 1, j][const_dofs[comp]]
            sxn = _minmod_tvb(sx, dxp, dxm, tol_x)
            syn = _minmod_tvb(sy, dyp, dym, tol_y)
            dof[base + 1] = sxn / sq12
            dof[base + 2] = syn / sq12
            for a in range(3, ns):
                dof[base + a] = 0.0
        # B block: limited slopes then divergence-free repair
        # linear members: 2 -> (y,0), 3 -> (0,x), 4 -> (x,-y)
        base = 6 * ns
        b_sl = dof[base + 2]
        c_sl = dof[base + 3]
        a_sl = dof[base + 4]
        d_sl = -dof[base + 4]
        for c in range(2):
            comp = 4 + c
            if c == 0:
                sx = a_sl
                sy = b_sl
            else:
                sx = c_sl
                sy = d_sl
            dxp = coef[i + 2, j + 1][const_dofs[comp]] - ubar[comp]
            dxm = ubar[comp] - coef[i, j + 1][const_dofs[comp]]
            dyp = coef[i + 1, j + 2][const_dofs[comp]] - ubar[comp]
            dym = ubar[comp] - coef[i + 1, j][const_dofs[comp]]
            sxn = _minmod_tvb(sx, dxp, dxm, tol_x)
            syn = _minmod_tvb(sy, dyp, dym, tol_y)
            if c == 0:
                a_sl = sxn
                b_sl = syn
            else:
                c_sl = sxn
                d_sl = syn
        dof[base + 2] = b_sl
        dof[base + 3] = c_sl
        dof[base + 4] = 0.5 * (a_sl - d_sl)
        for k in range(5, nv):
            dof[base + k] = 0.0
