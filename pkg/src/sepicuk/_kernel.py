"""Compiled inner loop of the switched simulator.

State layout (float64, length NX):
    0 iL1, 1 iL2, 2 vC1, 3 vC2, 4 iLg         circuit states
    5 e_in, 6 e_out, 7 e_switch, 8 e_diode,   per-period energy integrals
    9 e_esr
    10..17 integrals of iL1, iL2, vC1, vC2, vo, io, vo^2, io^2
    18 integral of the unfolded converter output current i2

vC2 and iLg live in the rectified frame: the physical grid-side value is
``sign(half) * state``. Both are negated when the unfolder swaps halves so
that the physical quantities stay continuous.

Parameter vector layout is given by the P_* indices below.
"""

import math

import numpy as np
from numba import njit

NX = 19
NS = 5

P_L1, P_L2, P_C1, P_C2, P_LG = 0, 1, 2, 3, 4
P_RL1, P_RL2, P_RC1, P_RC2, P_RON1, P_RONU, P_VF, P_VDC = 5, 6, 7, 8, 9, 10, 11, 12
P_KIND, P_RO, P_VGM, P_WG, P_PHASE = 13, 14, 15, 16, 17
NP = 18

LOAD_R, LOAD_RL, LOAD_GRID = 0, 1, 2

# core() output slots
C_DIL1, C_DIL2, C_DVC1, C_DVC2, C_DILG = 0, 1, 2, 3, 4
C_VA, C_VB, C_ID, C_VD, C_VTERM, C_ILOAD = 5, 6, 7, 8, 9, 10
C_PSW, C_PD, C_PESR, C_I2 = 11, 12, 13, 14
NC = 15

# record columns
R_T, R_IL1, R_IL2, R_VC1, R_VC2, R_ILG, R_VO, R_IO, R_IDC, R_DUTY, R_MODE, R_HALF = range(12)
NR = 12

# counters
K_DIODE_FWD_MODE1, K_EV_II_III, K_EV_III_II, K_GUARD = 0, 1, 2, 3
NK = 4

ST_OK, ST_DIVERGED = 0, 1

NPER = 4 + NX + NS


@njit(cache=True)
def core(x, t, mode, half, p, c):
    """Branch quantities and state derivatives of one topology.

    mode: 1 S1 on, 2 diode conducting, 3 both blocking.
    half: 0 SEPIC (S2, S3 on), 1 Cuk (S4, S5 on).
    """
    L1 = p[P_L1]
    L2 = p[P_L2]
    rL1 = p[P_RL1]
    rL2 = p[P_RL2]
    rC1 = p[P_RC1]
    rC2 = p[P_RC2]
    ron1 = p[P_RON1]
    ronu = p[P_RONU]
    vf = p[P_VF]
    Vdc = p[P_VDC]
    kind = p[P_KIND]
    iL1 = x[0]
    iL2 = x[1]
    vC1 = x[2]
    vC2 = x[3]
    iLg = x[4]
    sepic = half == 0
    h = 1.0 if sepic else -1.0

    # converter current into the output node, rectified frame
    if sepic:
        i2 = iL1 + iL2 if mode == 2 else 0.0
    else:
        i2 = iL2

    if kind == LOAD_R:
        Ro = p[P_RO]
        vout = (vC2 + rC2 * i2) * Ro / (Ro + rC2)
        iload = vout / Ro
        vterm = vout
        diLg = 0.0
    else:
        iload = iLg
        vout = vC2 + rC2 * (i2 - iLg)
        if kind == LOAD_RL:
            vterm = p[P_RO] * iLg
            diLg = (vout - vterm) / p[P_LG]
        else:
            vterm = vout
            vg = h * p[P_VGM] * math.sin(p[P_WG] * t + p[P_PHASE])
            diLg = (vout - vg) / p[P_LG]
    iC2 = i2 - iload
    vphys = h * vout
    # L2 return terminal: ground through S2, or output node through S4
    if sepic:
        vret = -ronu * iL2
        vk0 = vphys
    else:
        vret = vphys - ronu * iL2
        vk0 = 0.0

    if mode == 1:
        iD = 0.0
        iC1 = -iL2
        iS1 = iL1 + iL2
        vA = ron1 * iS1
        vB = vA - vC1 - rC1 * iC1
        diL1 = (Vdc - rL1 * iL1 - vA) / L1
        diL2 = (vret - rL2 * iL2 - vB) / L2
        vD = vB - vk0
        psw = ron1 * iS1 * iS1 + ronu * iL2 * iL2
        pd = 0.0
    elif mode == 2:
        iD = iL1 + iL2
        iC1 = iL1
        if sepic:
            vB = vf + ronu * iD + vphys
        else:
            vB = vf + ronu * iD
        vA = vB + vC1 + rC1 * iL1
        diL1 = (Vdc - rL1 * iL1 - vA) / L1
        diL2 = (vret - rL2 * iL2 - vB) / L2
        vD = vf + ronu * iD
        psw = ronu * (iL2 * iL2 + iD * iD)
        pd = vf * iD
    else:
        iD = 0.0
        iC1 = iL1
        diL1 = (Vdc - vC1 - vret + rL2 * iL2 - (rL1 + rC1) * iL1) / (L1 + L2)
        diL2 = -diL1
        vB = Vdc - (rL1 + rC1) * iL1 - L1 * diL1 - vC1
        vA = vB + vC1 + rC1 * iL1
        vD = vB - vk0
        psw = ronu * iL2 * iL2
        pd = 0.0

    c[C_DIL1] = diL1
    c[C_DIL2] = diL2
    c[C_DVC1] = iC1 / p[P_C1]
    c[C_DVC2] = iC2 / p[P_C2]
    c[C_DILG] = diLg
    c[C_VA] = vA
    c[C_VB] = vB
    c[C_ID] = iD
    c[C_VD] = vD
    c[C_VTERM] = vterm
    c[C_ILOAD] = iload
    c[C_PSW] = psw
    c[C_PD] = pd
    c[C_PESR] = rL1 * iL1 * iL1 + rL2 * iL2 * iL2 + rC1 * iC1 * iC1 + rC2 * iC2 * iC2
    c[C_I2] = i2


@njit(cache=True)
def deriv(x, t, mode, half, p, c, dx):
    core(x, t, mode, half, p, c)
    for i in range(NS):
        dx[i] = c[i]
    _acc_rates(x, half, p, c, dx)


@njit(cache=True)
def _acc_rates(x, half, p, c, dx):
    h = 1.0 if half == 0 else -1.0
    vo = h * c[C_VTERM]
    io = h * c[C_ILOAD]
    dx[5] = p[P_VDC] * x[0]
    dx[6] = c[C_VTERM] * c[C_ILOAD]
    dx[7] = c[C_PSW]
    dx[8] = c[C_PD]
    dx[9] = c[C_PESR]
    dx[10] = x[0]
    dx[11] = x[1]
    dx[12] = x[2]
    dx[13] = x[3]
    dx[14] = vo
    dx[15] = io
    dx[16] = vo * vo
    dx[17] = io * io
    dx[18] = h * c[C_I2]


@njit(cache=True)
def rk4_step(x, t, hstep, mode, half, p, w, out):
    """Classical RK4 over one fixed-topology segment. w: (6, NX) work array."""
    c = w[5, :NC]
    k1 = w[0]
    k2 = w[1]
    k3 = w[2]
    k4 = w[3]
    tmp = w[4]
    deriv(x, t, mode, half, p, c, k1)
    for i in range(NX):
        tmp[i] = x[i] + 0.5 * hstep * k1[i]
    deriv(tmp, t + 0.5 * hstep, mode, half, p, c, k2)
    for i in range(NX):
        tmp[i] = x[i] + 0.5 * hstep * k2[i]
    deriv(tmp, t + 0.5 * hstep, mode, half, p, c, k3)
    for i in range(NX):
        tmp[i] = x[i] + hstep * k3[i]
    deriv(tmp, t + hstep, mode, half, p, c, k4)
    for i in range(NX):
        out[i] = x[i] + hstep / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True)
def trap_step(x, t, hstep, mode, half, p, w, out):
    """Trapezoidal rule. The circuit part is affine per topology, so the
    implicit stage is one 5x5 linear solve; integrals use the same rule."""
    c = w[5, :NC]
    f0 = w[0]
    f1 = w[1]
    tmp = w[2]
    A = np.empty((NS, NS))
    for i in range(NX):
        tmp[i] = 0.0
    core(tmp, t + hstep, mode, half, p, c)
    b1 = np.empty(NS)
    for i in range(NS):
        b1[i] = c[i]
    core(tmp, t, mode, half, p, c)
    b0 = np.empty(NS)
    for i in range(NS):
        b0[i] = c[i]
    for j in range(NS):
        tmp[j] = 1.0
        core(tmp, t, mode, half, p, c)
        for i in range(NS):
            A[i, j] = c[i] - b0[i]
        tmp[j] = 0.0
    deriv(x, t, mode, half, p, c, f0)
    M = np.eye(NS) - 0.5 * hstep * A
    rhs = np.empty(NS)
    for i in range(NS):
        rhs[i] = x[i] + 0.5 * hstep * (f0[i] + b1[i])
    xn = np.linalg.solve(M, rhs)
    for i in range(NS):
        out[i] = xn[i]
    for i in range(NS, NX):
        out[i] = x[i]
    deriv(out, t + hstep, mode, half, p, c, f1)
    for i in range(NS, NX):
        out[i] = x[i] + 0.5 * hstep * (f0[i] + f1[i])


@njit(cache=True)
def step(x, t, hstep, mode, half, p, w, out, integrator):
    if integrator == 0:
        rk4_step(x, t, hstep, mode, half, p, w, out)
    else:
        trap_step(x, t, hstep, mode, half, p, w, out)


@njit(cache=True)
def mode2_slope(x, t, half, p, c):
    """d(iL1 + iL2)/dt if the diode were conducting."""
    core(x, t, 2, half, p, c)
    return c[C_DIL1] + c[C_DIL2]


@njit(cache=True)
def enter_mode3(x, p):
    """Remove the residual diode current (|i_D| <= event_tol) left by the
    event search. The correction is split between the inductors so that the
    change in stored energy is minimal (of order i_D^2 Leq)."""
    r = x[0] + x[1]
    L1 = p[P_L1]
    L2 = p[P_L2]
    x[0] -= r * L2 / (L1 + L2)
    x[1] -= r * L1 / (L1 + L2)


@njit(cache=True)
def event_value(x, t, mode, half, p, c):
    """Mode II: diode current. Mode III: forward margin vf - vD (>0 blocking)."""
    core(x, t, mode, half, p, c)
    if mode == 2:
        return c[C_ID]
    return p[P_VF] - c[C_VD]


@njit(cache=True)
def locate_event(x, t, H, mode, half, p, w, xe, integrator, event_tol, htol):
    """Find the first time in (0, H] where event_value crosses zero.

    Assumes event_value(x) > 0 and event_value(step(x, H)) <= 0. The seed is
    the linear interpolation point; the bracket is then bisected on the
    integrated trajectory until |value| <= event_tol (or the bracket is
    shorter than htol). Writes the event state to xe and returns the
    fraction of H at the event.
    """
    c = w[5, :NC]
    g0 = event_value(x, t, mode, half, p, c)
    step(x, t, H, mode, half, p, w, xe, integrator)
    g1 = event_value(xe, t + H, mode, half, p, c)
    lo = 0.0
    hi = H
    glo = g0
    ghi = g1
    hm = H * g0 / (g0 - g1) if g0 != g1 else 0.5 * H
    if hm <= 0.0 or hm >= H:
        hm = 0.5 * H
    best = H
    for _ in range(200):
        step(x, t, hm, mode, half, p, w, xe, integrator)
        gm = event_value(xe, t + hm, mode, half, p, c)
        if abs(gm) <= event_tol:
            return hm / H
        if gm > 0:
            lo = hm
            glo = gm
        else:
            hi = hm
            ghi = gm
        best = hi
        if hi - lo <= htol:
            break
        hm = 0.5 * (lo + hi)
    step(x, t, best, mode, half, p, w, xe, integrator)
    return best / H


@njit(cache=True)
def run_chunk(x, p, k0, duties, halves, half_prev, mode, Ts, nsteps, decim, step0,
              event_tol, integrator, max_state, rec, n_rec0, per, counters):
    """Simulate len(duties) switching periods starting at period index k0.

    rec: (n_max, NR) output rows, filled from row n_rec0.
    per: (n, NPER) per-period data: [t_mode3, ccm, turnoff_vi, turnon_vi,
    accumulator integrals..., circuit state at period end, circuit state at
    period start].
    Returns (mode, half_prev, n_rec, status).
    """
    dt = Ts / nsteps
    tiny = 1e-9 * dt
    w = np.zeros((6, NX))
    xn = np.empty(NX)
    xe = np.empty(NX)
    c = np.empty(NC)
    n_rec = n_rec0
    htol = 1e-7 * dt
    for i in range(duties.shape[0]):
        k = k0 + i
        tk = k * Ts
        d = duties[i]
        half = halves[i]
        if half != half_prev:
            x[3] = -x[3]
            x[4] = -x[4]
            half_prev = half
        for a in range(NS, NX):
            x[a] = 0.0
        for a in range(NS):
            per[i, 4 + NX + a] = x[a]
        t_mode3 = 0.0
        turnoff_vi = 0.0
        turnon_vi = 0.0
        if d > 0.0:
            core(x, tk, mode, half, p, c)
            turnon_vi = 0.5 * abs(c[C_VA]) * abs(x[0] + x[1])
            mode = 1
        elif mode == 1:
            mode = 2
        t_off = tk + d * Ts
        for j in range(nsteps):
            ta = tk + j * dt
            tb = tk + (j + 1) * dt
            if (step0 + i * nsteps + j) % decim == 0:
                core(x, ta, mode, half, p, c)
                hs = 1.0 if half == 0 else -1.0
                rec[n_rec, R_T] = ta
                rec[n_rec, R_IL1] = x[0]
                rec[n_rec, R_IL2] = x[1]
                rec[n_rec, R_VC1] = x[2]
                rec[n_rec, R_VC2] = x[3]
                rec[n_rec, R_ILG] = x[4]
                rec[n_rec, R_VO] = hs * c[C_VTERM]
                rec[n_rec, R_IO] = hs * c[C_ILOAD]
                rec[n_rec, R_IDC] = x[0]
                rec[n_rec, R_DUTY] = d
                rec[n_rec, R_MODE] = mode
                rec[n_rec, R_HALF] = half
                if mode == 1 and c[C_VD] > p[P_VF]:
                    counters[K_DIODE_FWD_MODE1] += 1
                n_rec += 1
            tc = ta
            guard = 0
            while tc < tb - tiny:
                guard += 1
                if guard > 64:
                    counters[K_GUARD] += 1
                    step(x, tc, tb - tc, mode, half, p, w, xn, integrator)
                    for a in range(NX):
                        x[a] = xn[a]
                    tc = tb
                    break
                if mode == 1:
                    tn = tb if tb < t_off else t_off
                    if tn - tc > tiny:
                        step(x, tc, tn - tc, mode, half, p, w, xn, integrator)
                        for a in range(NX):
                            x[a] = xn[a]
                    tc = tn
                    if tc >= t_off - tiny:
                        i_off = x[0] + x[1]
                        mode = 2
                        core(x, tc, mode, half, p, c)
                        turnoff_vi += 0.5 * abs(c[C_VA]) * abs(i_off)
                elif mode == 2:
                    iD = x[0] + x[1]
                    if iD <= event_tol and mode2_slope(x, tc, half, p, c) <= 0.0:
                        mode = 3
                        enter_mode3(x, p)
                        counters[K_EV_II_III] += 1
                        continue
                    H = tb - tc
                    step(x, tc, H, mode, half, p, w, xn, integrator)
                    if iD > event_tol and xn[0] + xn[1] <= 0.0:
                        f = locate_event(x, tc, H, mode, half, p, w, xe, integrator,
                                         event_tol, htol)
                        for a in range(NX):
                            x[a] = xe[a]
                        tc = tc + f * H
                        mode = 3
                        enter_mode3(x, p)
                        counters[K_EV_II_III] += 1
                    else:
                        for a in range(NX):
                            x[a] = xn[a]
                        tc = tb
                else:
                    H = tb - tc
                    step(x, tc, H, mode, half, p, w, xn, integrator)
                    g1 = event_value(xn, tb, 3, half, p, c)
                    if g1 < 0.0 and mode2_slope(xn, tb, half, p, c) > 0.0:
                        g0 = event_value(x, tc, 3, half, p, c)
                        if g0 > 0.0:
                            f = locate_event(x, tc, H, mode, half, p, w, xe, integrator,
                                             1e-9, htol)
                        else:
                            f = 0.0
                            for a in range(NX):
                                xe[a] = x[a]
                        t_mode3 += f * H
                        for a in range(NX):
                            x[a] = xe[a]
                        tc = tc + f * H
                        mode = 2
                        counters[K_EV_III_II] += 1
                    else:
                        for a in range(NX):
                            x[a] = xn[a]
                        t_mode3 += H
                        tc = tb
            for a in range(NS):
                if not abs(x[a]) < max_state:
                    return mode, half_prev, n_rec, ST_DIVERGED
        per[i, 0] = t_mode3
        # diode still conducting at the next S1 turn-on
        per[i, 1] = 1.0 if (mode == 2 and d > 0.0) else 0.0
        per[i, 2] = turnoff_vi
        per[i, 3] = turnon_vi
        for a in range(NS, NX):
            per[i, 4 + a - NS] = x[a]
        for a in range(NS):
            per[i, 4 + NX - NS + a] = x[a]
    return mode, half_prev, n_rec, ST_OK
