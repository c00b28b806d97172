"""Event-driven time-domain simulation of the switched power stage.

Each switching period is integrated on a fixed grid of ``Ts/nsteps``
steps. S1 edges are known in advance and the step is split there; the
diode turn-off (i_D = iL1 + iL2 crossing zero) is located by bisection on
the integrated trajectory and the step is split at the event.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernel as K
from .control import ControllerHandle
from .errors import ConfigError, InconsistentMode, NumericalDivergence
from .model_types import (
    CircuitParams,
    ConverterState,
    GridSource,
    HalfCycle,
    ModeId,
    OperatingPoint,
    PeriodStats,
    Resistive,
    WaveformRecord,
)

log = logging.getLogger(__name__)

MAX_STATE = 1e6
INTEGRATORS = {"rk4": 0, "trapezoidal": 1}


@dataclass(frozen=True)
class SimConfig:
    t_end: float = 0.1
    dt_max: Optional[float] = None  # defaults to Ts/200
    event_tol: float = 1e-3
    record_decimation: int = 10
    integrator: str = "rk4"

    def __post_init__(self):
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if not self.event_tol > 0:
            raise ConfigError("event_tol must be positive")
        if int(self.record_decimation) != self.record_decimation or self.record_decimation < 1:
            raise ConfigError("record_decimation must be an integer >= 1")
        if self.integrator.lower() not in INTEGRATORS:
            raise ConfigError(f"unknown integrator {self.integrator!r}")

    def steps_per_period(self, Ts: float) -> int:
        dt_max = Ts / 200 if self.dt_max is None else self.dt_max
        if dt_max > Ts / 100 * (1 + 1e-12):
            raise ConfigError("dt_max must not exceed Ts/100")
        return int(math.ceil(Ts / dt_max - 1e-9))


@dataclass
class GateSchedule:
    """Latched S1 duty and unfolder half cycle per switching period."""

    Ts: float
    duties: np.ndarray
    halves: np.ndarray

    def period(self, t: float) -> int:
        return int(math.floor(t / self.Ts + 1e-12))

    def s1(self, t: float) -> bool:
        k = self.period(t)
        return t - k * self.Ts < self.duties[k] * self.Ts

    def half_cycle(self, t: float) -> HalfCycle:
        return HalfCycle(int(self.halves[self.period(t)]))


@dataclass
class RunDiagnostics:
    n_periods: int
    ccm_periods: int
    ccm_periods_steady: int
    state_min: dict
    state_max: dict
    energy_in: float
    energy_residual: float
    counters: dict
    controller_history: list = field(default_factory=list)

    @property
    def energy_residual_rel(self) -> float:
        return self.energy_residual / self.energy_in if self.energy_in else 0.0


def pack_params(params: CircuitParams, op: OperatingPoint, load=None) -> np.ndarray:
    load = op.load if load is None else load
    p = np.zeros(K.NP)
    p[K.P_L1] = params.L1
    p[K.P_L2] = params.L2
    p[K.P_C1] = params.C1
    p[K.P_C2] = params.C2
    p[K.P_RL1] = params.rL1
    p[K.P_RL2] = params.rL2
    p[K.P_RC1] = params.rC1
    p[K.P_RC2] = params.rC2
    p[K.P_RON1] = params.s1.r_on
    p[K.P_RONU] = params.unfold.r_on
    p[K.P_VF] = params.diode_vf
    p[K.P_VDC] = op.Vdc
    if isinstance(load, Resistive):
        p[K.P_RO] = load.Ro
        if params.Lg > 0:
            p[K.P_KIND] = K.LOAD_RL
            p[K.P_LG] = params.Lg
        else:
            p[K.P_KIND] = K.LOAD_R
    elif isinstance(load, GridSource):
        p[K.P_KIND] = K.LOAD_GRID
        p[K.P_LG] = load.Lg
        p[K.P_VGM] = math.sqrt(2.0) * load.Vo_rms
        p[K.P_WG] = 2.0 * math.pi * op.fg
        p[K.P_PHASE] = load.phase
    else:
        raise ConfigError(f"unsupported load {load!r}")
    return p


def _full_state(state: ConverterState) -> np.ndarray:
    x = np.zeros(K.NX)
    x[:K.NS] = state.as_array()
    return x


def mode_dynamics(params: CircuitParams, state: ConverterState, gates, op: OperatingPoint,
                  t: float = 0.0) -> np.ndarray:
    """d/dt of [iL1, iL2, vC1, vC2, iLg] for the topology selected by the gates.

    ``gates`` is (s1_on, half). vC2 and iLg derivatives are in the rectified
    frame of ``half``.
    """
    s1, half = gates
    if bool(s1) != (state.mode is ModeId.MODE_I):
        raise InconsistentMode(f"S1={'on' if s1 else 'off'} with {state.mode.name}")
    c = np.empty(K.NC)
    K.core(_full_state(state), t, int(state.mode), int(HalfCycle(half)), pack_params(params, op), c)
    return c[:K.NS].copy()


def diode_current(state: ConverterState) -> float:
    return state.iL1 + state.iL2


def detect_mode_transition(params: CircuitParams, op: OperatingPoint, state_before: ConverterState,
                           h: float, gates, t: float = 0.0, event_tol: float = 1e-3,
                           integrator: str = "rk4"):
    """Diode turn-off within one integration step of length ``h``.

    Returns None when there is no crossing, otherwise (fraction, MODE_III,
    state_at_event). Only the Mode II -> Mode III transition is detected
    here; S1 edges come from the gate schedule.
    """
    s1, half = gates
    if s1 or state_before.mode is not ModeId.MODE_II:
        return None
    p = pack_params(params, op)
    hc = int(HalfCycle(half))
    integ = INTEGRATORS[integrator.lower()]
    x = _full_state(state_before)
    c = np.empty(K.NC)
    w = np.zeros((6, K.NX))
    iD0 = x[0] + x[1]
    if iD0 <= event_tol and K.mode2_slope(x, t, hc, p, c) <= 0:
        return 0.0, ModeId.MODE_III, ConverterState.from_array(x, ModeId.MODE_III, hc)
    xn = np.empty(K.NX)
    K.step(x, t, h, 2, hc, p, w, xn, integ)
    if xn[0] + xn[1] > 0:
        return None
    xe = np.empty(K.NX)
    f = K.locate_event(x, t, h, 2, hc, p, w, xe, integ, event_tol, 1e-7 * h)
    return f, ModeId.MODE_III, ConverterState.from_array(xe, ModeId.MODE_III, hc)


def unfold(v_rect: float, i_rect: float, half: HalfCycle):
    """Map rectified-frame voltage/current to grid-side polarity."""
    s = HalfCycle(half).sign
    return s * v_rect, s * i_rect


def _stored_energy(x, params: CircuitParams, kind) -> np.ndarray:
    x = np.atleast_2d(x)
    e = 0.5 * (params.L1 * x[:, 0] ** 2 + params.L2 * x[:, 1] ** 2
               + params.C1 * x[:, 2] ** 2 + params.C2 * x[:, 3] ** 2)
    if kind == K.LOAD_RL:
        e = e + 0.5 * params.Lg * x[:, 4] ** 2
    return e


def _period_bounds(n_periods: int, fs: float, fg: float, chunk_default: int = 1000):
    """Period index boundaries of the regulation windows (line half cycles)."""
    if fg > 0:
        n_half = fs / (2.0 * fg)
        m = int(math.ceil(n_periods / n_half)) + 1
        b = sorted({min(n_periods, int(round(i * n_half))) for i in range(m + 1)})
    else:
        b = list(range(0, n_periods, chunk_default)) + [n_periods]
    return [(a, c) for a, c in zip(b[:-1], b[1:]) if c > a]


def run_simulation(params: CircuitParams, op: OperatingPoint, controller: ControllerHandle,
                   sim: SimConfig = SimConfig(), x0: Optional[ConverterState] = None,
                   transient_cycles: int = 2):
    """Simulate ``sim.t_end`` seconds; returns (WaveformRecord, RunDiagnostics)."""
    Ts = op.Ts
    nsteps = sim.steps_per_period(Ts)
    dt = Ts / nsteps
    n_periods = int(round(sim.t_end / Ts))
    if n_periods < 1:
        raise ConfigError("t_end shorter than one switching period")
    decim = int(sim.record_decimation)
    integ = INTEGRATORS[sim.integrator.lower()]
    p = pack_params(params, op)
    kind = int(p[K.P_KIND])

    controller.start(params, op)
    state0 = x0 if x0 is not None else ConverterState()
    x = _full_state(state0)
    mode = int(state0.mode)
    half_prev = int(state0.half_cycle)

    n_rec_max = n_periods * nsteps // decim + 2
    rec = np.empty((n_rec_max, K.NR))
    per = np.empty((n_periods, K.NPER))
    all_duties = np.empty(n_periods)
    all_halves = np.empty(n_periods, dtype=np.int64)
    counters = np.zeros(K.NK, dtype=np.int64)
    n_rec = 0
    k_prev_half = half_prev

    for a, b in _period_bounds(n_periods, op.fs, op.fg):
        k = np.arange(a, b)
        t_start = k * Ts
        duties = controller.duties(t_start)
        halves = np.array([int(controller.half_cycle(t + 0.5 * Ts)) for t in t_start],
                          dtype=np.int64)
        if controller.modulated:
            prev = np.concatenate(([k_prev_half], halves[:-1]))
            duties[halves != prev] = 0.0  # S1 blanked for the swap period
            if a == 0:
                duties[0] = 0.0
        k_prev_half = int(halves[-1])
        all_duties[a:b] = duties
        all_halves[a:b] = halves
        mode, half_prev, n_rec, status = K.run_chunk(
            x, p, a, duties, halves, half_prev, mode, Ts, nsteps, decim, a * nsteps,
            sim.event_tol, integ, MAX_STATE, rec, n_rec, per[a:b], counters)
        if status != K.ST_OK:
            raise NumericalDivergence(
                f"state magnitude above {MAX_STATE:g} near t = {b * Ts:.6g} s")
        if controller.closed_loop:
            span = (b - a) * Ts
            vo_rms = math.sqrt(max(per[a:b, 4 + 16 - K.NS].sum(), 0.0) / span)
            io_rms = math.sqrt(max(per[a:b, 4 + 17 - K.NS].sum(), 0.0) / span)
            controller.update(vo_rms, io_rms, span)

    rec = rec[:n_rec]
    acc = per[:, 4:]
    periods = PeriodStats(
        t_start=np.arange(n_periods) * Ts,
        duty=all_duties,
        half=all_halves,
        ccm=per[:, 1] > 0.5,
        t_mode3=per[:, 0],
        int_iL1=acc[:, 10 - K.NS],
        int_iL2=acc[:, 11 - K.NS],
        int_vC1=acc[:, 12 - K.NS],
        int_vC2=acc[:, 13 - K.NS],
        int_vo=acc[:, 14 - K.NS],
        int_io=acc[:, 15 - K.NS],
        int_vo2=acc[:, 16 - K.NS],
        int_io2=acc[:, 17 - K.NS],
        int_i2=acc[:, 18 - K.NS],
        e_in=acc[:, 5 - K.NS],
        e_out=acc[:, 6 - K.NS],
        e_switch=acc[:, 7 - K.NS],
        e_diode=acc[:, 8 - K.NS],
        e_esr=acc[:, 9 - K.NS],
        turnoff_vi=per[:, 2],
        turnon_vi=per[:, 3],
        x_end=per[:, 4 + K.NX - K.NS:4 + K.NX],
        x_start=per[:, 4 + K.NX:],
        Ts=Ts,
    )
    record = WaveformRecord(
        t=rec[:, K.R_T], iL1=rec[:, K.R_IL1], iL2=rec[:, K.R_IL2], vC1=rec[:, K.R_VC1],
        vC2=rec[:, K.R_VC2], iLg=rec[:, K.R_ILG], vo=rec[:, K.R_VO], io=rec[:, K.R_IO],
        idc=rec[:, K.R_IDC], duty=rec[:, K.R_DUTY], mode=rec[:, K.R_MODE].astype(np.int8),
        half=rec[:, K.R_HALF].astype(np.int8), periods=periods, dt=dt * decim,
        Vdc=op.Vdc, fg=op.fg, fs=op.fs, lg_stored=kind != K.LOAD_GRID,
    )

    e_in = periods.e_in.sum()
    e_lost = periods.e_out.sum() + periods.e_switch.sum() + periods.e_diode.sum() + periods.e_esr.sum()
    d_stored = _stored_energy(x[:K.NS], params, kind)[0] - _stored_energy(state0.as_array(), params, kind)[0]
    t_skip = transient_cycles / op.fg if op.fg > 0 else 0.0
    steady = periods.t_start >= t_skip - 1e-12
    names = ("iL1", "iL2", "vC1", "vC2", "iLg", "vo", "io")
    diag = RunDiagnostics(
        n_periods=n_periods,
        ccm_periods=int(periods.ccm.sum()),
        ccm_periods_steady=int(periods.ccm[steady].sum()),
        state_min={n: float(getattr(record, n).min()) for n in names},
        state_max={n: float(getattr(record, n).max()) for n in names},
        energy_in=float(e_in),
        energy_residual=float(e_in - e_lost - d_stored),
        counters={
            "diode_forward_in_mode_I": int(counters[K.K_DIODE_FWD_MODE1]),
            "diode_off_events": int(counters[K.K_EV_II_III]),
            "diode_reconduction_events": int(counters[K.K_EV_III_II]),
            "guard_hits": int(counters[K.K_GUARD]),
        },
        controller_history=list(controller.history),
    )
    if diag.ccm_periods_steady:
        log.info("%d CCM periods after the start-up transient", diag.ccm_periods_steady)
    return record, diag
