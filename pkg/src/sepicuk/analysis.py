"""Post-processing of simulated waveforms.

THD and phasors use the DFT of a window that spans whole line cycles.
Loss figures come from the per-period integrals the simulator collects,
so they are exact up to the integrator error rather than sample-limited.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import EnergyMismatch, WindowError
from .model_types import CircuitParams, GridSource, HalfCycle, OperatingPoint, WaveformRecord

N_HARMONICS = 40
MIN_SAMPLES_PER_CYCLE = 200


@dataclass(frozen=True)
class LossBreakdown:
    """Average loss powers in watts."""

    conduction_switches: float
    conduction_diode: float
    conduction_esr: float
    switching_turnoff: float
    switching_turnon: float

    @property
    def total(self) -> float:
        return (self.conduction_switches + self.conduction_diode + self.conduction_esr
                + self.switching_turnoff + self.switching_turnon)

    @property
    def conduction(self) -> float:
        return self.conduction_switches + self.conduction_diode + self.conduction_esr

    def as_dict(self) -> dict:
        d = asdict(self)
        d["total"] = self.total
        return d


def _cycles(n: int, dt: float, fundamental: float) -> int:
    if not (fundamental > 0 and dt > 0):
        raise WindowError("fundamental and dt must be positive")
    cycles = n * dt * fundamental
    k = int(round(cycles))
    if k < 1 or abs(cycles - k) > 1e-6 * max(1.0, cycles):
        raise WindowError(f"window holds {cycles:.6f} cycles, not an integer")
    if n / k < MIN_SAMPLES_PER_CYCLE:
        raise WindowError(f"{n / k:.1f} samples per cycle, need {MIN_SAMPLES_PER_CYCLE}")
    return k


def harmonic_amplitudes(signal, dt: float, fundamental: float,
                        n_harmonics: int = N_HARMONICS) -> np.ndarray:
    """Complex amplitudes of harmonics 0..n_harmonics (index = order).

    Amplitude convention: x(t) = Re(sum_h A_h exp(j h w t)), so |A_1| is
    the peak of the fundamental.
    """
    x = np.asarray(signal, dtype=float)
    k = _cycles(x.size, dt, fundamental)
    fx = np.fft.rfft(x) / x.size
    idx = np.arange(n_harmonics + 1) * k
    out = np.zeros(n_harmonics + 1, dtype=complex)
    ok = idx < fx.size
    out[ok] = 2.0 * fx[idx[ok]]
    out[0] = fx[0]
    return out


def thd(signal, dt: float, fundamental: float) -> float:
    """Total harmonic distortion in percent, harmonics 2..40."""
    a = np.abs(harmonic_amplitudes(signal, dt, fundamental))
    if a[1] == 0:
        raise WindowError("zero fundamental")
    return float(100.0 * math.sqrt(np.sum(a[2:] ** 2)) / a[1])


def fundamental_peak(signal, dt: float, fundamental: float) -> float:
    return float(abs(harmonic_amplitudes(signal, dt, fundamental, 1)[1]))


def phase_difference(a, b, dt: float, fundamental: float) -> float:
    """Phase of a's fundamental minus b's, in degrees within (-180, 180]."""
    pa = harmonic_amplitudes(a, dt, fundamental, 1)[1]
    pb = harmonic_amplitudes(b, dt, fundamental, 1)[1]
    d = math.degrees(np.angle(pa / pb))
    return 180.0 if d == -180.0 else d


Selector = Union[str, Callable[[WaveformRecord], np.ndarray]]


def per_period_average(record: WaveformRecord, selector: Selector):
    """Trapezoidal switching-period averages of a sampled signal.

    Returns (period indices, averages) for every period fully covered by
    the samples. Indices refer to ``record.periods``.
    """
    y = getattr(record, selector) if isinstance(selector, str) else selector(record)
    y = np.asarray(y, dtype=float)
    t = record.t
    Ts = 1.0 / record.fs
    if t.size < 2:
        return np.zeros(0, dtype=int), np.zeros(0)
    cum = cumulative_trapezoid(y, t, initial=0.0)
    starts = record.periods.t_start
    eps = 1e-6 * record.dt
    full = (starts >= t[0] - eps) & (starts + Ts <= t[-1] + eps)
    idx = np.flatnonzero(full)
    a = np.interp(starts[idx], t, cum)
    b = np.interp(starts[idx] + Ts, t, cum)
    return idx, (b - a) / Ts


def dcm_occupancy(record: WaveformRecord) -> float:
    """Share of switching periods with a flat (Mode III) interval.

    Periods with zero duty count as discontinuous. An empty record gives 1.
    """
    per = record.periods
    if len(per) == 0:
        return 1.0
    dcm = (per.t_mode3 > 0) | (per.duty <= 0)
    return float(np.mean(dcm))


def stored_energy(params: CircuitParams, x: np.ndarray, with_lg: bool) -> float:
    e = 0.5 * (params.L1 * x[0] ** 2 + params.L2 * x[1] ** 2
               + params.C1 * x[2] ** 2 + params.C2 * x[3] ** 2)
    if with_lg:
        e += 0.5 * params.Lg * x[4] ** 2
    return float(e)


def efficiency(record: WaveformRecord, params: CircuitParams, tol: float = 0.01):
    """(eta, LossBreakdown) over the periods of ``record``.

    Conduction losses are simulated, so they are checked against the
    circuit's own energy balance; switching losses are estimated from the
    switch voltage and current at each transition and charged to the
    source, eta = Pout / (Pin + P_switching).
    """
    per = record.periods
    n = len(per)
    if n == 0:
        raise WindowError("record holds no complete switching period")
    T = n * per.Ts
    p_in = per.e_in.sum() / T
    p_out = per.e_out.sum() / T
    fs = 1.0 / per.Ts
    turnoff = params.s1.t_fall * fs * per.turnoff_vi.sum() / n
    turnon = params.s1.t_rise * fs * per.turnon_vi.sum() / n
    losses = LossBreakdown(
        conduction_switches=float(per.e_switch.sum() / T),
        conduction_diode=float(per.e_diode.sum() / T),
        conduction_esr=float(per.e_esr.sum() / T),
        switching_turnoff=float(turnoff),
        switching_turnon=float(turnon),
    )
    e0 = stored_energy(params, per.x_start[0], record.lg_stored)
    e1 = stored_energy(params, per.x_end[-1], record.lg_stored)
    residual = p_in - p_out - losses.conduction - (e1 - e0) / T
    if abs(residual) > tol * abs(p_in):
        raise EnergyMismatch(
            f"power balance off by {residual:.4g} W ({100 * residual / p_in:.3g}% of Pin)")
    if p_in <= 0:
        return 0.0, losses
    eta = p_out / (p_in + losses.switching_turnoff + losses.switching_turnon)
    return float(eta), losses


def steady_window(record: WaveformRecord, cycles: int = 2) -> WaveformRecord:
    return record.last_cycles(cycles)


def vc1_profile(record: WaveformRecord) -> dict:
    """Switching-period averages of vC1 split by half cycle.

    ``sepic_mean`` is the mean over SEPIC-half periods, ``cuk_peak`` the
    largest Cuk-half period average (the envelope peak).
    """
    per = record.periods
    avg = per.mean("vC1")
    sep = per.half == HalfCycle.SEPIC
    cuk = ~sep
    return {
        "sepic_mean": float(avg[sep].mean()) if sep.any() else float("nan"),
        "cuk_peak": float(avg[cuk].max()) if cuk.any() else float("nan"),
        "cuk_min": float(avg[cuk].min()) if cuk.any() else float("nan"),
    }


def grid_voltage(record: WaveformRecord, load: GridSource) -> np.ndarray:
    return math.sqrt(2.0) * load.Vo_rms * np.sin(2 * np.pi * record.fg * record.t + load.phase)


def injected_current_phase(record: WaveformRecord, load: GridSource) -> float:
    """Phase of the converter's injected current (period averages of the
    unfolded i2, ahead of C2) relative to the grid voltage, in degrees."""
    per = record.periods
    tm = per.t_start + 0.5 * per.Ts
    vg = math.sqrt(2.0) * load.Vo_rms * np.sin(2 * np.pi * record.fg * tm + load.phase)
    return phase_difference(per.mean("i2"), vg, per.Ts, record.fg)


def analysis_report(record: WaveformRecord, params: CircuitParams,
                    op: Optional[OperatingPoint] = None, cycles: int = 2) -> dict:
    """Key-value summary of the steady-state window (final ``cycles`` line cycles)."""
    w = record.last_cycles(cycles)
    dt, fg = w.dt, w.fg
    eta, losses = efficiency(w, params)
    per = w.periods
    T = len(per) * per.Ts
    rep = {
        "thd_pct": thd(w.vo, dt, fg),
        "vo_rms": float(math.sqrt(per.int_vo2.sum() / T)),
        "vo_peak": fundamental_peak(w.vo, dt, fg),
        "vo_max": float(np.max(np.abs(w.vo))),
        "io_rms": float(math.sqrt(per.int_io2.sum() / T)),
        "io_thd_pct": thd(w.io, dt, fg),
        "d_peak_measured": float(per.duty.max()),
        "dcm_occupancy": dcm_occupancy(w),
        "eta": eta,
        "p_in": float(per.e_in.sum() / T),
        "p_out": float(per.e_out.sum() / T),
    }
    for k, v in losses.as_dict().items():
        rep["loss_" + k] = v
    vc1 = vc1_profile(w)
    rep["vc1_sepic_mean"] = vc1["sepic_mean"]
    rep["vc1_cuk_peak"] = vc1["cuk_peak"]
    if op is not None and isinstance(op.load, GridSource):
        rep["io_phase_deg"] = phase_difference(w.io, grid_voltage(w, op.load), dt, fg)
        rep["i2_phase_deg"] = injected_current_phase(w, op.load)
    return rep


def format_report(rep: dict, header: Optional[str] = None) -> str:
    lines = [f"# {header}"] if header else []
    for k, v in rep.items():
        lines.append(f"{k} = {v:.6g}" if isinstance(v, float) else f"{k} = {v}")
    return "\n".join(lines) + "\n"
