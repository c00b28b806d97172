"""Closed-loop control: rms-error PI loops, rectified-sine duty, unfolder gating.

The phase reference is ideal (theta = 2 pi fg t + grid phase). Loops run
once per line half cycle on the rms measured over that half cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import averaged
from .errors import ConfigError, WindowError
from .model_types import CircuitParams, HalfCycle, OperatingPoint

D_PEAK_MAX = 0.95


@dataclass
class PiState:
    """PI regulator with clamped output and conditional-integration anti-windup.

    The output uses the integral accumulated *before* the current error, so a
    constant error e from zero integral gives kp*e on the first call.
    """

    kp: float
    ki: float
    integral: float = 0.0
    output_limits: tuple = (0.0, D_PEAK_MAX)

    def __post_init__(self):
        lo, hi = self.output_limits
        if not lo < hi:
            raise ConfigError("PI output limits need lo < hi")

    def preset(self, output: float) -> None:
        """Load the integrator so that a zero error yields ``output``."""
        self.integral = output / self.ki if self.ki else 0.0


def pi_step(pi: PiState, error: float, dt: float) -> float:
    if not dt > 0:
        raise ConfigError("dt must be positive")
    lo, hi = pi.output_limits
    raw = pi.kp * error + pi.ki * pi.integral
    out = min(max(raw, lo), hi)
    winding = (raw >= hi and error > 0) or (raw <= lo and error < 0)
    if not winding:
        pi.integral += error * dt
    return out


@dataclass(frozen=True)
class CurrentReference:
    """Regulate output rms current to a reference (normally set by MPPT)."""

    Iorms_ref: float


@dataclass(frozen=True)
class VoltageRegulation:
    """Outer voltage PI produces the current reference for the inner loop."""

    Vorms_ref: float
    kp_v: float = 0.002
    ki_v: float = 0.2
    i_max: float = 3.0


@dataclass(frozen=True)
class FixedDuty:
    """Constant duty in every period, no modulation and no feedback.

    ``half`` pins the unfolder to one half cycle; None follows the line.
    """

    duty: float
    half: Optional[HalfCycle] = None


@dataclass(frozen=True)
class OpenLoop:
    """Rectified-sine duty with a fixed peak."""

    d_peak: float


ControlMode = Union[CurrentReference, VoltageRegulation, FixedDuty, OpenLoop]


def half_cycle_select(t: float, fg: float, phase: float = 0.0) -> HalfCycle:
    """SEPIC while sin(2 pi fg t + phase) >= 0, Cuk otherwise."""
    frac = math.fmod(fg * t + phase / (2.0 * math.pi), 1.0)
    if frac < 0:
        frac += 1.0
    frac = round(frac, 12) % 1.0
    return HalfCycle.SEPIC if frac <= 0.5 else HalfCycle.CUK


def measure_rms(samples, dt: float, fg: float, half_cycles: bool = True) -> float:
    """Discrete rms over a window of whole line half cycles (or cycles).

    Raises WindowError if the window length is off an integer number of
    half cycles by more than one sample.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise WindowError("empty window")
    if fg > 0:
        unit = 0.5 / fg if half_cycles else 1.0 / fg
        n_units = x.size * dt / unit
        if round(n_units) < 1 or abs(n_units - round(n_units)) * unit > dt * (1 + 1e-9):
            raise WindowError(f"window spans {n_units:.4f} half cycles")
    return float(np.sqrt(np.mean(x * x)))


@dataclass
class ControllerHandle:
    mode: ControlMode
    pi: PiState = field(default_factory=lambda: PiState(0.5, 60.0))
    fg: float = 50.0
    outer: Optional[PiState] = None
    d_peak: float = 0.0
    i_ref: float = 0.0
    phase: float = 0.0
    history: list = field(default_factory=list)

    def __post_init__(self):
        if isinstance(self.mode, VoltageRegulation) and self.outer is None:
            m = self.mode
            self.outer = PiState(m.kp_v, m.ki_v, output_limits=(0.0, m.i_max))
        if isinstance(self.mode, CurrentReference):
            self.i_ref = self.mode.Iorms_ref
        if isinstance(self.mode, OpenLoop):
            self.d_peak = self.mode.d_peak
        if isinstance(self.mode, FixedDuty) and not 0 <= self.mode.duty < 1:
            raise ConfigError("fixed duty must lie in [0, 1)")

    @property
    def modulated(self) -> bool:
        return not isinstance(self.mode, FixedDuty)

    @property
    def closed_loop(self) -> bool:
        return isinstance(self.mode, (CurrentReference, VoltageRegulation))

    def start(self, params: CircuitParams, op: OperatingPoint) -> None:
        """Bumpless start at the rated operating point of ``op``.

        The inner integrator is preset to the closed-form peak duty for
        op.Ipv (or the source current matching Iorms_ref), the outer one to
        the loss-less rated rms current.
        """
        self.fg = op.fg
        self.phase = getattr(op.load, "phase", 0.0)
        if not self.closed_loop:
            return
        ipv = op.Ipv
        if isinstance(self.mode, CurrentReference):
            ipv = self.mode.Iorms_ref * op.Vo_rms / op.Vdc  # loss-less power match
        try:
            d_ff = averaged.d_peak(ipv, params, op.Vdc, op.Ts)
        except ConfigError:
            d_ff = 0.0
        d_ff = min(d_ff, self.pi.output_limits[1])
        self.pi.preset(d_ff)
        self.d_peak = d_ff
        if isinstance(self.mode, VoltageRegulation):
            i_rated = op.Vdc * op.Ipv / self.mode.Vorms_ref
            self.outer.preset(i_rated)
            self.i_ref = i_rated

    def half_cycle(self, t: float) -> HalfCycle:
        if isinstance(self.mode, FixedDuty) and self.mode.half is not None:
            return HalfCycle(self.mode.half)
        return half_cycle_select(t, self.fg, self.phase)

    def duty(self, t: float) -> float:
        if isinstance(self.mode, FixedDuty):
            return self.mode.duty
        return self.d_peak * abs(math.sin(2.0 * math.pi * self.fg * t + self.phase))

    def duties(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if isinstance(self.mode, FixedDuty):
            return np.full(t.shape, self.mode.duty)
        return self.d_peak * np.abs(np.sin(2.0 * np.pi * self.fg * t + self.phase))

    def update(self, vo_rms: float, io_rms: float, dt: float) -> float:
        """One regulation step at the end of an rms window; returns D_peak."""
        if isinstance(self.mode, VoltageRegulation):
            self.i_ref = pi_step(self.outer, self.mode.Vorms_ref - vo_rms, dt)
        if self.closed_loop:
            self.d_peak = pi_step(self.pi, self.i_ref - io_rms, dt)
        self.history.append((vo_rms, io_rms, self.i_ref, self.d_peak))
        return self.d_peak


def duty_command(ctrl: ControllerHandle, t: float, measured_rms=None, dt: float = None) -> float:
    """Instantaneous duty d(t) = D_peak |sin(2 pi fg t)|.

    If ``measured_rms`` is given as (vo_rms, io_rms) the loop is advanced
    first, as happens at the end of every rms window.
    """
    if measured_rms is not None:
        vo_rms, io_rms = measured_rms
        ctrl.update(vo_rms, io_rms, dt if dt is not None else 0.5 / ctrl.fg)
    return ctrl.duty(t)


def make_controller(mode: ControlMode, kp: float = 0.5, ki: float = 60.0,
                    fg: float = 50.0) -> ControllerHandle:
    return ControllerHandle(mode=mode, pi=PiState(kp, ki), fg=fg)
