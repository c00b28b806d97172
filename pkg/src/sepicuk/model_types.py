"""Domain types for the SEPIC-Cuk micro-inverter.

Everything is in SI base units. Parameter records are frozen dataclasses;
result records hold numpy arrays and are treated as read-only by
convention.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .errors import ConfigError


class ModeId(enum.IntEnum):
    """Sub-interval of a switching period."""

    MODE_I = 1  # S1 on
    MODE_II = 2  # S1 off, diode conducting
    MODE_III = 3  # S1 off, diode blocking, iL1 = -iL2


class HalfCycle(enum.IntEnum):
    SEPIC = 0  # S2, S3 gated, positive grid half cycle
    CUK = 1  # S4, S5 gated, negative grid half cycle

    @property
    def sign(self) -> float:
        return 1.0 if self is HalfCycle.SEPIC else -1.0


@dataclass(frozen=True)
class SwitchParams:
    """Conduction and transition data of one MOSFET."""

    r_on: float = 0.0
    t_fall: float = 20e-9
    t_rise: float = 20e-9

    def __post_init__(self):
        if self.r_on < 0 or self.t_fall < 0 or self.t_rise < 0:
            raise ConfigError("switch parameters must be non-negative")


@dataclass(frozen=True)
class CircuitParams:
    """Power-stage element values. Defaults reproduce the rated prototype."""

    L1: float = 8e-6
    L2: float = 100e-6
    C1: float = 0.47e-6
    C2: float = 0.47e-6
    Lg: float = 1e-3
    rL1: float = 20e-3
    rL2: float = 0.6
    rC1: float = 30e-3
    rC2: float = 30e-3
    diode_vf: float = 0.7
    s1: SwitchParams = field(default_factory=lambda: SwitchParams(r_on=24e-3))
    unfold: SwitchParams = field(default_factory=lambda: SwitchParams(r_on=37e-3))

    def __post_init__(self):
        for name in ("L1", "L2", "C1", "C2"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("Lg", "rL1", "rL2", "rC1", "rC2", "diode_vf"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")

    @property
    def L_eq(self) -> float:
        return leq(self)

    def ideal(self) -> "CircuitParams":
        """Same reactive elements with every loss element set to zero."""
        return replace(
            self,
            rL1=0.0,
            rL2=0.0,
            rC1=0.0,
            rC2=0.0,
            diode_vf=0.0,
            s1=SwitchParams(0.0, 0.0, 0.0),
            unfold=SwitchParams(0.0, 0.0, 0.0),
        )


def leq(params: CircuitParams) -> float:
    """Parallel combination L1 || L2."""
    if not (params.L1 > 0 and params.L2 > 0):
        raise ConfigError("L1 and L2 must be positive")
    return params.L1 * params.L2 / (params.L1 + params.L2)


@dataclass(frozen=True)
class Resistive:
    """Grid replaced by a resistor; CircuitParams.Lg (if > 0) sits in series."""

    Ro: float

    def __post_init__(self):
        if not self.Ro > 0:
            raise ConfigError("Ro must be positive")


@dataclass(frozen=True)
class GridSource:
    """Stiff sinusoidal grid behind a series inductance."""

    Vo_rms: float
    phase: float = 0.0
    Lg: float = 1e-3

    def __post_init__(self):
        if not self.Lg > 0:
            raise ConfigError("GridSource needs Lg > 0")
        if self.Vo_rms < 0:
            raise ConfigError("grid rms voltage must be non-negative")


LoadModel = Union[Resistive, GridSource]


@dataclass(frozen=True)
class OperatingPoint:
    Vdc: float = 35.0
    Vo_rms: float = 220.0
    fg: float = 50.0
    fs: float = 100e3
    load: LoadModel = field(default_factory=lambda: Resistive(194.0))
    Ipv: float = 7.13

    def __post_init__(self):
        if not (self.Vdc > 0 and self.Vo_rms > 0):
            raise ConfigError("Vdc and Vo_rms must be positive")
        if not self.fs > 0 or self.fg < 0:
            raise ConfigError("fs must be positive and fg non-negative")
        if self.fg > 0 and self.fs / self.fg < 100:
            raise ConfigError("fs/fg must be at least 100")
        if self.Ipv < 0:
            raise ConfigError("Ipv must be non-negative")

    @property
    def V_om(self) -> float:
        return math.sqrt(2.0) * self.Vo_rms

    @property
    def Ts(self) -> float:
        return 1.0 / self.fs


@dataclass(frozen=True)
class ConverterState:
    iL1: float = 0.0
    iL2: float = 0.0
    vC1: float = 0.0
    vC2: float = 0.0
    iLg: float = 0.0
    mode: ModeId = ModeId.MODE_III
    half_cycle: HalfCycle = HalfCycle.SEPIC

    def as_array(self) -> np.ndarray:
        return np.array([self.iL1, self.iL2, self.vC1, self.vC2, self.iLg])

    @classmethod
    def from_array(cls, x, mode=ModeId.MODE_III, half=HalfCycle.SEPIC):
        return cls(*(float(v) for v in x[:5]), mode=ModeId(mode), half_cycle=HalfCycle(half))


@dataclass(frozen=True)
class SteadyStateSolution:
    """Closed-form DCM quantities at one line angle."""

    D: float
    D0: float
    dIL1: float
    dIL2: float
    IL1v: float
    IL1p: float
    IL2v: float
    IL2p: float
    Idc_avg: float
    I2_avg: float
    VC1_avg: float
    vo_abs: float = 0.0
    half: HalfCycle = HalfCycle.SEPIC

    @classmethod
    def zero(cls, Vdc: float, half: HalfCycle = HalfCycle.SEPIC) -> "SteadyStateSolution":
        return cls(0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, Vdc, 0.0, half)

    def check(self, rtol: float = 1e-9) -> None:
        """Assert the field invariants; raises AssertionError on violation."""
        assert self.D >= 0 and self.D0 >= 0
        assert self.D + self.D0 <= 1 + rtol
        scale = max(1.0, abs(self.IL1p), abs(self.IL2p))
        assert abs(self.IL1p - (self.IL1v + self.dIL1)) <= rtol * scale
        assert abs(self.IL2p - (self.IL2v + self.dIL2)) <= rtol * scale
        assert abs(self.IL1v + self.IL2v) <= rtol * scale


@dataclass
class PeriodStats:
    """Per-switching-period integrals collected by the simulator.

    Integral fields (``int_*``) hold the exact time integral of the signal
    over the period, energies are in joules.
    """

    t_start: np.ndarray
    duty: np.ndarray
    half: np.ndarray
    ccm: np.ndarray
    t_mode3: np.ndarray
    int_iL1: np.ndarray
    int_iL2: np.ndarray
    int_vC1: np.ndarray
    int_vC2: np.ndarray
    int_vo: np.ndarray
    int_io: np.ndarray
    int_vo2: np.ndarray
    int_io2: np.ndarray
    int_i2: np.ndarray  # unfolded converter current ahead of C2
    e_in: np.ndarray
    e_out: np.ndarray
    e_switch: np.ndarray
    e_diode: np.ndarray
    e_esr: np.ndarray
    turnoff_vi: np.ndarray
    turnon_vi: np.ndarray
    x_end: np.ndarray  # (n, 5) circuit state at the end of each period
    x_start: np.ndarray  # (n, 5) at the start, after any half-cycle swap
    Ts: float

    def __len__(self):
        return len(self.t_start)

    def mean(self, name: str) -> np.ndarray:
        """Switching-period average of an integrated signal (``iL1``, ``vo`` ...)."""
        return getattr(self, "int_" + name) / self.Ts

    def select(self, mask) -> "PeriodStats":
        kw = {k: v[mask] for k, v in self.__dict__.items() if isinstance(v, np.ndarray)}
        return PeriodStats(Ts=self.Ts, **kw)


@dataclass
class WaveformRecord:
    """Uniformly sampled trajectory plus per-period statistics."""

    t: np.ndarray
    iL1: np.ndarray
    iL2: np.ndarray
    vC1: np.ndarray
    vC2: np.ndarray
    iLg: np.ndarray
    vo: np.ndarray
    io: np.ndarray
    idc: np.ndarray
    duty: np.ndarray
    mode: np.ndarray
    half: np.ndarray
    periods: PeriodStats
    dt: float
    Vdc: float
    fg: float
    fs: float
    lg_stored: bool = True  # series Lg lies inside the power-balance boundary

    CSV_COLUMNS = ("t", "iL1", "iL2", "vC1", "vC2", "vo", "io", "idc", "duty", "mode", "half")

    def __len__(self):
        return len(self.t)

    def state(self, i: int) -> ConverterState:
        return ConverterState(
            float(self.iL1[i]),
            float(self.iL2[i]),
            float(self.vC1[i]),
            float(self.vC2[i]),
            float(self.iLg[i]),
            ModeId(int(self.mode[i])),
            HalfCycle(int(self.half[i])),
        )

    def window(self, t0: float, t1: Optional[float] = None) -> "WaveformRecord":
        """Samples with t0 <= t < t1 and periods starting in the same span."""
        t1 = np.inf if t1 is None else t1
        eps = 1e-3 * self.dt
        m = (self.t >= t0 - eps) & (self.t < t1 - eps)
        pm = (self.periods.t_start >= t0 - eps) & (self.periods.t_start < t1 - eps)
        kw = {k: getattr(self, k)[m] for k in ("t", "iL1", "iL2", "vC1", "vC2", "iLg",
                                              "vo", "io", "idc", "duty", "mode", "half")}
        return WaveformRecord(periods=self.periods.select(pm), dt=self.dt, Vdc=self.Vdc,
                              fg=self.fg, fs=self.fs, lg_stored=self.lg_stored, **kw)

    def last_cycles(self, n: int = 2) -> "WaveformRecord":
        """Final ``n`` line cycles, the steady-state analysis window."""
        if self.fg <= 0:
            raise ConfigError("line-cycle window needs fg > 0")
        t_end = self.t[-1] + self.dt
        return self.window(t_end - n / self.fg)

    def to_csv(self, path) -> None:
        cols = [self.t, self.iL1, self.iL2, self.vC1, self.vC2, self.vo, self.io,
                self.idc, self.duty]
        with open(path, "w", newline="") as fh:
            fh.write(",".join(self.CSV_COLUMNS) + "\n")
            data = np.column_stack(cols)
            for row, m, h in zip(data, self.mode, self.half):
                fh.write(",".join(f"{v:.10g}" for v in row))
                fh.write(f",{int(m)},{HalfCycle(int(h)).name.lower()}\n")
