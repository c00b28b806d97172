"""Passive-component sizing and design verification.

The ripple ratios are free design inputs. Their defaults are the values
that reproduce the reference parts set (L1 = 8 uH, C1 = 0.47 uF,
L2 = 100 uH, C2 = 0.47 uF) at the rated 35 V / 220 V / 250 W point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import averaged
from .errors import CcmViolation, ConfigError, DegenerateDuty, RangeError
from .model_types import CircuitParams, OperatingPoint

C1_RIPPLE_RATIO = 1.21  # dV_C1 / V_C1 at the line peak
L2_RIPPLE_RATIO = 2.40  # dI_L2 / I_L2 at the line peak
FC_MIN_FACTOR = 10.0  # fc >= 10 fg
FC_MAX_FACTOR = 0.25  # fc <= fs / 4


def size_L1(op: OperatingPoint) -> tuple[float, float]:
    """Largest L1 that keeps the rated peak in DCM, and the boundary duty."""
    if not op.Ipv > 0:
        raise ConfigError("size_L1 needs Ipv > 0")
    vom, vpv = op.V_om, op.Vdc
    d_b = vom / (vom + vpv)
    l1_max = op.Ts * vom * vpv / (4.0 * op.Ipv * (vpv + vom))
    return l1_max, d_b


def size_C1(op: OperatingPoint, L1: float, ripple_ratio: float = C1_RIPPLE_RATIO,
            D: Optional[float] = None) -> float:
    """C1 for a relative ripple ``ripple_ratio`` at the line peak.

    D defaults to the DCM boundary duty at the line peak.
    """
    if not ripple_ratio > 0:
        raise ConfigError("ripple_ratio must be positive")
    if not L1 > 0:
        raise ConfigError("L1 must be positive")
    if D is None:
        D = op.V_om / (op.V_om + op.Vdc)
    return (D * op.Ts) ** 2 * op.Vdc / (2.0 * op.V_om * L1 * ripple_ratio)


def rated_output_current(op: OperatingPoint) -> float:
    """Loss-less rated rms output current Vpv Ipv / Vo_rms."""
    return op.Vdc * op.Ipv / op.Vo_rms


def size_L2(op: OperatingPoint, D: float, ripple_ratio: float = L2_RIPPLE_RATIO,
            Io: Optional[float] = None) -> float:
    """L2 for a relative current ripple ``ripple_ratio`` at duty D."""
    Io = rated_output_current(op) if Io is None else Io
    if not (Io > 0 and ripple_ratio > 0):
        raise ConfigError("size_L2 needs Io > 0 and ripple_ratio > 0")
    return D * op.Vdc * op.Ts / (Io * ripple_ratio)


def cutoff_frequency(L2: float, C2: float) -> float:
    if not (L2 > 0 and C2 > 0):
        raise ConfigError("L2 and C2 must be positive")
    return 1.0 / (2.0 * math.pi * math.sqrt(L2 * C2))


def size_C2(L2: float, fc: float, fg: float = 50.0, fs: float = 100e3) -> float:
    """Filter capacitor for an L2-C2 corner at fc; fc must sit well between fg and fs."""
    if not L2 > 0:
        raise ConfigError("L2 must be positive")
    lo, hi = FC_MIN_FACTOR * fg, FC_MAX_FACTOR * fs
    if not lo <= fc <= hi:
        raise RangeError(f"fc = {fc:.4g} Hz outside [{lo:.4g}, {hi:.4g}] Hz")
    return 1.0 / (4.0 * math.pi ** 2 * fc ** 2 * L2)


@dataclass(frozen=True)
class Criterion:
    name: str
    value: float
    limit: float
    relation: str  # "<=" or ">="
    margin: float  # relative headroom, negative when violated
    passed: bool
    note: str = ""


def _criterion(name, value, limit, relation, note=""):
    if relation == "<=":
        margin = (limit - value) / abs(limit)
        ok = value <= limit
    else:
        margin = (value - limit) / abs(limit)
        ok = value >= limit
    return Criterion(name, float(value), float(limit), relation, float(margin), bool(ok), note)


@dataclass
class DesignReport:
    criteria: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def __getitem__(self, name: str) -> Criterion:
        for c in self.criteria:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list:
        return [c.name for c in self.criteria if not c.passed]

    def to_text(self) -> str:
        head = f"{'criterion':<18}{'value':>14}{'rel':>4}{'limit':>14}{'margin':>10}  result"
        rows = [head, "-" * len(head)]
        for c in self.criteria:
            rows.append(f"{c.name:<18}{c.value:>14.6g}{c.relation:>4}{c.limit:>14.6g}"
                        f"{100 * c.margin:>9.2f}%  {'PASS' if c.passed else 'FAIL'}"
                        + (f"  ({c.note})" if c.note else ""))
        rows.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(rows) + "\n"

    def to_kv(self) -> str:
        lines = []
        for c in self.criteria:
            for k in ("value", "limit", "margin", "passed"):
                v = getattr(c, k)
                lines.append(f"{c.name}.{k} = {v:.9g}" if isinstance(v, float)
                             else f"{c.name}.{k} = {str(v).lower()}")
        lines.append(f"all_passed = {str(self.passed).lower()}")
        return "\n".join(lines) + "\n"


def valley_margin_profile(params: CircuitParams, op: OperatingPoint, n_angles: int = 181):
    """DCM-inequality margin over the positive half line cycle.

    Returns (angles, margins); NaN marks angles where the closed form has no
    DCM solution (CCM or duty overflow). Negative margins keep I_L1v < 0.
    """
    theta = np.linspace(0.0, math.pi, n_angles)
    out = np.full(n_angles, np.nan)
    dp = averaged.d_peak(op.Ipv, params, op.Vdc, op.Ts)
    for i, th in enumerate(theta):
        s = math.sin(th)
        if s <= 1e-12 or dp <= 0:
            continue
        D = dp * s
        if D >= 1:
            continue
        try:
            D0 = averaged.solve_D0(D, op.Vdc, op.V_om * s)
            out[i] = averaged.dcm_inequality_margin(params, D, D0)
        except (CcmViolation, DegenerateDuty):
            pass
    return theta, out


def verify_design(params: CircuitParams, op: OperatingPoint,
                  c1_ripple_ratio: float = C1_RIPPLE_RATIO,
                  l2_ripple_ratio: float = L2_RIPPLE_RATIO) -> DesignReport:
    """Check a parts set against the sizing rules at the rated point of ``op``."""
    rep = DesignReport()
    l1_max, d_b = size_L1(op)
    rep.criteria.append(_criterion("L1_dcm_bound", params.L1, l1_max, "<=",
                                   f"boundary duty {d_b:.4f}"))
    rep.criteria.append(_criterion("C1_ripple", params.C1,
                                   size_C1(op, params.L1, c1_ripple_ratio, d_b), ">=",
                                   f"ripple ratio {c1_ripple_ratio:g}"))
    try:
        dp = averaged.d_peak(op.Ipv, params, op.Vdc, op.Ts)
    except ConfigError:
        dp = float("nan")
    rep.criteria.append(_criterion("D_peak_dcm", dp, d_b, "<=", "rated peak duty"))
    l2_req = size_L2(op, min(dp, 1.0) if dp == dp else d_b, l2_ripple_ratio)
    rep.criteria.append(_criterion("L2_ripple", params.L2, l2_req, ">=",
                                   f"ripple ratio {l2_ripple_ratio:g}"))
    fc = cutoff_frequency(params.L2, params.C2)
    rep.criteria.append(_criterion("fc_above_line", fc, FC_MIN_FACTOR * op.fg, ">="))
    rep.criteria.append(_criterion("fc_below_switching", fc, FC_MAX_FACTOR * op.fs, "<="))
    ratio = params.L2 / params.L1
    worst = float("inf")  # any angle without a DCM solution fails the check
    if dp == dp and dp < 1:
        _, m = valley_margin_profile(params, op)
        if not np.any(np.isnan(m[1:-1])):
            worst = float(np.nanmax(m)) + ratio
    rep.criteria.append(_criterion("valley_negative", worst, ratio, "<=",
                                   "peak DCM gain vs L2/L1"))
    return rep
