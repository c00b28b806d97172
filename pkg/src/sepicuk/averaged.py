"""Closed-form steady-state DCM relations.

All relations use the loss-less element values; parasitic resistances only
enter the switched simulator.
"""

from __future__ import annotations

import math

from .errors import CcmViolation, ConfigError, DegenerateDuty, DutyOverflow
from .model_types import CircuitParams, HalfCycle, OperatingPoint, SteadyStateSolution, leq


def voltage_gain(D: float, D0: float, half: HalfCycle) -> float:
    """Signed DCM gain vo/Vdc = sgn * D / (1 - D - D0)."""
    den = 1.0 - D - D0
    if den <= 0:
        raise DegenerateDuty(f"D + D0 = {D + D0:.6g} >= 1")
    return HalfCycle(half).sign * D / den


def solve_D0(D: float, Vdc: float, vo_abs: float) -> float:
    """Discontinuous fraction that yields |vo| from Vdc at duty D.

    Raises CcmViolation when the converter would need D0 < 0.
    """
    if not (Vdc > 0 and vo_abs > 0 and 0 < D < 1):
        raise ConfigError("solve_D0 needs Vdc > 0, vo_abs > 0, 0 < D < 1")
    D0 = 1.0 - D * (1.0 + Vdc / vo_abs)
    if D0 < 0:
        raise CcmViolation(f"D={D:.4g} gives D0={D0:.4g} < 0 at |vo|={vo_abs:.4g} V", D0=D0)
    return D0


def ripple_currents(params: CircuitParams, Vdc: float, D: float, Ts: float) -> tuple[float, float]:
    """On-interval current rise of L1 and L2."""
    return D * Ts * Vdc / params.L1, D * Ts * Vdc / params.L2


def valley_current(params: CircuitParams, Vdc: float, D: float, D0: float, Ts: float) -> float:
    """I_L1v; a negative value keeps both inductor currents non-zero."""
    return 0.5 * D * Ts * Vdc * (D / params.L2 - (1.0 - D - D0) / params.L1)


def avg_dc_current(params: CircuitParams, Vdc: float, D: float, Ts: float) -> float:
    """Switching-average source current D^2 Ts Vdc / (2 Leq)."""
    return D * D * Ts * Vdc / (2.0 * leq(params))


def avg_output_current(params: CircuitParams, Vdc: float, D: float, D0: float, Ts: float,
                       half: HalfCycle = HalfCycle.SEPIC) -> float:
    """Magnitude of the switching-average unfolder input current.

    The value is the same in both half cycles; ``half`` only documents
    which route is being asked for.
    """
    dIL1, dIL2 = ripple_currents(params, Vdc, D, Ts)
    return 0.5 * (1.0 - D - D0) * (dIL1 + dIL2)


def d_peak(Ipv: float, params: CircuitParams, Vpv: float, Ts: float) -> float:
    if Ipv < 0 or Vpv <= 0:
        raise ConfigError("duty law needs Ipv >= 0 and Vpv > 0")
    return 2.0 * math.sqrt(Ipv * leq(params) / (Ts * Vpv))


def duty_law(Ipv: float, params: CircuitParams, Vpv: float, omega_t: float, Ts: float) -> float:
    """Rectified-sine duty that draws 2 Ipv sin^2 from the source."""
    dp = d_peak(Ipv, params, Vpv, Ts)
    if dp >= 1.0:
        raise DutyOverflow(f"D_peak = {dp:.4f} >= 1", d_peak=dp)
    return dp * abs(math.sin(omega_t))


def dcm_inequality_margin(params: CircuitParams, D: float, D0: float) -> float:
    """D/(1-D-D0) - L2/L1. Positive would make I_L1v positive."""
    den = 1.0 - D - D0
    if den <= 0:
        raise DegenerateDuty(f"D + D0 = {D + D0:.6g} >= 1")
    return D / den - params.L2 / params.L1


def steady_state_at_angle(params: CircuitParams, op: OperatingPoint, omega_t: float,
                          zero_tol: float = 1e-12) -> SteadyStateSolution:
    """Full closed-form solution at one line angle of the rated duty law."""
    Ts, Vdc = op.Ts, op.Vdc
    s = math.sin(omega_t)
    half = HalfCycle.SEPIC if s >= 0 else HalfCycle.CUK
    vo_abs = op.V_om * abs(s)
    D = duty_law(op.Ipv, params, Vdc, omega_t, Ts)
    if vo_abs <= zero_tol * op.V_om or D <= 0:
        return SteadyStateSolution.zero(Vdc, half)
    D0 = solve_D0(D, Vdc, vo_abs)
    dIL1, dIL2 = ripple_currents(params, Vdc, D, Ts)
    IL1v = valley_current(params, Vdc, D, D0, Ts)
    IL2v = -IL1v
    vc1 = Vdc if half is HalfCycle.SEPIC else Vdc + vo_abs
    return SteadyStateSolution(
        D=D,
        D0=D0,
        dIL1=dIL1,
        dIL2=dIL2,
        IL1v=IL1v,
        IL1p=IL1v + dIL1,
        IL2v=IL2v,
        IL2p=IL2v + dIL2,
        Idc_avg=avg_dc_current(params, Vdc, D, Ts),
        I2_avg=avg_output_current(params, Vdc, D, D0, Ts, half),
        VC1_avg=vc1,
        vo_abs=vo_abs,
        half=half,
    )


def ccm_boundary_duty(Vdc: float, vo_abs: float) -> float:
    """CCM duty d/(1-d) = |vo|/Vdc; the DCM/CCM boundary at D0 = 0."""
    return vo_abs / (vo_abs + Vdc)
