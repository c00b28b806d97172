import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from sepicuk import (
    CcmViolation,
    CircuitParams,
    ConfigError,
    DegenerateDuty,
    DutyOverflow,
    HalfCycle,
    OperatingPoint,
    averaged as av,
)

P = CircuitParams()
TS = 1e-5
VDC = 35.0


# -- voltage gain -----------------------------------------------------------

def test_gain_sepic():
    assert av.voltage_gain(0.5, 0.25, HalfCycle.SEPIC) == pytest.approx(2.0, rel=1e-12)


def test_gain_cuk_is_negative():
    assert av.voltage_gain(0.5, 0.25, HalfCycle.CUK) == pytest.approx(-2.0, rel=1e-12)


def test_gain_near_rated_peak():
    # 0.78 / (1 - 0.78 - 0.1322), close to 311 / 35
    assert av.voltage_gain(0.78, 0.1322, HalfCycle.SEPIC) == pytest.approx(8.8838, abs=1e-3)


def test_gain_degenerate():
    with pytest.raises(DegenerateDuty):
        av.voltage_gain(0.6, 0.4, HalfCycle.SEPIC)


# -- D0 ---------------------------------------------------------------------

def test_solve_d0_rated():
    assert av.solve_D0(0.78, VDC, 311.0) == pytest.approx(0.132219, abs=1e-6)


def test_solve_d0_unity_gain_boundary():
    assert av.solve_D0(0.5, VDC, 35.0) == 0.0


def test_solve_d0_just_past_ccm_boundary():
    # 0.9 (1 + 35/311) > 1, so no discontinuous interval is left
    with pytest.raises(CcmViolation) as ei:
        av.solve_D0(0.9, VDC, 311.0)
    assert ei.value.D0 == pytest.approx(-0.001286, abs=1e-6)


@pytest.mark.parametrize("args", [(0.0, 35, 311), (1.0, 35, 311), (0.5, 0, 311), (0.5, 35, 0)])
def test_solve_d0_domain(args):
    with pytest.raises(ConfigError):
        av.solve_D0(*args)


@given(st.floats(10, 60), st.floats(1, 500), st.floats(0.01, 0.99))
@settings(max_examples=300)
def test_solve_d0_inverts_gain(vdc, vo, frac):
    D = frac * av.ccm_boundary_duty(vdc, vo)
    D0 = av.solve_D0(D, vdc, vo)
    assert av.voltage_gain(D, D0, HalfCycle.SEPIC) * vdc == pytest.approx(vo, rel=1e-9)


# -- ripple and valley ------------------------------------------------------

def test_ripple_table1():
    d1, d2 = av.ripple_currents(P, VDC, 0.78, TS)
    assert d1 == pytest.approx(34.125, rel=1e-9)
    assert d2 == pytest.approx(2.73, rel=1e-9)


def test_ripple_zero_duty():
    assert av.ripple_currents(P, VDC, 0.0, TS) == (0.0, 0.0)


def test_valley_table1():
    assert av.valley_current(P, VDC, 0.78, 0.1322, TS) == pytest.approx(-0.433387, abs=1e-6)


def test_valley_zero_duty():
    assert av.valley_current(P, VDC, 0.0, 1.0, TS) == 0.0


def test_valley_zero_on_inequality_boundary():
    D, D0 = 0.5, 0.2
    g = D / (1 - D - D0)
    p = CircuitParams(L1=10e-6, L2=10e-6 * g)
    assert av.valley_current(p, VDC, D, D0, TS) == pytest.approx(0.0, abs=1e-12)


# -- averaged currents ------------------------------------------------------

def test_idc_rated_peak():
    # close to 2 Ipv with Ipv = 250 W / 35 V
    assert av.avg_dc_current(P, VDC, 0.777, TS) == pytest.approx(14.2631, abs=1e-4)


def test_idc_half_duty():
    assert av.avg_dc_current(P, VDC, 0.5, TS) == pytest.approx(5.90625, abs=1e-9)


def test_idc_half_duty_valley_route():
    D = 0.5
    D0 = av.solve_D0(D, VDC, 100.0)
    d1, _ = av.ripple_currents(P, VDC, D, TS)
    route2 = av.valley_current(P, VDC, D, D0, TS) + 0.5 * d1 * (1 - D0)
    assert route2 == pytest.approx(av.avg_dc_current(P, VDC, D, TS), abs=1e-9)


def test_idc_zero_duty():
    assert av.avg_dc_current(P, VDC, 0.0, TS) == 0.0


def test_i2_table1():
    # 0.5 (1 - D - D0)(dIL1 + dIL2); power balance 14.374 A * 35 / 311 gives the same
    i2 = av.avg_output_current(P, VDC, 0.78, 0.1322, TS)
    assert i2 == pytest.approx(1.61793, abs=1e-5)
    balance = av.avg_dc_current(P, VDC, 0.78, TS) * VDC / 311.0
    assert i2 == pytest.approx(balance, rel=5e-3)


def test_i2_cuk_route_matches():
    D, D0 = 0.78, 0.1322
    _, d2 = av.ripple_currents(P, VDC, D, TS)
    cuk = -av.valley_current(P, VDC, D, D0, TS) + 0.5 * d2 * (1 - D0)
    assert cuk == pytest.approx(av.avg_output_current(P, VDC, D, D0, TS, HalfCycle.CUK), abs=1e-9)


def test_i2_zero_duty():
    assert av.avg_output_current(P, VDC, 0.0, 1.0, TS) == 0.0


# -- duty law ---------------------------------------------------------------

def test_d_peak_rated():
    assert av.d_peak(7.13, P, VDC, TS) == pytest.approx(0.776916, abs=1e-6)


def test_duty_law_zero_crossing():
    assert av.duty_law(7.13, P, VDC, 0.0, TS) == 0.0


@pytest.mark.parametrize("wt", [0.1, 1.0, 2.5, 4.0])
def test_duty_law_zero_power(wt):
    assert av.duty_law(0.0, P, VDC, wt, TS) == 0.0


def test_duty_law_overflow():
    with pytest.raises(DutyOverflow) as ei:
        av.duty_law(20.0, P, VDC, math.pi / 2, TS)
    assert ei.value.d_peak > 1


def test_d_peak_rejects_negative_current():
    with pytest.raises(ConfigError):
        av.d_peak(-1.0, P, VDC, TS)


# -- DCM inequality ---------------------------------------------------------

def test_margin_table1():
    assert av.dcm_inequality_margin(P, 0.78, 0.1322) == pytest.approx(-3.61617, abs=1e-5)


def test_margin_equal_inductors_boundary():
    p = CircuitParams(L1=10e-6, L2=10e-6)
    assert av.dcm_inequality_margin(p, 0.5, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_margin_zero_duty_limit():
    assert av.dcm_inequality_margin(P, 1e-9, 1 - 2e-9) == pytest.approx(1 - 12.5, abs=1e-6)


# -- composed solution ------------------------------------------------------

def test_steady_state_at_line_peak():
    s = av.steady_state_at_angle(P, OperatingPoint(), math.pi / 2)
    s.check()
    assert s.D == pytest.approx(0.776916, abs=1e-6)
    assert s.D0 == pytest.approx(0.135686, abs=1e-6)
    assert s.IL1v == pytest.approx(-0.429045, abs=1e-6)
    assert s.Idc_avg == pytest.approx(14.26, abs=1e-2)
    assert s.VC1_avg == VDC


def test_steady_state_zero_crossing():
    s = av.steady_state_at_angle(P, OperatingPoint(), 0.0)
    assert s.D == 0.0 and s.Idc_avg == 0.0 and s.I2_avg == 0.0 and s.IL1p == 0.0


def test_steady_state_thirty_degrees():
    s = av.steady_state_at_angle(P, OperatingPoint(), math.pi / 6)
    assert s.vo_abs == pytest.approx(155.563, abs=1e-3)
    assert s.D == pytest.approx(0.388458, abs=1e-6)
    assert s.D0 == pytest.approx(0.524144, abs=1e-6)


def test_steady_state_cuk_half():
    s = av.steady_state_at_angle(P, OperatingPoint(), 3 * math.pi / 2)
    assert s.half is HalfCycle.CUK
    assert s.VC1_avg == pytest.approx(VDC + s.vo_abs)


# -- identities over random valid inputs ------------------------------------

def _draw(L1, L2, vdc, vo, fs, frac):
    p = CircuitParams(L1=L1, L2=L2)
    D = frac * av.ccm_boundary_duty(vdc, vo)
    assume(D > 1e-4)
    return p, D, av.solve_D0(D, vdc, vo), 1.0 / fs


_inputs = dict(L1=st.floats(1e-6, 100e-6), L2=st.floats(1e-6, 1e-3), vdc=st.floats(10, 60),
               vo=st.floats(1, 400), fs=st.floats(20e3, 200e3), frac=st.floats(0.01, 0.99))


@given(**_inputs)
@settings(max_examples=1000, deadline=None)
def test_idc_two_routes(L1, L2, vdc, vo, fs, frac):
    p, D, D0, Ts = _draw(L1, L2, vdc, vo, fs, frac)
    d1, _ = av.ripple_currents(p, vdc, D, Ts)
    route2 = av.valley_current(p, vdc, D, D0, Ts) + 0.5 * d1 * (1 - D0)
    assert route2 == pytest.approx(av.avg_dc_current(p, vdc, D, Ts), abs=1e-9, rel=1e-12)


@given(**_inputs)
@settings(max_examples=1000, deadline=None)
def test_i2_two_routes(L1, L2, vdc, vo, fs, frac):
    p, D, D0, Ts = _draw(L1, L2, vdc, vo, fs, frac)
    _, d2 = av.ripple_currents(p, vdc, D, Ts)
    cuk = -av.valley_current(p, vdc, D, D0, Ts) + 0.5 * d2 * (1 - D0)
    assert cuk == pytest.approx(av.avg_output_current(p, vdc, D, D0, Ts), abs=1e-9, rel=1e-12)


@given(**_inputs)
@settings(max_examples=1000, deadline=None)
def test_lossless_power_balance(L1, L2, vdc, vo, fs, frac):
    p, D, D0, Ts = _draw(L1, L2, vdc, vo, fs, frac)
    p_in = vdc * av.avg_dc_current(p, vdc, D, Ts)
    p_out = vo * av.avg_output_current(p, vdc, D, D0, Ts)
    assert p_out == pytest.approx(p_in, rel=1e-9, abs=1e-9)


@given(st.floats(0.0, 12.0), st.floats(0.0, 2 * math.pi))
@settings(max_examples=300)
def test_duty_law_bounded_by_peak(ipv, wt):
    dp = av.d_peak(ipv, P, VDC, TS)
    assume(dp < 1)
    d = av.duty_law(ipv, P, VDC, wt, TS)
    assert 0.0 <= d <= dp


@given(st.floats(0.05, 3.0))
@settings(max_examples=200)
def test_duty_law_draws_twice_ipv_sin2(theta):
    # the rectified-sine duty makes the source current 2 Ipv sin^2
    ipv = 7.13
    D = av.duty_law(ipv, P, VDC, theta, TS)
    assert av.avg_dc_current(P, VDC, D, TS) == pytest.approx(2 * ipv * math.sin(theta) ** 2,
                                                             rel=1e-9, abs=1e-12)
