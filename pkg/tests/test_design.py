import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sepicuk import (
    CircuitParams,
    ConfigError,
    OperatingPoint,
    RangeError,
    averaged,
    cutoff_frequency,
    size_C1,
    size_C2,
    size_L1,
    size_L2,
    verify_design,
)
from sepicuk.design import C1_RIPPLE_RATIO, L2_RIPPLE_RATIO, valley_margin_profile

OP = OperatingPoint()
P = CircuitParams()


def test_size_l1_table1():
    l1_max, d_b = size_L1(OP)
    assert l1_max == pytest.approx(11.0311e-6, rel=1e-4)
    assert d_b == pytest.approx(0.898881, abs=1e-6)
    assert P.L1 <= l1_max


def test_size_l1_inverse_in_current():
    a, _ = size_L1(OP)
    b, _ = size_L1(replace(OP, Ipv=2 * OP.Ipv))
    assert b == pytest.approx(a / 2, rel=1e-12)


def test_size_l1_needs_current():
    with pytest.raises(ConfigError):
        size_L1(replace(OP, Ipv=0.0))


def test_size_c1_reproduces_table1_part():
    assert size_C1(OP, 8e-6, C1_RIPPLE_RATIO, 0.899) == pytest.approx(0.47e-6, rel=0.01)


def test_size_c1_inverse_in_ripple():
    a = size_C1(OP, 8e-6, 1.0)
    assert size_C1(OP, 8e-6, 0.5) == pytest.approx(2 * a, rel=1e-12)


def test_size_c1_zero_duty():
    assert size_C1(OP, 8e-6, 1.0, D=0.0) == 0.0


def test_size_c1_rejects_bad_ratio():
    with pytest.raises(ConfigError):
        size_C1(OP, 8e-6, 0.0)


def test_size_l2_reproduces_table1_part():
    assert size_L2(OP, 0.78, L2_RIPPLE_RATIO, Io=1.136) == pytest.approx(100e-6, rel=0.01)


def test_size_l2_limits():
    assert size_L2(OP, 0.78, 1e12, Io=1.136) < 1e-15
    assert size_L2(OP, 0.0, 2.4, Io=1.136) == 0.0


def test_cutoff_table1():
    fc = cutoff_frequency(100e-6, 0.47e-6)
    assert fc == pytest.approx(23215.1, abs=0.5)
    assert 500.0 < fc < 25e3


def test_size_c2_round_trip_and_scaling():
    c = size_C2(100e-6, 10e3)
    assert cutoff_frequency(100e-6, c) == pytest.approx(10e3, rel=1e-12)
    assert size_C2(100e-6, 20e3) == pytest.approx(c / 4, rel=1e-12)


def test_size_c2_rejects_line_frequency_corner():
    with pytest.raises(RangeError):
        size_C2(100e-6, 50.0)
    with pytest.raises(RangeError):
        size_C2(100e-6, 40e3)


def test_verify_table1_passes():
    rep = verify_design(P, OP)
    assert rep.passed, rep.to_text()
    assert rep["fc_above_line"].value == pytest.approx(23215.1, abs=0.5)


def test_verify_flags_oversized_l1():
    rep = verify_design(replace(P, L1=20e-6), OP)
    assert not rep.passed
    assert "L1_dcm_bound" in rep.failures()
    assert rep["L1_dcm_bound"].margin < 0


def test_verify_flags_small_l2():
    rep = verify_design(replace(P, L2=5e-6), OP)
    assert "valley_negative" in rep.failures()


def test_report_formats():
    rep = verify_design(P, OP)
    text = rep.to_text()
    assert "overall: PASS" in text and "L1_dcm_bound" in text
    kv = rep.to_kv()
    assert "all_passed = true" in kv
    assert "L1_dcm_bound.limit = 1.103" in kv
    with pytest.raises(KeyError):
        rep["nope"]


def test_valley_margin_negative_over_line():
    th, m = valley_margin_profile(P, OP)
    assert math.isnan(m[0]) and math.isnan(m[-1])
    assert np.all(m[1:-1] < 0)
    # worst case at the crest
    assert np.nanargmax(m) == len(th) // 2


@given(st.floats(0.5, 10.0), st.floats(20.0, 60.0))
@settings(max_examples=200)
def test_l1_bound_scaling_identity(ipv, vdc):
    # with L2 >> L1 = L1_max, the squared closed-form peak duty equals the boundary duty
    op = OperatingPoint(Vdc=vdc, Ipv=ipv)
    l1_max, d_b = size_L1(op)
    p = CircuitParams(L1=l1_max, L2=1e9 * l1_max)
    assert averaged.d_peak(ipv, p, vdc, op.Ts) ** 2 == pytest.approx(d_b, rel=1e-6)
