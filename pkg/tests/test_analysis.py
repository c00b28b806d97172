import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sepicuk import (
    CircuitParams,
    ConverterState,
    CurrentReference,
    EnergyMismatch,
    FixedDuty,
    GridSource,
    OperatingPoint,
    SimConfig,
    VoltageRegulation,
    WindowError,
    analysis_report,
    averaged,
    dcm_occupancy,
    efficiency,
    make_controller,
    per_period_average,
    run_simulation,
    thd,
)
from sepicuk.analysis import (
    format_report,
    fundamental_peak,
    harmonic_amplitudes,
    phase_difference,
)

FG = 50.0
N = 2000
DT = 0.02 / N
W = 2 * np.pi * FG * np.arange(N) * DT


# -- spectra ----------------------------------------------------------------

def test_thd_pure_sine():
    assert thd(311 * np.sin(W), DT, FG) == pytest.approx(0.0, abs=0.01)


def test_thd_single_harmonic():
    x = 311 * np.sin(W) + 3.11 * np.sin(3 * W)
    assert thd(x, DT, FG) == pytest.approx(1.0, abs=0.02)


@given(st.lists(st.floats(0.0, 0.2), min_size=1, max_size=10))
@settings(max_examples=200)
def test_thd_matches_parseval(amps):
    x = np.sin(W)
    for h, a in enumerate(amps, start=2):
        x = x + a * np.cos(h * W + 0.3 * h)
    expected = 100 * math.sqrt(sum(a * a for a in amps))
    assert thd(x, DT, FG) == pytest.approx(expected, abs=1e-9)


def test_fundamental_peak_and_dc():
    a = harmonic_amplitudes(2.0 + 311 * np.sin(W), DT, FG)
    assert abs(a[1]) == pytest.approx(311.0, rel=1e-12)
    assert a[0].real == pytest.approx(2.0, rel=1e-12)
    assert fundamental_peak(311 * np.sin(W), DT, FG) == pytest.approx(311.0)


def test_phase_difference():
    assert phase_difference(np.sin(W - 0.1), np.sin(W), DT, FG) == pytest.approx(-math.degrees(0.1))
    assert phase_difference(-np.sin(W), np.sin(W), DT, FG) == pytest.approx(180.0)


def test_window_must_hold_whole_cycles():
    with pytest.raises(WindowError):
        thd(np.sin(W[:1500]), DT, FG)


def test_window_must_be_sampled_finely():
    n = 100
    x = np.sin(2 * np.pi * np.arange(n) / n)
    with pytest.raises(WindowError):
        thd(x, 0.02 / n, FG)


def test_zero_signal_has_no_thd():
    with pytest.raises(WindowError):
        thd(np.zeros(N), DT, FG)


# -- per-period averages ----------------------------------------------------

def test_per_period_average_constant(rated_window):
    idx, avg = per_period_average(rated_window, lambda r: np.full(len(r), 3.5))
    assert idx.size > 3000
    np.testing.assert_allclose(avg, 3.5, rtol=1e-9)


def test_per_period_average_matches_exact_integrals(rated_window):
    w = rated_window
    idx, avg = per_period_average(w, "iL1")
    exact = w.periods.mean("iL1")[idx]
    # the samples are decimated, so allow a small sampling error
    assert np.max(np.abs(avg - exact)) < 0.02 * np.max(np.abs(exact))


def test_source_current_at_line_peak(rated_window, table1_params):
    w = rated_window
    idx, idc = per_period_average(w, "idc")
    k = np.argmax(w.periods.duty[idx])
    D = w.periods.duty[idx][k]
    assert idc[k] == pytest.approx(averaged.avg_dc_current(table1_params, 35.0, D, 1e-5), rel=0.03)


# -- DCM occupancy ----------------------------------------------------------

def test_occupancy_rated(rated_window):
    assert dcm_occupancy(rated_window) >= 0.99


def test_occupancy_oversized_l1():
    p = replace(CircuitParams(), L1=50e-6)
    rec, _ = run_simulation(p, OperatingPoint(), make_controller(VoltageRegulation(220.0)),
                            SimConfig(t_end=0.06))
    assert dcm_occupancy(rec.last_cycles(2)) < 1.0


def test_occupancy_zero_duty():
    rec, _ = run_simulation(CircuitParams(), OperatingPoint(), make_controller(FixedDuty(0.0)),
                            SimConfig(t_end=0.005))
    assert dcm_occupancy(rec) == 1.0


# -- efficiency -------------------------------------------------------------

def test_lossless_efficiency():
    p = CircuitParams().ideal()
    rec, _ = run_simulation(p, OperatingPoint(), make_controller(VoltageRegulation(220.0)),
                            SimConfig(t_end=0.06))
    eta, losses = efficiency(rec.last_cycles(2), p)
    assert eta == pytest.approx(1.0, abs=1e-4)
    assert losses.total == pytest.approx(0.0, abs=0.05)


def test_efficiency_drops_with_series_loss():
    etas = []
    for rl2 in (0.6, 1.2):
        p = replace(CircuitParams(), rL2=rl2)
        rec, _ = run_simulation(p, OperatingPoint(), make_controller(VoltageRegulation(220.0)),
                                SimConfig(t_end=0.06))
        etas.append(efficiency(rec.last_cycles(2), p)[0])
    assert etas[1] < etas[0]


def test_turn_on_loss_negligible_in_dcm(rated_window, table1_params):
    _, losses = efficiency(rated_window, table1_params)
    assert losses.switching_turnon < 0.01 * losses.total
    assert losses.switching_turnoff > 0


def test_loss_breakdown_sums(rated_window, table1_params):
    eta, losses = efficiency(rated_window, table1_params)
    d = losses.as_dict()
    parts = sum(v for k, v in d.items() if k != "total")
    assert d["total"] == pytest.approx(parts)
    assert losses.conduction < losses.total
    assert 0 < eta < 1


def test_tampered_balance_is_caught(rated_window, table1_params):
    w = rated_window
    bad = replace(w, periods=replace(w.periods, e_in=1.1 * w.periods.e_in))
    with pytest.raises(EnergyMismatch):
        efficiency(bad, table1_params)


def test_empty_window_rejected(rated_run, table1_params):
    record, _ = rated_run
    with pytest.raises(WindowError):
        efficiency(record.window(1.0), table1_params)


# -- reports ----------------------------------------------------------------

def test_report_rated(rated_run, table1_params, rated_op):
    rep = analysis_report(rated_run[0], table1_params, rated_op)
    assert rep["vo_peak"] == pytest.approx(311.0, rel=0.05)
    assert rep["thd_pct"] <= 2.5
    assert rep["vo_rms"] == pytest.approx(220.0, abs=1.0)
    assert rep["p_out"] == pytest.approx(rep["vo_rms"] * rep["io_rms"], rel=1e-2)
    assert "io_phase_deg" not in rep
    text = format_report(rep, header="rated")
    assert text.startswith("# rated\n") and "thd_pct = " in text


def test_report_grid_phase():
    p = CircuitParams()
    op = OperatingPoint(load=GridSource(220.0))
    x0 = ConverterState(vC1=35.0)
    rec, _ = run_simulation(p, op, make_controller(CurrentReference(1.1)), SimConfig(t_end=0.1),
                            x0=x0)
    rep = analysis_report(rec, p, op)
    # the current injected ahead of C2 is in phase with the grid voltage
    assert abs(rep["i2_phase_deg"]) <= 2.0
    # the grid current also carries C2's small leading current
    assert abs(rep["io_phase_deg"]) <= 5.0
