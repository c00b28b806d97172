import math

import pytest

from sepicuk import (
    CircuitParams,
    ConverterState,
    FixedDuty,
    GridSource,
    HalfCycle,
    OperatingPoint,
    Resistive,
    SimConfig,
    VoltageRegulation,
    averaged,
    make_controller,
    run_simulation,
)


@pytest.fixture(scope="session")
def table1_params():
    return CircuitParams()


@pytest.fixture(scope="session")
def rated_op():
    return OperatingPoint()


@pytest.fixture(scope="session")
def rated_run(table1_params, rated_op):
    """Closed-loop 220 V rms on 194 ohm, 0.1 s; shared by several modules."""
    ctrl = make_controller(VoltageRegulation(220.0))
    return run_simulation(table1_params, rated_op, ctrl, SimConfig(t_end=0.1))


@pytest.fixture(scope="session")
def rated_window(rated_run):
    return rated_run[0].last_cycles(2)


@pytest.fixture(scope="session")
def light_load_op():
    # 73 W at 220 V rms: Ro = 220^2 / 73
    return OperatingPoint(load=Resistive(663.0), Ipv=73.0 / 35.0)


@pytest.fixture(scope="session")
def light_load_run(table1_params, light_load_op):
    ctrl = make_controller(VoltageRegulation(220.0))
    return run_simulation(table1_params, light_load_op, ctrl, SimConfig(t_end=0.2))


def clamped_run(params, D, half=HalfCycle.SEPIC, vo=311.13, Vdc=35.0, t_end=0.02):
    """Fixed duty against a stiff dc output of magnitude ``vo``.

    The grid source is frozen (fg = 0) at its crest; the state starts at the
    closed-form operating point so the undamped Lg-C2 pair barely rings.
    """
    phase = math.pi / 2 if half is HalfCycle.SEPIC else -math.pi / 2
    op = OperatingPoint(Vdc=Vdc, Vo_rms=vo / math.sqrt(2), fg=0.0,
                        load=GridSource(vo / math.sqrt(2), phase=phase))
    D0 = averaged.solve_D0(D, Vdc, vo)
    iv = averaged.valley_current(params, Vdc, D, D0, op.Ts)
    x0 = ConverterState(iL1=iv, iL2=-iv, vC1=Vdc + (vo if half is HalfCycle.CUK else 0.0),
                        vC2=vo, iLg=averaged.avg_output_current(params, Vdc, D, D0, op.Ts),
                        half_cycle=half)
    ctrl = make_controller(FixedDuty(D, half), fg=0.0)
    return run_simulation(params, op, ctrl, SimConfig(t_end=t_end), x0=x0)
