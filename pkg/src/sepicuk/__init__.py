"""Single-switch SEPIC-Cuk grid-tied micro-inverter: closed-form DCM model,
switched-circuit simulator, closed-loop control, sizing and analysis."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CcmViolation,
    ConfigError,
    DegenerateDuty,
    DutyOverflow,
    EnergyMismatch,
    InconsistentMode,
    NumericalDivergence,
    RangeError,
    SepicukError,
    WindowError,
)
from .model_types import (  # noqa: E402
    CircuitParams,
    ConverterState,
    GridSource,
    HalfCycle,
    ModeId,
    OperatingPoint,
    PeriodStats,
    Resistive,
    SteadyStateSolution,
    SwitchParams,
    WaveformRecord,
    leq,
)
from .averaged import (  # noqa: E402
    avg_dc_current,
    avg_output_current,
    ccm_boundary_duty,
    d_peak,
    dcm_inequality_margin,
    duty_law,
    ripple_currents,
    solve_D0,
    steady_state_at_angle,
    valley_current,
    voltage_gain,
)
from .control import (  # noqa: E402
    ControllerHandle,
    CurrentReference,
    FixedDuty,
    OpenLoop,
    PiState,
    VoltageRegulation,
    duty_command,
    half_cycle_select,
    make_controller,
    measure_rms,
    pi_step,
)
from .switched import (  # noqa: E402
    GateSchedule,
    RunDiagnostics,
    SimConfig,
    detect_mode_transition,
    mode_dynamics,
    run_simulation,
    unfold,
)
from .design import (  # noqa: E402
    DesignReport,
    cutoff_frequency,
    size_C1,
    size_C2,
    size_L1,
    size_L2,
    verify_design,
)
from .analysis import (  # noqa: E402
    LossBreakdown,
    analysis_report,
    dcm_occupancy,
    efficiency,
    per_period_average,
    thd,
)
