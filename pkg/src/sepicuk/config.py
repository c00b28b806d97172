"""Scenario files: flat ``key = value`` text with ``#`` comments.

Keys carry their unit as a suffix (``L1_H``, ``Vo_rms_V``). Unknown or
repeated keys are errors so that typos never fall back to defaults
silently.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .control import (
    ControlMode,
    CurrentReference,
    FixedDuty,
    OpenLoop,
    VoltageRegulation,
)
from .design import C1_RIPPLE_RATIO, L2_RIPPLE_RATIO
from .errors import ConfigError
from .model_types import CircuitParams, GridSource, OperatingPoint, Resistive, SwitchParams
from .switched import SimConfig

_FLOAT_KEYS = {
    # circuit
    "L1_H", "L2_H", "C1_F", "C2_F", "Lg_H", "rL1_ohm", "rL2_ohm", "rC1_ohm", "rC2_ohm",
    "diode_vf_V", "s1_ron_ohm", "unfold_ron_ohm", "t_fall_s", "t_rise_s",
    # operating point
    "Vdc_V", "Vo_rms_V", "fg_Hz", "fs_Hz", "Ipv_A", "Ro_ohm", "grid_phase_rad",
    # control
    "Vorms_ref_V", "Iorms_ref_A", "kp", "ki", "kp_v", "ki_v", "d_peak", "duty",
    # simulation
    "t_end_s", "dt_max_s", "event_tol_A",
    # design
    "c1_ripple_ratio", "l2_ripple_ratio",
}
_INT_KEYS = {"record_decimation"}
_STR_KEYS = {"load", "control", "integrator", "name"}
KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS

LOADS = ("resistive", "grid")
CONTROLS = ("voltage", "current", "open_loop", "fixed_duty")


@dataclass(frozen=True)
class Scenario:
    params: CircuitParams = field(default_factory=CircuitParams)
    op: OperatingPoint = field(default_factory=OperatingPoint)
    control: ControlMode = field(default_factory=lambda: VoltageRegulation(220.0))
    kp: float = 0.5
    ki: float = 60.0
    sim: SimConfig = field(default_factory=SimConfig)
    c1_ripple_ratio: float = C1_RIPPLE_RATIO
    l2_ripple_ratio: float = L2_RIPPLE_RATIO
    name: str = ""


def parse_text(text: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                   delimiters=("=",))
    cp.optionxform = str
    try:
        cp.read_string("[scenario]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    raw = dict(cp["scenario"])
    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    out = {}
    for k, v in raw.items():
        try:
            if k in _FLOAT_KEYS:
                out[k] = float(v)
            elif k in _INT_KEYS:
                out[k] = int(v)
            else:
                out[k] = v.strip()
        except ValueError:
            raise ConfigError(f"{k}: cannot parse {v!r}") from None
    return out


def scenario_from_dict(d: dict) -> Scenario:
    base = CircuitParams()
    s1 = SwitchParams(d.get("s1_ron_ohm", base.s1.r_on), d.get("t_fall_s", base.s1.t_fall),
                      d.get("t_rise_s", base.s1.t_rise))
    unf = SwitchParams(d.get("unfold_ron_ohm", base.unfold.r_on),
                       d.get("t_fall_s", base.unfold.t_fall), d.get("t_rise_s", base.unfold.t_rise))
    params = replace(
        base,
        L1=d.get("L1_H", base.L1), L2=d.get("L2_H", base.L2),
        C1=d.get("C1_F", base.C1), C2=d.get("C2_F", base.C2), Lg=d.get("Lg_H", base.Lg),
        rL1=d.get("rL1_ohm", base.rL1), rL2=d.get("rL2_ohm", base.rL2),
        rC1=d.get("rC1_ohm", base.rC1), rC2=d.get("rC2_ohm", base.rC2),
        diode_vf=d.get("diode_vf_V", base.diode_vf), s1=s1, unfold=unf,
    )
    vo_rms = d.get("Vo_rms_V", 220.0)
    load_kind = d.get("load", "resistive").lower()
    if load_kind == "resistive":
        load = Resistive(d.get("Ro_ohm", 194.0))
    elif load_kind == "grid":
        load = GridSource(vo_rms, d.get("grid_phase_rad", 0.0), params.Lg)
    else:
        raise ConfigError(f"load must be one of {LOADS}, got {load_kind!r}")
    op = OperatingPoint(Vdc=d.get("Vdc_V", 35.0), Vo_rms=vo_rms, fg=d.get("fg_Hz", 50.0),
                        fs=d.get("fs_Hz", 100e3), load=load, Ipv=d.get("Ipv_A", 7.13))
    default_ctrl = "voltage" if load_kind == "resistive" else "current"
    kind = d.get("control", default_ctrl).lower()
    if kind == "voltage":
        vr = VoltageRegulation(d.get("Vorms_ref_V", vo_rms))
        control = replace(vr, kp_v=d.get("kp_v", vr.kp_v), ki_v=d.get("ki_v", vr.ki_v))
    elif kind == "current":
        control = CurrentReference(d.get("Iorms_ref_A", op.Vdc * op.Ipv / vo_rms))
    elif kind == "open_loop":
        if "d_peak" not in d:
            raise ConfigError("control = open_loop needs d_peak")
        control = OpenLoop(d["d_peak"])
    elif kind == "fixed_duty":
        if "duty" not in d:
            raise ConfigError("control = fixed_duty needs duty")
        control = FixedDuty(d["duty"])
    else:
        raise ConfigError(f"control must be one of {CONTROLS}, got {kind!r}")
    sim = SimConfig(t_end=d.get("t_end_s", 0.1), dt_max=d.get("dt_max_s"),
                    event_tol=d.get("event_tol_A", 1e-3),
                    record_decimation=d.get("record_decimation", 10),
                    integrator=d.get("integrator", "rk4"))
    return Scenario(params=params, op=op, control=control, kp=d.get("kp", 0.5),
                    ki=d.get("ki", 60.0), sim=sim,
                    c1_ripple_ratio=d.get("c1_ripple_ratio", C1_RIPPLE_RATIO),
                    l2_ripple_ratio=d.get("l2_ripple_ratio", L2_RIPPLE_RATIO),
                    name=d.get("name", ""))


def loads(text: str) -> Scenario:
    return scenario_from_dict(parse_text(text))


def load(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from None
    return loads(text)


def bundled_path(name: str = "table1.cfg") -> Path:
    return Path(str(resources.files("sepicuk") / "data" / name))


def table1() -> Scenario:
    return load(bundled_path())


def dumps(sc: Scenario) -> str:
    """Serialize a scenario back to config text (round-trips through loads)."""
    p, op = sc.params, sc.op
    lines = [f"name = {sc.name}"] if sc.name else []
    lines += [
        f"L1_H = {p.L1!r}", f"L2_H = {p.L2!r}", f"C1_F = {p.C1!r}", f"C2_F = {p.C2!r}",
        f"Lg_H = {p.Lg!r}", f"rL1_ohm = {p.rL1!r}", f"rL2_ohm = {p.rL2!r}",
        f"rC1_ohm = {p.rC1!r}", f"rC2_ohm = {p.rC2!r}", f"diode_vf_V = {p.diode_vf!r}",
        f"s1_ron_ohm = {p.s1.r_on!r}", f"unfold_ron_ohm = {p.unfold.r_on!r}",
        f"t_fall_s = {p.s1.t_fall!r}", f"t_rise_s = {p.s1.t_rise!r}",
        f"Vdc_V = {op.Vdc!r}", f"Vo_rms_V = {op.Vo_rms!r}", f"fg_Hz = {op.fg!r}",
        f"fs_Hz = {op.fs!r}", f"Ipv_A = {op.Ipv!r}",
    ]
    if isinstance(op.load, Resistive):
        lines += ["load = resistive", f"Ro_ohm = {op.load.Ro!r}"]
    else:
        lines += ["load = grid", f"grid_phase_rad = {op.load.phase!r}"]
    c = sc.control
    if isinstance(c, VoltageRegulation):
        lines += ["control = voltage", f"Vorms_ref_V = {c.Vorms_ref!r}",
                  f"kp_v = {c.kp_v!r}", f"ki_v = {c.ki_v!r}"]
    elif isinstance(c, CurrentReference):
        lines += ["control = current", f"Iorms_ref_A = {c.Iorms_ref!r}"]
    elif isinstance(c, OpenLoop):
        lines += ["control = open_loop", f"d_peak = {c.d_peak!r}"]
    else:
        lines += ["control = fixed_duty", f"duty = {c.duty!r}"]
    s = sc.sim
    lines += [f"kp = {sc.kp!r}", f"ki = {sc.ki!r}", f"t_end_s = {s.t_end!r}",
              f"event_tol_A = {s.event_tol!r}", f"record_decimation = {s.record_decimation}",
              f"integrator = {s.integrator}",
              f"c1_ripple_ratio = {sc.c1_ripple_ratio!r}",
              f"l2_ripple_ratio = {sc.l2_ripple_ratio!r}"]
    if s.dt_max is not None:
        lines.append(f"dt_max_s = {s.dt_max!r}")
    return "\n".join(lines) + "\n"


def with_value(sc: Scenario, key: str, value: float) -> Scenario:
    """Copy of ``sc`` with one config key overridden (used by sweeps)."""
    d = parse_text(dumps(sc))
    d[key] = value
    return scenario_from_dict(d)
