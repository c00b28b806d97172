"""Command-line front end.

Exit codes: 0 success, 1 domain failure (design criterion violated, DCM
solution missing, power balance broken), 2 usage or config error,
3 numerical failure (diverged simulation).
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, analysis, averaged, config, design
from .control import CurrentReference, make_controller
from .errors import (
    CcmViolation,
    ConfigError,
    DutyOverflow,
    NumericalDivergence,
    SepicukError,
    WindowError,
)
from .model_types import GridSource, Resistive, WaveformRecord
from .switched import run_simulation

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

SWEEP_PARAMS = ("Ipv", "Ro", "L1", "L2", "fs", "Vdc")
_SWEEP_KEYS = {"Ipv": "Ipv_A", "Ro": "Ro_ohm", "L1": "L1_H", "L2": "L2_H", "fs": "fs_Hz",
               "Vdc": "Vdc_V"}

SUMMARY_KEYS = ("vo_rms", "vo_peak", "thd_pct", "io_rms", "p_in", "p_out", "eta",
                "dcm_occupancy", "d_peak_measured", "loss_switching_turnoff")


class UsageError(Exception):
    pass


def _stamp(what: str) -> str:
    now = _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return f"# sepicuk {__version__} {what} generated {now}\n"


def _write(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# -- design -----------------------------------------------------------------

def cmd_design(args) -> int:
    sc = config.load(args.config)
    rep = design.verify_design(sc.params, sc.op, sc.c1_ripple_ratio, sc.l2_ripple_ratio)
    _write(args.out, _stamp("design") + rep.to_text())
    if args.kv:
        _write(args.kv, _stamp("design") + rep.to_kv())
    if not rep.passed:
        print("failed criteria: " + ", ".join(rep.failures()), file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


# -- steady -----------------------------------------------------------------

STEADY_COLUMNS = ("angle_deg", "half", "D", "D0", "dIL1", "dIL2", "IL1v", "IL1p", "IL2v",
                  "IL2p", "Idc_avg", "I2_avg", "VC1_avg", "vo_abs", "status")


def steady_table(sc: config.Scenario, n: int) -> list:
    """One row per angle over a full line cycle; CCM angles are flagged."""
    rows = []
    dp = averaged.d_peak(sc.op.Ipv, sc.params, sc.op.Vdc, sc.op.Ts)
    for k in range(n):
        deg = 360.0 * k / (n - 1)
        th = math.radians(deg)
        try:
            s = averaged.steady_state_at_angle(sc.params, sc.op, th)
            vals = [s.D, s.D0, s.dIL1, s.dIL2, s.IL1v, s.IL1p, s.IL2v, s.IL2p, s.Idc_avg,
                    s.I2_avg, s.VC1_avg, s.vo_abs]
            half, status = s.half.name.lower(), "ok"
        except (CcmViolation, DutyOverflow) as exc:
            half = "sepic" if math.sin(th) >= 0 else "cuk"
            status = "ccm" if isinstance(exc, CcmViolation) else "duty_overflow"
            D0 = getattr(exc, "D0", None)
            vals = ([dp * abs(math.sin(th)), float("nan") if D0 is None else D0]
                    + [float("nan")] * 9 + [sc.op.V_om * abs(math.sin(th))])
        rows.append([deg, half] + vals + [status])
    return rows


def cmd_steady(args) -> int:
    if args.angles < 3:
        raise UsageError("--angles must be at least 3")
    sc = config.load(args.config)
    rows = steady_table(sc, args.angles)
    buf = io.StringIO()
    buf.write(_stamp("steady"))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STEADY_COLUMNS)
    for r in rows:
        w.writerow([f"{v:.10g}" if isinstance(v, float) else v for v in r])
    _write(args.out, buf.getvalue())
    n_ccm = sum(r[-1] != "ok" for r in rows)
    if n_ccm:
        print(f"{n_ccm} angles without a DCM solution (flagged in status)", file=sys.stderr)
    return EXIT_OK


# -- simulate ---------------------------------------------------------------

def simulate_scenario(sc: config.Scenario):
    ctrl = make_controller(sc.control, sc.kp, sc.ki, sc.op.fg)
    record, diag = run_simulation(sc.params, sc.op, ctrl, sc.sim)
    cycles = min(2, int(sc.sim.t_end * sc.op.fg + 1e-9))
    if cycles < 1:
        raise WindowError("run shorter than one line cycle, nothing to analyse")
    rep = analysis.analysis_report(record, sc.params, sc.op, cycles)
    rep["ccm_periods"] = diag.ccm_periods
    rep["ccm_periods_steady"] = diag.ccm_periods_steady
    rep["energy_residual_rel"] = diag.energy_residual_rel
    for k, v in diag.counters.items():
        rep[k] = v
    return record, diag, rep


def cmd_simulate(args) -> int:
    sc = config.load(args.config)
    if args.t_end is not None:
        if not args.t_end > 0:
            raise UsageError("--t-end must be positive")
        sc = replace(sc, sim=replace(sc.sim, t_end=args.t_end))
    if args.integrator:
        sc = replace(sc, sim=replace(sc.sim, integrator=args.integrator))
    record, diag, rep = simulate_scenario(sc)
    out = Path(args.out)
    record.to_csv(out)
    report = args.report or out.with_suffix(".report.txt")
    text = analysis.format_report(rep)
    _write(report, _stamp("simulate") + text)
    sys.stdout.write(text)
    return EXIT_OK


# -- sweep ------------------------------------------------------------------

def sweep_scenario(sc: config.Scenario, name: str, value: float) -> config.Scenario:
    """Scenario with one whitelisted quantity set to ``value``.

    Sweeping Ipv changes the delivered power: a resistive load is rescaled
    to the matched value Vo_rms^2 / (Vdc Ipv) and a current reference to
    Vdc Ipv / Vo_rms.
    """
    if name not in SWEEP_PARAMS:
        raise UsageError(f"--param must be one of {', '.join(SWEEP_PARAMS)}")
    sc = config.with_value(sc, _SWEEP_KEYS[name], value)
    if name == "Ipv":
        op = sc.op
        if isinstance(op.load, Resistive):
            sc = replace(sc, op=replace(op, load=Resistive(op.Vo_rms ** 2 / (op.Vdc * value))))
        if isinstance(sc.control, CurrentReference):
            sc = replace(sc, control=CurrentReference(op.Vdc * value / op.Vo_rms))
    elif name == "Ro" and isinstance(sc.op.load, GridSource):
        raise UsageError("Ro sweep needs load = resistive")
    return sc


def _sweep_row(job):
    sc, name, value = job
    row = {"param": name, "value": value}
    try:
        sc = sweep_scenario(sc, name, value)
        _, diag, rep = simulate_scenario(sc)
        row.update({k: rep[k] for k in SUMMARY_KEYS})
        row["ccm_periods_steady"] = diag.ccm_periods_steady
        row["status"] = "ok"
    except SepicukError as exc:
        row["status"] = type(exc).__name__
    except Exception as exc:  # keep the sweep going; the row records the failure
        row["status"] = f"error:{type(exc).__name__}"
    return row


def sweep_values(lo: float, hi: float, steps: int) -> np.ndarray:
    if steps < 1 or lo > hi or (lo == hi and steps > 1):
        raise UsageError("empty sweep range")
    return np.linspace(lo, hi, steps)


def cmd_sweep(args) -> int:
    if args.param not in SWEEP_PARAMS:
        raise UsageError(f"--param must be one of {', '.join(SWEEP_PARAMS)}")
    values = sweep_values(args.range[0], args.range[1], args.steps)
    sc = config.load(args.config)
    if args.t_end is not None:
        if not args.t_end > 0:
            raise UsageError("--t-end must be positive")
        sc = replace(sc, sim=replace(sc.sim, t_end=args.t_end))
    sweep_scenario(sc, args.param, float(values[0]))  # validate before fanning out
    jobs = [(sc, args.param, float(v)) for v in values]
    if args.jobs == 1 or len(jobs) == 1:
        rows = [_sweep_row(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_sweep_row, jobs))  # map keeps sweep order
    cols = ["param", "value", "status", *SUMMARY_KEYS, "ccm_periods_steady"]
    buf = io.StringIO()
    buf.write(_stamp("sweep"))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([f"{r[c]:.10g}" if isinstance(r.get(c), float) else r.get(c, "")
                    for c in cols])
    _write(args.out, buf.getvalue())
    return EXIT_OK


# -- analyze ----------------------------------------------------------------

def read_waveform_csv(path):
    """Columns of a waveform CSV as float arrays (half as 0 sepic / 1 cuk)."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from None
    if not rows or rows[0] != list(WaveformRecord.CSV_COLUMNS):
        raise ConfigError(f"{path}: not a waveform CSV")
    body = rows[1:]
    cols = {}
    for j, name in enumerate(rows[0]):
        if name == "half":
            cols[name] = np.array([0 if r[j] == "sepic" else 1 for r in body])
        else:
            cols[name] = np.array([float(r[j]) for r in body])
    return cols


def analyze_samples(cols: dict, fg: float, fs: float, Vdc: float, cycles: int = 2) -> dict:
    """Sample-based report for a waveform that has no per-period integrals."""
    t = cols["t"]
    if t.size < 2:
        raise WindowError("waveform has fewer than two samples")
    dt = float(np.median(np.diff(t)))
    n = int(round(cycles / (fg * dt)))
    if n > t.size:
        raise WindowError(f"waveform shorter than {cycles} line cycles")
    sl = slice(t.size - n, None)
    vo, io_, idc = cols["vo"][sl], cols["io"][sl], cols["idc"][sl]
    k = np.floor((t[sl] - t[sl][0]) * fs + 1e-6).astype(int)
    has3 = np.zeros(k.max() + 1, bool)
    zero = np.zeros(k.max() + 1, bool)
    np.logical_or.at(has3, k, cols["mode"][sl] == 3)
    np.logical_or.at(zero, k, cols["duty"][sl] <= 0)
    p_in = float(np.mean(Vdc * idc))
    p_out = float(np.mean(vo * io_))
    return {
        "thd_pct": analysis.thd(vo, dt, fg),
        "vo_rms": float(np.sqrt(np.mean(vo ** 2))),
        "vo_peak": analysis.fundamental_peak(vo, dt, fg),
        "io_rms": float(np.sqrt(np.mean(io_ ** 2))),
        "d_peak_measured": float(cols["duty"][sl].max()),
        "dcm_occupancy": float(np.mean(has3 | zero)),
        "eta_conduction": p_out / p_in if p_in > 0 else 0.0,
    }


def cmd_analyze(args) -> int:
    sc = config.load(args.config) if args.config else config.table1()
    cols = read_waveform_csv(args.waveform)
    rep = analyze_samples(cols, sc.op.fg, sc.op.fs, sc.op.Vdc, args.cycles)
    text = analysis.format_report(rep)
    if args.out:
        _write(args.out, _stamp("analyze") + text)
    sys.stdout.write(text)
    return EXIT_OK


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sepicuk", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="check a parts set against the sizing rules")
    p.add_argument("config")
    p.add_argument("--out", help="text report (default: stdout)")
    p.add_argument("--kv", help="also write a key-value report here")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("steady", help="closed-form DCM solution across the line cycle")
    p.add_argument("config")
    p.add_argument("--angles", type=int, default=181, help="angles over 0..360 deg (>= 3)")
    p.add_argument("--out", help="CSV output (default: stdout)")
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("simulate", help="switched simulation plus analysis report")
    p.add_argument("config")
    p.add_argument("--t-end", type=float, help="override the simulated duration (s)")
    p.add_argument("--integrator", choices=("rk4", "trapezoidal"))
    p.add_argument("--out", required=True, help="waveform CSV")
    p.add_argument("--report", help="report path (default: <out>.report.txt)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="summary metrics over one swept quantity")
    p.add_argument("config")
    p.add_argument("--param", required=True, help="one of " + ", ".join(SWEEP_PARAMS))
    p.add_argument("--range", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--t-end", type=float)
    p.add_argument("--jobs", type=int, default=None, help="worker processes")
    p.add_argument("--out", help="CSV output (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="report for an existing waveform CSV")
    p.add_argument("waveform")
    p.add_argument("--config", help="scenario for fg, fs and Vdc (default: bundled table1)")
    p.add_argument("--cycles", type=int, default=2)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalDivergence as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SepicukError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
