"""Batch command-line front end.

Reads JSON parameter files, writes CSV/JSON artifacts.  Exit codes:
0 success (including DCM or infeasible-design results), 1 I/O error,
2 validation error, 3 numerical failure.  Identical inputs produce
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from . import analytics
from . import comparison
from . import design
from . import simulator
from .model import ParameterError, validate_params

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

UNITS = {
    "vin": "V", "duty": "1", "n": "1", "l1": "H", "lm": "H", "lk": "H",
    "c1": "F", "c2": "F", "c3": "F", "c4": "F", "rl": "ohm", "fs": "Hz",
    "v_c1": "V", "v_c2": "V", "v_c3": "V", "v_c4": "V", "v_o": "V",
    "m": "1", "v_s_stress": "V", "v_d1_stress": "V", "v_d2_stress": "V",
    "v_d3_stress": "V", "i_o": "A", "i_lm_avg": "A", "di_l1": "A",
    "di_lm": "A", "i_d1_peak": "A", "i_d2_peak": "A", "i_d3_peak": "A",
    "i_s_peak": "A", "d34": "1", "lm_min": "H", "c1_min": "F",
    "c2_min": "F", "c3_min": "F", "c4_min": "F",
    "duty_": "1", "lm_chosen": "H", "lk_chosen": "H", "l1_min": "H",
    "l1_chosen": "H", "c1_chosen": "F", "c2_chosen": "F", "c3_chosen": "F",
    "c4_chosen": "F", "ccm_margin": "1", "v_ppc": "V",
}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load_json(path: str) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot read {path}: {e}", EXIT_IO)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise CliError(f"{path} is not valid JSON: {e}", EXIT_VALIDATION)
    if not isinstance(data, dict):
        raise CliError(f"{path} must hold a JSON object", EXIT_VALIDATION)
    return data


def _params_from_file(path: str):
    try:
        return validate_params(_load_json(path))
    except ParameterError as e:
        raise CliError("invalid parameters: " + "; ".join(e.violations),
                       EXIT_VALIDATION)


def _with_units(obj: dict) -> dict:
    out = {}
    for k, v in obj.items():
        out[k] = v
        if k in UNITS and isinstance(v, (int, float)) and not isinstance(v, bool):
            out[f"{k}_unit"] = UNITS[k]
    return out


def _envelope(payload_key: str, payload, params: dict) -> dict:
    return {
        "toolkit_version": __version__,
        "params": params,
        payload_key: payload,
    }


def _dump_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _write(out_dir: str | None, name: str, text: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
        return
    d = Path(out_dir)
    try:
        d.mkdir(parents=True, exist_ok=True)
        (d / name).write_text(text, encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot write {d / name}: {e}", EXIT_IO)


def _sim_config(args) -> simulator.SimConfig:
    kw = {}
    if args.steps is not None:
        kw["steps_per_period"] = args.steps
    if args.tol is not None:
        kw["convergence_tol"] = args.tol
    try:
        return simulator.SimConfig(**kw)
    except ValueError as e:
        raise CliError(str(e), EXIT_VALIDATION)


def _report_to_csv(report: dict) -> str:
    lines = ["quantity,value,unit"]
    for k, v in report.items():
        if k.endswith("_unit") or v is None:
            continue
        unit = UNITS.get(k, "")
        lines.append(f"{k},{v},{unit}")
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    p = _params_from_file(args.params)
    ripple = analytics.DesignRipple(args.ripple) if args.ripple else None
    report = analytics.full_report(p, ripple)
    rep = {k: v for k, v in report.as_dict().items() if v is not None}
    if args.format == "csv":
        _write(args.out, "report.csv", _report_to_csv(rep))
    else:
        env = _envelope("report", _with_units(rep), p.as_dict())
        _write(args.out, "report.json", _dump_json(env))
    return EXIT_OK


def _compare_rows(p, metrics) -> list[tuple[str, float, float, str]]:
    """quantity, analytic, measured, kind rows for the cross-validation table."""
    rep = analytics.full_report(p)
    m = metrics
    return [
        ("v_c1", rep.v_c1, m.v_c1_avg, "closed-form"),
        ("v_c2", rep.v_c2, m.v_c2_avg, "closed-form"),
        ("v_c3", rep.v_c3, m.v_c3_avg, "closed-form"),
        ("v_c4", rep.v_c4, m.v_c4_avg, "closed-form"),
        ("v_o", rep.v_o, m.v_o_avg, "closed-form"),
        ("m", rep.m, m.gain, "closed-form"),
        ("di_l1", rep.di_l1, m.di_l1, "closed-form"),
        ("di_lm", rep.di_lm, m.di_lm, "closed-form"),
        ("i_o", rep.i_o, m.i_o_avg, "closed-form"),
        ("i_d2_avg", rep.i_o, m.i_d2_avg, "closed-form"),
        ("i_d3_avg", rep.i_o, m.i_d3_avg, "closed-form"),
        ("i_lm_avg", rep.i_lm_avg, m.i_lm_avg, "estimate"),
        ("i_d1_peak", rep.i_d1_peak, m.i_d1_peak, "estimate"),
        ("i_d2_peak", rep.i_d2_peak, m.i_d2_peak, "estimate"),
        ("i_d3_peak", rep.i_d3_peak, m.i_d3_peak, "estimate"),
        ("i_s_peak", rep.i_s_peak, m.i_sw_peak, "estimate"),
        ("d34", rep.d34, m.d34, "estimate"),
    ]


def compare_table_csv(p, metrics) -> str:
    lines = ["quantity,analytic,measured,rel_error,kind"]
    for name, a, meas, kind in _compare_rows(p, metrics):
        denom = max(abs(a), 1e-30)
        rel = abs(a - meas) / denom
        lines.append(f"{name},{a:.12g},{meas:.12g},{rel:.12g},{kind}")
    return "\n".join(lines) + "\n"


def cmd_simulate(args) -> int:
    p = _params_from_file(args.params)
    cfg = _sim_config(args)
    out = args.out or "."
    try:
        if args.no_converge:
            x = simulator.analytic_start(p) if args.warm_start else None
            import numpy as np
            x0 = x if x is not None else np.zeros(7)
            trace = None
            for _ in range(max(args.periods, 1)):
                x_end, trace = simulator.integrate_period(p, cfg, x0)
                x0 = simulator.state_to_array(x_end)
            metrics = simulator.extract_metrics(trace, p)
            regime = "transient"
            periods = max(args.periods, 1)
            residual = None
        else:
            res = simulator.run_to_steady_state(p, cfg,
                                                warm_start=args.warm_start)
            trace, metrics = res.trace, res.metrics
            regime = res.regime
            periods = res.periods
            residual = res.residual
    except simulator.ConvergenceError as e:
        raise CliError(f"no convergence: {e}", EXIT_NUMERICAL)
    except simulator.SimulationError as e:
        raise CliError(f"simulation failed: {e}", EXIT_NUMERICAL)

    _write(out, "trace.csv", simulator.trace_to_csv(trace))
    md = metrics.as_dict()
    md["regime"] = regime
    payload = {"metrics": md, "periods_to_converge": periods}
    if residual is not None:
        payload["residual"] = residual
    _write(out, "metrics.json", _dump_json(
        _envelope("simulation", payload, p.as_dict())))
    if regime == "CCM":
        _write(out, "compare.csv", compare_table_csv(p, metrics))
    return EXIT_OK


def _parse_range(text: str) -> list[float]:
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise CliError(f"bad range {text!r}, expected a:b:step", EXIT_VALIDATION)
    if step <= 0 or not (0.0 < a <= b < 1.0):
        raise CliError(f"range {text!r} must lie inside (0,1) with step > 0",
                       EXIT_VALIDATION)
    grid = []
    v = a
    while v <= b + 1e-12:
        grid.append(round(v, 12))
        v += step
    return grid


def cmd_sweep_gain(args) -> int:
    grid = _parse_range(args.duty_range)
    if args.topologies:
        try:
            tops = [comparison.TOPOLOGIES[t] for t in args.topologies.split(",")]
        except KeyError as e:
            raise CliError(f"unknown topology {e.args[0]!r}", EXIT_VALIDATION)
    else:
        tops = list(comparison.TOPOLOGIES.values())
    rows = comparison.sweep_gain(tops, grid, args.n)
    out = args.out or "."
    _write(out, "gains.csv", comparison.sweep_to_csv(rows))
    meta = {
        "n": args.n,
        "duty_grid": grid,
        "topologies": [t.id for t in tops],
        "n_applies_to": [t.id for t in tops if t.uses_n],
    }
    _write(out, "gains_meta.json", _dump_json(
        _envelope("sweep", meta, {"n": args.n})))
    return EXIT_OK


def _design_spec_from_file(path: str) -> design.DesignSpec:
    raw = _load_json(path)
    known = {"vin", "v_o_target", "fs", "v_ppc", "rl", "p_o",
             "ripple_fraction", "n_candidates", "d_max"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise CliError(f"unknown design fields: {', '.join(unknown)}",
                       EXIT_VALIDATION)
    if "n_candidates" in raw:
        raw["n_candidates"] = tuple(float(v) for v in raw["n_candidates"])
    try:
        return design.DesignSpec(**raw)
    except (TypeError, ValueError) as e:
        raise CliError(f"invalid design spec: {e}", EXIT_VALIDATION)


def cmd_design(args) -> int:
    spec = _design_spec_from_file(args.spec)
    result = design.size_converter(spec)
    cands = []
    for c in result.candidates:
        d = {k: v for k, v in c.__dict__.items() if v is not None and v != ""}
        cands.append(_with_units(d))
    payload = {"feasible": result.feasible, "candidates": cands,
               "margins": {"lm": design.LM_MARGIN, "capacitors": design.CAP_MARGIN}}
    if args.verify:
        cfg = _sim_config(args)
        entries = design.verify_design(result, cfg)
        payload["verification"] = [
            {k: v for k, v in e.__dict__.items() if v is not None and v != ""}
            for e in entries]
    spec_dict = {k: v for k, v in spec.__dict__.items()}
    spec_dict["n_candidates"] = list(spec.n_candidates)
    _write(args.out, "design.json", _dump_json(
        _envelope("design", payload, spec_dict)))
    return EXIT_OK


def cmd_compare(args) -> int:
    p = _params_from_file(args.params)
    lines = ["topology,switches,diodes,capacitors,inductors,"
             "coupled_inductor,gain"]
    for t in comparison.TOPOLOGIES.values():
        g = comparison.gain_of(t, p.duty, p.n)
        lines.append(f"{t.id},{t.switches},{t.diodes},{t.capacitors},"
                     f"{t.inductors},{int(t.coupled_inductor)},{g:.12g}")
    text = "\n".join(lines) + "\n"
    _write(args.out, "compare_topologies.csv", text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="zetastep",
        description="coupled-inductor step-up converter toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--out", default=None,
                        help="output directory (default: stdout for single "
                             "reports, current directory for bundles)")
        sp.add_argument("--steps", type=int, default=None,
                        help="integrator steps per period")
        sp.add_argument("--tol", type=float, default=None,
                        help="steady-state convergence tolerance")

    sp = sub.add_parser("analyze", help="closed-form steady-state report")
    sp.add_argument("params", help="converter parameter JSON file")
    sp.add_argument("--ripple", type=float, default=None,
                    help="capacitor ripple target in volts; adds minimum "
                         "capacitances to the report")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_analyze)

    sp = sub.add_parser("simulate", help="time-domain periodic steady state")
    sp.add_argument("params")
    add_common(sp)
    sp.add_argument("--periods", type=int, default=1,
                    help="with --no-converge: number of periods to run")
    sp.add_argument("--no-converge", action="store_true",
                    help="skip the steady-state search; record the last "
                         "period of a fixed-length run")
    sp.add_argument("--warm-start", action="store_true",
                    help="start from the closed-form operating point")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("sweep-gain", help="gain-vs-duty comparison table")
    sp.add_argument("--n", type=float, default=2.0)
    sp.add_argument("--duty-range", default="0.05:0.95:0.05")
    sp.add_argument("--topologies", default=None,
                    help="comma-separated subset (default: all)")
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_sweep_gain)

    sp = sub.add_parser("design", help="size components from requirements")
    sp.add_argument("spec", help="design requirement JSON file")
    add_common(sp)
    sp.add_argument("--verify", action="store_true",
                    help="simulate each feasible candidate")
    sp.set_defaults(fn=cmd_design)

    sp = sub.add_parser("compare", help="component counts and gains at the "
                                        "given operating point")
    sp.add_argument("params")
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
