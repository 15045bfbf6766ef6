"""Command line entry point: ``netflow-waves {check|run|bounds|converge}``.

Exit status: 0 success, 1 usage/config error, 2 a condition or bound
failed, 3 the run blew up (or a step produced non-finite values).
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .energy import (PhiMismatchError, check_all_bounds, check_conservation,
                     derive_bound_params, initial_pairing_identity, ledger)
from .galerkin import ScenarioError, init_state, integrate
from .nonlinearity import ModelError, check_all
from .reference import ConvergenceRow, convergence_study
from .scenario import ScenarioFileError, build_scenario, load_config, resolve_config
from .spectral import BasisError

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, EXIT_BLOWUP = 0, 1, 2, 3

CONFIG_ERRORS = (ScenarioFileError, ScenarioError, ModelError, BasisError,
                 PhiMismatchError, OSError)


# ---------------------------------------------------------------------------
# output helpers

def fmt(value):
    """Cell text: floats with 17 significant digits, None as empty."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def atomic_write(path, text):
    """Write UTF-8 text with LF endings via a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return atomic_write(path, buf.getvalue())


def jsonable(obj):
    """Plain JSON types; non-finite floats become the strings "inf"/"-inf"/"nan"."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def write_json(path, data):
    return atomic_write(path, json.dumps(jsonable(data), indent=2, sort_keys=True) + "\n")


def trajectory_rows(traj):
    m = traj.a.shape[1]
    header = ["t"] + [f"a_{j}" for j in range(1, m + 1)] + [f"a_dot_{j}" for j in range(1, m + 1)]
    rows = (np.concatenate([[t], a, v]) for t, a, v in zip(traj.t, traj.a, traj.a_dot))
    return header, ([float(x) for x in r] for r in rows)


def ledger_rows(led):
    cols = led.columns()
    header = list(cols)
    return header, ([float(cols[k][i]) for k in header] for i in range(len(led.t)))


def print_table(rows, header, stream=None):
    stream = stream or sys.stdout
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) for i, h in enumerate(header)]
    line = "  ".join(str(h).ljust(w) for h, w in zip(header, widths))
    print(line, file=stream)
    print("-" * len(line), file=stream)
    for r in rows:
        print("  ".join(str(c).ljust(w) for c, w in zip(r, widths)), file=stream)


# ---------------------------------------------------------------------------
# commands

def _reports(scenario, config):
    b = config["bounds"]
    return check_all(scenario.model, radius=b["probe_radius"], count=b["probe_count"])


def cmd_check(scenario, config, out_dir, args):
    reports = _reports(scenario, config)
    write_json(out_dir / "check.json",
               {"model": scenario.model.describe(),
                "reports": {k: r.to_dict() for k, r in reports.items()}})
    rows = []
    for key, r in reports.items():
        consts = ", ".join(f"{k}={fmt(v) if isinstance(v, float) else v}"
                           for k, v in r.constants.items())
        rows.append([key, "pass" if r.satisfied else "FAIL", consts,
                     "" if r.witness is None else fmt(r.witness)])
    print_table(rows, ["condition", "result", "constants", "witness"])
    ok = all(r.satisfied for r in reports.values())
    return EXIT_OK if ok else EXIT_VIOLATION


def _simulate(scenario, config, out_dir, args, command):
    basis = scenario.basis()
    traj = integrate(scenario, basis)
    reports = _reports(scenario, config)
    params = derive_bound_params(scenario.model, basis, init_state(scenario, basis),
                                 scenario.t_final, reports,
                                 l_factor=config["bounds"]["l_factor"])
    led = ledger(traj, basis, scenario.model, params)

    outputs = {"trajectory": "trajectory.csv", "ledger": "ledger.csv"}
    write_csv(out_dir / outputs["trajectory"], *trajectory_rows(traj))
    write_csv(out_dir / outputs["ledger"], *ledger_rows(led))
    manifest = {
        "tool": "netflow-waves", "version": __version__, "command": command,
        "scenario": config, "m": scenario.m,
        "status": traj.status, "t_stop": traj.t_stop,
        "samples": len(traj.t),
        "conditions": {k: r.satisfied for k, r in reports.items()},
        "bound_params": params.to_dict(), "outputs": outputs,
    }
    return basis, traj, params, led, manifest


def _figures(out_dir, manifest, **items):
    if not manifest["scenario"]["output"]["figures"]:
        return
    from . import plotting
    figs = {}
    if "traj" in items:
        figs["trajectory_figure"] = plotting.plot_trajectory(items["traj"], out_dir / "trajectory.png").name
    if "led" in items:
        figs["ledger_figure"] = plotting.plot_ledger(items["led"], out_dir / "ledger.png").name
    if "reports" in items and items["reports"]:
        figs["margins_figure"] = plotting.plot_margins(items["reports"], out_dir / "margins.png").name
    if "rows" in items:
        figs["convergence_figure"] = plotting.plot_convergence(items["rows"], out_dir / "convergence.png").name
    manifest["outputs"].update(figs)


def _status_exit(traj):
    if traj.completed:
        return EXIT_OK
    print(f"error: run ended with status {traj.status} at t={fmt(traj.t_stop)}",
          file=sys.stderr)
    return EXIT_BLOWUP


def cmd_run(scenario, config, out_dir, args):
    basis, traj, params, led, manifest = _simulate(scenario, config, out_dir, args, "run")
    _figures(out_dir, manifest, traj=traj, led=led)
    write_json(out_dir / "manifest.json", manifest)
    print(f"status {traj.status}; {len(traj.t)} samples; "
          f"H drift {fmt(float(np.max(np.abs(led.H - led.H[0]))))}; outputs in {out_dir}")
    return _status_exit(traj)


def cmd_bounds(scenario, config, out_dir, args):
    basis, traj, params, led, manifest = _simulate(scenario, config, out_dir, args, "bounds")
    reports = check_all_bounds(params, traj, basis, scenario.model, led)
    if "conservation" in reports:
        reports["conservation"] = check_conservation(led, tol=config["bounds"]["drift_tol"])
    try:
        reports["pairing_identity"] = initial_pairing_identity(
            traj, basis, scenario.model, tol=config["bounds"]["pairing_tol"])
    except ValueError as exc:
        print(f"warning: pairing identity skipped: {exc}", file=sys.stderr)
    manifest["outputs"]["bounds"] = "bounds.json"
    write_json(out_dir / "bounds.json",
               {"status": traj.status, "t_stop": traj.t_stop,
                "all_passed": all(r.passed for r in reports.values()),
                "bounds": {k: r.to_dict() for k, r in reports.items()}})
    _figures(out_dir, manifest, traj=traj, led=led, reports=reports)
    write_json(out_dir / "manifest.json", manifest)
    rows = [[k, "skip" if r.skipped else ("pass" if r.passed else "FAIL"),
             fmt(r.worst_margin), fmt(r.worst_t)] for k, r in reports.items()]
    print_table(rows, ["bound", "result", "worst_margin", "at_t"])
    code = _status_exit(traj)
    if code != EXIT_OK:
        return code
    return EXIT_OK if all(r.passed for r in reports.values()) else EXIT_VIOLATION


def cmd_converge(scenario, config, out_dir, args):
    conv = config["converge"]
    rows = convergence_study(scenario, conv["m_list"], conv["dt_list"])
    write_csv(out_dir / "convergence.csv", ConvergenceRow.FIELDS,
              ([getattr(r, f) for f in ConvergenceRow.FIELDS] for r in rows))
    manifest = {"tool": "netflow-waves", "version": __version__, "command": "converge",
                "scenario": config, "m": scenario.m,
                "outputs": {"convergence": "convergence.csv"}}
    _figures(out_dir, manifest, rows=rows)
    write_json(out_dir / "manifest.json", manifest)
    print_table([[r.kind, fmt(r.coarse), fmt(r.fine), f"{r.difference:.3e}",
                  "" if r.ratio is None else f"{r.ratio:.3f}", "flag" if r.flagged else ""]
                 for r in rows], ["kind", "coarse", "fine", "difference", "ratio", ""])
    return EXIT_OK


COMMANDS = {"check": cmd_check, "run": cmd_run, "bounds": cmd_bounds, "converge": cmd_converge}


# ---------------------------------------------------------------------------
# argument handling

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser():
    parser = _Parser(prog="netflow-waves",
                     description="Spectral Galerkin runs and a-priori bound checks "
                                 "for u_tt = (F(u))_xx + g(u).")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {"check": "probe the structural conditions on f and g",
             "run": "integrate and write trajectory, ledger and manifest",
             "bounds": "run, then check every energy bound",
             "converge": "refinement study in m and dt"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--scenario", required=True,
                       help="TOML scenario, JSON manifest, or a preset name")
        p.add_argument("--out-dir", help="output directory (default: output.directory)")
        p.add_argument("--modes", type=int, help="number of Galerkin modes m")
        p.add_argument("--dt", type=float, help="time step")
        p.add_argument("--t-final", type=float, help="final time T")
        p.add_argument("--integrator", choices=("verlet", "rk4"))
        p.add_argument("--force", action="store_true",
                       help="admit f that fails the monotonicity probe")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    return parser


def _overrides(args):
    over = {"domain": {"m": args.modes},
            "time": {"dt": args.dt, "t_final": args.t_final, "integrator": args.integrator}}
    if args.no_figures:
        over["output"] = {"figures": False}
    return over


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        raw = load_config(args.scenario)
        if args.modes is not None:
            # a new m invalidates derived sizes echoed by an earlier manifest
            dom = raw.get("domain", {})
            if dom.get("n_quad") == 4 * dom.get("m", -1):
                dom.pop("n_quad")
        config = resolve_config(raw, _overrides(args))
        scenario = build_scenario(config, force=args.force)
        out_dir = Path(args.out_dir or config["output"]["directory"])
        out_dir.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = _warn_to_stderr
            return COMMANDS[args.command](scenario, config, out_dir, args)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _warn_to_stderr(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {category.__name__}: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
