"""Command-line front end: ``gyrostat {classify,scan,isolate,simulate,selfcheck}``.

Runs are described by a JSON document (see :func:`parse_config`); command-line
flags override the command and the output settings.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .classifier import BOUNDARY_TOL, ReportInconsistency, StabilityReport, synthesize
from .core import GyrostatParams, ParameterError, conserved
from .equilibria import (
    Equilibrium,
    EquilibriumFamily,
    FamilyError,
    FamilyTag,
    family_point,
)
from .isolation import (
    COEFF_TOL,
    ReductionError,
    reduce_level_system,
    sample_level_set,
    sign_analysis,
)
from .linearization import SPECTRAL_TOL
from .selfcheck import run_selfcheck, summarize, sweep_range
from .simulator import DEFAULT_DT, escape_initial_state, integrate

COMMANDS = ("classify", "scan", "isolate", "simulate", "selfcheck")
FORMATS = ("table", "json", "csv")
DEFAULT_FORMAT = {
    "classify": "table",
    "scan": "csv",
    "isolate": "table",
    "simulate": "csv",
    "selfcheck": "table",
}
SCAN_COLUMNS = (
    "q", "closed_form", "isolation", "case_tag", "max_real_eig", "lyapunov", "boundary_flag",
)
TOLERANCE_DEFAULTS = {
    "boundary": BOUNDARY_TOL,
    "spectral": SPECTRAL_TOL,
    "coefficient": COEFF_TOL,
}
DEFAULT_SWEEP_COUNT = 201
DEFAULT_T_END = 100.0
REFERENCE = {"inertia": [3.0, 2.0, 1.0], "mu": [1.0, 0.0, 0.0]}

EXIT_OK, EXIT_INVALID, EXIT_INCONSISTENT = 0, 1, 2


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


@dataclass(frozen=True)
class Sweep:
    start: float
    stop: float
    count: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class RunConfig:
    params: GyrostatParams
    command: str | None = None
    family: EquilibriumFamily | None = None
    parameter: float | None = None
    sweep: Sweep | None = None
    dt: float = DEFAULT_DT
    t_end: float = DEFAULT_T_END
    tolerances: dict[str, float] = field(default_factory=lambda: dict(TOLERANCE_DEFAULTS))
    output_path: str | None = None
    output_format: str | None = None
    initial: tuple[float, float, float] | None = None

    @property
    def inertia(self) -> tuple[float, float, float]:
        i = self.params.inertia
        return i.i1, i.i2, i.i3

    @property
    def mu(self) -> tuple[float, float, float]:
        return self.params.mu

    @property
    def format(self) -> str:
        return self.output_format or DEFAULT_FORMAT.get(self.command or "", "table")


# --- parsing -----------------------------------------------------------------

_TOP_KEYS = {
    "inertia", "mu", "command", "family", "parameter", "sweep",
    "dt", "t_end", "tolerances", "output", "initial",
}


def _real(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {type(value).__name__}")
    if not math.isfinite(value):
        raise ConfigError(f"{path}: must be finite")
    return float(value)


def _positive(value: Any, path: str) -> float:
    x = _real(value, path)
    if x <= 0:
        raise ConfigError(f"{path}: must be > 0, got {x:g}")
    return x


def _triple(value: Any, path: str) -> tuple[float, float, float]:
    if not isinstance(value, list) or len(value) != 3:
        raise ConfigError(f"{path}: expected a list of 3 numbers")
    return tuple(_real(v, f"{path}[{n}]") for n, v in enumerate(value))


def _string(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {type(value).__name__}")
    return value


def _object(value: Any, path: str, allowed: set[str]) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = sorted(set(value) - allowed)
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigError(f"{where}: unknown key")
    return value


def parse_config(text: str) -> RunConfig:
    """Validate a JSON run description and fill in defaults.

    Raises:
        ConfigError: on malformed JSON, unknown keys, type mismatches or
            violated invariants; the message starts with the key path.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from None
    doc = _object(doc, "", _TOP_KEYS)
    for key in ("inertia", "mu"):
        if key not in doc:
            raise ConfigError(f"{key}: required key missing")
    inertia = _triple(doc["inertia"], "inertia")
    mu = _triple(doc["mu"], "mu")
    try:
        params = GyrostatParams.from_values(inertia, mu)
    except ParameterError as exc:
        raise ConfigError(f"inertia: {exc}") from None

    command = None
    if "command" in doc:
        command = _string(doc["command"], "command")
        if command not in COMMANDS:
            raise ConfigError(f"command: must be one of {', '.join(COMMANDS)}")

    family = None
    if "family" in doc:
        label = _string(doc["family"], "family")
        try:
            family = EquilibriumFamily.parse(label)
        except (FamilyError, ValueError) as exc:
            raise ConfigError(f"family: {exc}") from None
        if not family.is_valid(params):
            raise ConfigError(f"family: {label} is not a family of uniform rotations for mu={mu}")

    parameter = _real(doc["parameter"], "parameter") if "parameter" in doc else None

    sweep = None
    if "sweep" in doc:
        s = _object(doc["sweep"], "sweep", {"from", "to", "count"})
        for key in ("from", "to"):
            if key not in s:
                raise ConfigError(f"sweep.{key}: required key missing")
        count = s.get("count", DEFAULT_SWEEP_COUNT)
        if isinstance(count, bool) or not isinstance(count, int):
            raise ConfigError("sweep.count: expected an integer")
        if count < 2:
            raise ConfigError(f"sweep.count: must be >= 2, got {count}")
        sweep = Sweep(_real(s["from"], "sweep.from"), _real(s["to"], "sweep.to"), count)

    dt = _positive(doc["dt"], "dt") if "dt" in doc else DEFAULT_DT
    t_end = _positive(doc["t_end"], "t_end") if "t_end" in doc else DEFAULT_T_END

    tolerances = dict(TOLERANCE_DEFAULTS)
    if "tolerances" in doc:
        t = _object(doc["tolerances"], "tolerances", set(TOLERANCE_DEFAULTS))
        for key, value in t.items():
            tolerances[key] = _positive(value, f"tolerances.{key}")

    path = fmt = None
    if "output" in doc:
        o = _object(doc["output"], "output", {"path", "format"})
        if "path" in o:
            path = _string(o["path"], "output.path")
        if "format" in o:
            fmt = _string(o["format"], "output.format")
            if fmt not in FORMATS:
                raise ConfigError(f"output.format: must be one of {', '.join(FORMATS)}")

    initial = _triple(doc["initial"], "initial") if "initial" in doc else None

    return RunConfig(
        params=params,
        command=command,
        family=family,
        parameter=parameter,
        sweep=sweep,
        dt=dt,
        t_end=t_end,
        tolerances=tolerances,
        output_path=path,
        output_format=fmt,
        initial=initial,
    )


# --- serialization -------------------------------------------------------------


def fmt_num(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_scalar(x: Any) -> str:
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return fmt_num(x) if math.isfinite(x) else "null"
    return json.dumps(str(x), ensure_ascii=False)


def to_json(obj: Any, indent: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit numbers."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_json_scalar(v) for v in seq) + "]"
        return "[\n" + ",\n".join(inner + to_json(v, indent + 1) for v in seq) + "\n" + pad + "]"
    return _json_scalar(obj)


def _vec(v) -> list[float]:
    return [float(x) for x in v]


def _complex(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def report_dict(report: StabilityReport) -> dict:
    eq = report.equilibrium
    out = {
        "family": eq.family.label,
        "parameter": eq.parameter,
        "point": _vec(eq.vec),
        "closed_form": report.closed_form.value,
        "printed": report.printed.value,
        "boundary_flag": report.boundary_flag,
        "isolation": report.isolation.verdict.value,
        "case_tag": report.isolation.case_tag,
        "spectral": report.spectral.verdict.value,
        "max_real_eig": report.spectral.max_real,
        "eigenvalues": [_complex(z) for z in report.spectral.eigenvalues],
        "singular_case": report.singular_case,
        "lyapunov": report.lyapunov.value,
        "basis": report.basis,
    }
    if report.escape is not None:
        e = report.escape
        out["escape"] = {
            "escaped": e.escaped,
            "escape_time": e.escape_time,
            "max_deviation": e.max_deviation,
            "threshold_x": e.threshold_x,
            "escape_radius": e.escape_radius,
            "delta": e.delta,
        }
    return out


def _table(rows: Sequence[tuple[str, str]]) -> str:
    width = max(len(k) for k, _ in rows)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in rows)


def _render_value(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return fmt_num(v)
    if v is None:
        return "-"
    if isinstance(v, (list, tuple)):
        return "(" + ", ".join(_render_value(x) for x in v) + ")"
    return str(v)


def report_table(report: StabilityReport) -> str:
    d = report_dict(report)
    rows = [
        ("equilibrium", f"{d['family']} {_render_value(d['point'])}"),
        ("parameter", _render_value(d["parameter"])),
        ("closed_form", d["closed_form"] + (" (boundary)" if d["boundary_flag"] else "")),
        ("printed", d["printed"]),
        ("isolation", f"{d['isolation']} [{d['case_tag']}]"),
        ("spectral", d["spectral"]),
        ("max_real_eig", _render_value(d["max_real_eig"])),
        ("eigenvalues", ", ".join(
            f"{fmt_num(re)}{'+' if im >= 0 else '-'}{fmt_num(abs(im))}i"
            for re, im in d["eigenvalues"]
        )),
        ("singular_case", _render_value(d["singular_case"])),
        ("lyapunov", f"{d['lyapunov']}({d['basis']})"),
    ]
    if "escape" in d:
        e = d["escape"]
        rows += [
            ("escape", f"escaped={_render_value(e['escaped'])} t={_render_value(e['escape_time'])}"),
            ("escape_detail", f"max_deviation={fmt_num(e['max_deviation'])} "
             f"radius={fmt_num(e['escape_radius'])} delta={fmt_num(e['delta'])}"),
        ]
    return _table(rows)


def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_render_value(v) for v in row])
    return buf.getvalue()


# --- commands ------------------------------------------------------------------


@dataclass
class Output:
    """What a command produced: the main document and an optional summary."""

    text: str
    summary: str = ""
    code: int = EXIT_OK


def _family(config: RunConfig) -> EquilibriumFamily:
    if config.family is not None:
        return config.family
    axis = config.params.alignment.axis
    if axis is None:
        raise ConfigError("family: required when mu is not along a principal axis")
    return EquilibriumFamily(FamilyTag.M12, axis)


def _equilibrium(config: RunConfig) -> Equilibrium:
    family = _family(config)
    if family.tag is not FamilyTag.M1 and config.parameter is None:
        raise ConfigError(f"parameter: required for family {family.label}")
    try:
        return family_point(config.params, family, config.parameter)
    except FamilyError as exc:
        raise ConfigError(f"parameter: {exc}") from None


def _synthesize(config: RunConfig, eq: Equilibrium) -> StabilityReport:
    tol = config.tolerances
    return synthesize(
        config.params,
        eq,
        boundary_tol=tol["boundary"],
        spectral_tol=tol["spectral"],
        coeff_tol=tol["coefficient"],
    )


def cmd_classify(config: RunConfig) -> Output:
    report = _synthesize(config, _equilibrium(config))
    if config.format == "json":
        return Output(to_json(report_dict(report)) + "\n")
    if config.format == "csv":
        return Output(_csv(SCAN_COLUMNS, [_scan_row(report)]))
    return Output(report_table(report))


def _scan_row(report: StabilityReport) -> list[Any]:
    return [
        report.equilibrium.parameter,
        report.closed_form.value,
        report.isolation.verdict.value,
        report.isolation.case_tag,
        report.spectral.max_real,
        report.lyapunov.value,
        report.boundary_flag,
    ]


def scan_reports(config: RunConfig) -> tuple[list[StabilityReport], list[float]]:
    """Reports along the sweep, in sweep order; also the skipped parameters."""
    family = _family(config)
    if family.tag is FamilyTag.M1:
        raise ConfigError("family: M1 has no free parameter to sweep")
    sweep = config.sweep
    if sweep is None:
        if config.params.alignment.axis is None:
            raise ConfigError("sweep: required when mu is not along a principal axis")
        lo, hi = sweep_range(config.params)
        sweep = Sweep(lo, hi, DEFAULT_SWEEP_COUNT)
    reports, skipped = [], []
    for q in sweep.values():
        try:
            eq = family_point(config.params, family, float(q))
        except FamilyError:
            skipped.append(float(q))
            continue
        # synthesize re-validates every row against the report invariants
        reports.append(_synthesize(config, eq))
    return reports, skipped


def cmd_scan(config: RunConfig) -> Output:
    reports, skipped = scan_reports(config)
    summary = f"{len(reports)} points"
    if skipped:
        summary += f", skipped poles at {', '.join(fmt_num(q) for q in skipped)}"
    if config.format == "json":
        rows = [dict(zip(SCAN_COLUMNS, _scan_row(r))) for r in reports]
        return Output(to_json(rows) + "\n", summary)
    if config.format == "table":
        header = "  ".join(SCAN_COLUMNS) + "\n"
        body = "".join("  ".join(_render_value(v) for v in _scan_row(r)) + "\n" for r in reports)
        return Output(header + body, summary)
    return Output(_csv(SCAN_COLUMNS, [_scan_row(r) for r in reports]), summary)


def isolation_dict(config: RunConfig, eq: Equilibrium) -> dict:
    params = config.params
    out: dict[str, Any] = {"family": eq.family.label, "parameter": eq.parameter,
                           "point": _vec(eq.vec)}
    try:
        red = reduce_level_system(params, eq)
    except ReductionError:
        rep = sample_level_set(params, eq)
        verdict = rep.as_verdict()
        out.update({
            "method": "sampling",
            "radii": list(rep.radii),
            "min_residual": rep.min_residual,
            "level_scale": rep.level_scale,
        })
    else:
        verdict = sign_analysis(red, params, config.tolerances["coefficient"])
        out.update({
            "method": "reduction",
            "axis": red.axis,
            "off_axes": list(red.off_axes),
            "u_coeffs": list(red.u_coeffs),
            "v_coeffs": list(red.v_coeffs),
        })
    out["verdict"] = verdict.verdict.value
    out["case_tag"] = verdict.case_tag
    if verdict.witness is not None:
        x, state = verdict.witness
        out["witness_x"] = float(x)
        out["witness_state"] = _vec(state)
    if verdict.side is not None:
        out["side"] = verdict.side
    return out


def cmd_isolate(config: RunConfig) -> Output:
    d = isolation_dict(config, _equilibrium(config))
    if config.format == "json":
        return Output(to_json(d) + "\n")
    if config.format == "csv":
        return Output(_csv(list(d), [[_render_value(v) for v in d.values()]]))
    return Output(_table([(k, _render_value(v)) for k, v in d.items()]))


def cmd_simulate(config: RunConfig) -> Output:
    params = config.params
    if config.initial is not None:
        m0 = np.array(config.initial)
    else:
        # No explicit start: perturb the configured uniform rotation.
        m0 = escape_initial_state(params, _equilibrium(config),
                                  1e-3 * max(1.0, params.mu_norm))
    traj = integrate(params, m0, config.dt, config.t_end)
    c0 = conserved(params, m0)
    summary = {
        "initial": _vec(m0),
        "final": _vec(traj.final),
        "dt": config.dt,
        "t_end": config.t_end,
        "steps": traj.steps,
        "stored": len(traj.times),
        "f1": c0.f1,
        "f2": c0.f2,
        "drift_f1": traj.drift_f1,
        "drift_f2": traj.drift_f2,
        "drift": traj.drift,
    }
    summary_text = _table([(k, _render_value(v)) for k, v in summary.items()])
    if config.format == "table":
        return Output(summary_text)
    rows = []
    for t, m in zip(traj.times, traj.states):
        c = conserved(params, m)
        rows.append([t, m[0], m[1], m[2], c.f1, c.f2])
    header = ["t", "m1", "m2", "m3", "f1", "f2"]
    if config.format == "json":
        doc = {"summary": summary, "columns": header, "trajectory": rows}
        return Output(to_json(doc) + "\n")
    return Output(_csv(header, rows), summary_text)


def cmd_selfcheck(config: RunConfig) -> Output:
    results = run_selfcheck(config.params)
    passed, failed = summarize(results)
    code = EXIT_OK if failed == 0 else EXIT_INCONSISTENT
    if config.format == "json":
        doc = {
            "passed": passed,
            "failed": failed,
            "checks": [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results],
        }
        return Output(to_json(doc) + "\n", code=code)
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name}  ({r.detail})" for r in results]
    lines.append(f"{passed} passed, {failed} failed")
    return Output("\n".join(lines) + "\n", code=code)


HANDLERS = {
    "classify": cmd_classify,
    "scan": cmd_scan,
    "isolate": cmd_isolate,
    "simulate": cmd_simulate,
    "selfcheck": cmd_selfcheck,
}


def execute(config: RunConfig) -> Output:
    """Run the configured command in-process and return its output."""
    if config.command is None:
        raise ConfigError("command: no command given")
    return HANDLERS[config.command](config)


def run(config: RunConfig, *, quiet: bool = False, stdout=None, stderr=None) -> int:
    """Execute ``config``, write its output, and return the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        result = execute(config)
    except (ConfigError, FamilyError, ParameterError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    except ReportInconsistency as exc:
        print(f"inconsistency: {exc}", file=stderr)
        return EXIT_INCONSISTENT
    if config.output_path:
        try:
            Path(config.output_path).write_text(result.text, encoding="utf-8")
        except OSError as exc:
            print(f"error: output.path: {exc}", file=stderr)
            return EXIT_INVALID
        if result.summary and not quiet:
            stdout.write(result.summary if result.summary.endswith("\n") else result.summary + "\n")
    else:
        stdout.write(result.text)
        if result.summary and not quiet:
            print(result.summary.rstrip("\n"), file=stderr)
    return result.code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gyrostat",
        description="Stability of uniform rotations of a torque-free gyrostat.",
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS,
                        help="command to run (overrides the config 'command' key)")
    parser.add_argument("--config", metavar="PATH",
                        help="JSON run description ('-' reads stdin)")
    parser.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    parser.add_argument("--format", choices=FORMATS, help="output format")
    parser.add_argument("--quiet", action="store_true", help="suppress summaries")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is None:
            if args.command != "selfcheck":
                raise ConfigError("config: --config is required for this command")
            text = json.dumps(REFERENCE)
        elif args.config == "-":
            text = sys.stdin.read()
        else:
            text = Path(args.config).read_text(encoding="utf-8")
        config = parse_config(text)
    except OSError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    overrides = {}
    if args.command:
        overrides["command"] = args.command
    if args.out:
        overrides["output_path"] = args.out
    if args.format:
        overrides["output_format"] = args.format
    try:
        return run(replace(config, **overrides), quiet=args.quiet)
    except BrokenPipeError:
        # Downstream reader closed early (e.g. piped into head).
        sys.stdout = None
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
