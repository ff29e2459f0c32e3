"""Command line front end: ``loopeq {eqm,resolvent,loop,verify}``.

Exit codes: 0 success, 1 a check exceeded its tolerance, 2 usage or config
error, 3 numerical failure. Reports carry a ``reason`` field on failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from .algebra import AlgebraError
from .equilibrium import EquilibriumError, solve_equilibrium
from .estimator import build_solved
from .jets import JetError
from .loop import LoopError, extract_eg_derivatives
from .model import AdmissibilityParams, FieldError, admissibility_check, build_field
from .oracles import ContourSpec, OracleError, contour_residual, default_contour
from .verify import CONTOUR_Z, SUITES, run_suite

log = logging.getLogger(__name__)

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (EquilibriumError, LoopError, AlgebraError, JetError, OracleError, np.linalg.LinAlgError)
DEFAULT_TOLERANCES = {"endpoint": 1e-10, "variational": 1e-8, "contour": 1e-8}


class ConfigError(ValueError):
    pass


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    upsilon: int = 4
    t: list = dc_field(default_factory=lambda: [0.0, 0.0, 0.0, 0.0])
    probe_m: int | None = None
    jet_order: int | None = None
    g_max: int = 2
    laurent_depth: int = 12
    taylor_dirs: list = dc_field(default_factory=list)
    taylor_order: int = 0
    delta: float = 0.5
    contour_nodes: int = 512
    tolerances: dict = dc_field(default_factory=dict)
    T_bound: float = 1.0
    gamma: float = 1.0
    suite: str = "gaussian"

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def field(self, jets: bool = True):
        if not jets:
            return build_field(self.upsilon, self.t)
        return build_field(self.upsilon, self.t, self.probe_m, self.jet_order,
                           tuple(self.taylor_dirs), self.taylor_order)

    def echo(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float):
                v = fmt(v)
            elif isinstance(v, list):
                v = [fmt(x) if isinstance(x, float) else x for x in v]
            elif isinstance(v, dict):
                v = {k: fmt(float(x)) for k, x in sorted(v.items())}
            out[f.name] = v
        return out


_INT_KEYS = {"upsilon", "probe_m", "jet_order", "g_max", "laurent_depth", "taylor_order", "contour_nodes"}
_FLOAT_KEYS = {"delta", "T_bound", "gamma"}


def parse_config(raw: dict) -> RunConfig:
    """Build a RunConfig from JSON data; numbers may also be given as strings."""
    cfg = RunConfig()
    known = {f.name for f in dataclasses.fields(RunConfig)}
    for key, val in raw.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            if val is None and key in ("probe_m", "jet_order"):
                pass
            elif key in _INT_KEYS:
                val = int(val)
            elif key in _FLOAT_KEYS:
                val = float(val)
            elif key == "t":
                val = [float(x) for x in val]
            elif key == "taylor_dirs":
                val = [int(x) for x in val]
            elif key == "tolerances":
                val = {str(k): float(x) for k, x in dict(val).items()}
            elif key == "suite":
                val = str(val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
        setattr(cfg, key, val)
    return cfg


def validate_config(cfg: RunConfig, command: str) -> None:
    if cfg.upsilon < 2:
        raise ConfigError("upsilon must be at least 2")
    if len(cfg.t) != cfg.upsilon:
        raise ConfigError(f"expected {cfg.upsilon} couplings, got {len(cfg.t)}")
    if cfg.g_max < 0 or cfg.g_max > 3:
        raise ConfigError("g_max must be in 0..3")
    if cfg.jet_order is None:
        cfg.jet_order = cfg.g_max
    if cfg.jet_order < cfg.g_max:
        raise ConfigError("jet_order must be >= g_max")
    if cfg.laurent_depth < 1:
        raise ConfigError("laurent_depth must be positive")
    if cfg.delta <= 0 or cfg.contour_nodes < 8:
        raise ConfigError("contour needs delta > 0 and at least 8 nodes")
    unknown = set(cfg.tolerances) - set(DEFAULT_TOLERANCES)
    if unknown:
        raise ConfigError(f"unknown tolerance keys {sorted(unknown)}")
    if command == "verify" and cfg.suite not in SUITES:
        raise ConfigError(f"unknown suite {cfg.suite!r}; choose from {sorted(SUITES)}")
    if command != "verify":
        field = cfg.field(jets=False)  # raises FieldError on bad couplings
        ok, reason = admissibility_check(field, AdmissibilityParams(cfg.T_bound, cfg.gamma))
        if not ok:
            raise ConfigError(f"couplings not admissible: {reason}")
        for j in cfg.taylor_dirs:
            if not 1 <= j <= cfg.upsilon:
                raise ConfigError(f"Taylor direction {j} is not a physical coupling")


# ---------------------------------------------------------------------------
# formatting


def fmt(x) -> str:
    """15 significant digits, no negative zero."""
    s = f"{float(x):.15g}"
    return "0" if s == "-0" else s


def fmt_csv(x) -> str:
    v = float(f"{float(x):.15g}")
    return repr(0.0 if v == 0 else v)


def laurent_rows(table) -> list[dict]:
    return [{"power": p, "value": fmt(v.real), "im": fmt(v.imag)} for p, v in table]


def equilibrium_block(eq) -> dict:
    return {
        "alpha": fmt(eq.alpha),
        "beta": fmt(eq.beta),
        "h": [fmt(c) for c in np.real(eq.h.order0())],
        "l": fmt(eq.lagrange_l) if eq.lagrange_l is not None else None,
        "residuals": {k: fmt(v) for k, v in sorted(eq.residuals.items())},
    }


def eg_block(table) -> dict:
    out = {"entries": {}, "hessian": {}, "taylor": {}}
    for g, row in sorted(table.entries.items()):
        out["entries"][str(g)] = {str(j): fmt(v) for j, v in sorted(row.items())}
    for g, H in sorted(table.hessian.items()):
        out["hessian"][str(g)] = [[fmt(v) for v in r] for r in H]
    for g, poly in sorted(table.taylor.items()):
        out["taylor"][str(g)] = [{"monomial": list(m), "value": fmt(v)} for m, v in sorted(poly.items())]
    out["taylor_dirs"] = list(table.taylor_dirs)
    return out


def empty_report(cfg: RunConfig | None) -> dict:
    return {
        "status": "ok",
        "reason": None,
        "config": cfg.echo() if cfg is not None else None,
        "equilibrium": {},
        "levels": [],
        "eg_table": {},
        "oracle": {},
        "timings": {},
    }


def render(report: dict, fmt_name: str) -> str:
    if fmt_name == "json":
        return json.dumps(report, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if report["levels"]:
        for lev in report["levels"]:
            for row in lev["laurent"]:
                w.writerow([f"g={lev['g']}", f"power={row['power']}",
                            f"re={fmt_csv(row['value'])}", f"im={fmt_csv(row['im'])}"])
    elif report["oracle"]:
        for c in report["oracle"]["checks"]:
            w.writerow([c["name"], "pass" if c["passed"] else "fail", c["value"], c["tol"]])
    elif report["equilibrium"]:
        eq = report["equilibrium"]
        for key in ("alpha", "beta", "l"):
            w.writerow([key, eq[key]])
        for i, c in enumerate(eq["h"]):
            w.writerow([f"h{i}", c])
        for k, v in eq["residuals"].items():
            w.writerow([k, v])
    else:
        w.writerow(["status", report["status"]])
    if report["reason"]:
        w.writerow(["reason", report["reason"]])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def _contour(cfg: RunConfig, eq) -> ContourSpec:
    return default_contour(eq, cfg.delta, cfg.contour_nodes)


def cmd_eqm(cfg: RunConfig, report: dict) -> int:
    t0 = time.perf_counter()
    eq = solve_equilibrium(cfg.field(jets=False))
    report["timings"]["equilibrium"] = time.perf_counter() - t0
    report["equilibrium"] = equilibrium_block(eq)
    r = eq.residuals
    bad = []
    if max(r["endpoint_eq1"], r["endpoint_eq2"]) > cfg.tol("endpoint"):
        bad.append("endpoint equations")
    if r["max_eq_dev"] > cfg.tol("variational"):
        bad.append("variational equality")
    if r["min_ineq_margin"] <= 0:
        bad.append("variational inequality")
    if bad:
        report["reason"] = "tolerance exceeded: " + ", ".join(bad)
        return EXIT_VALIDATION
    return EXIT_OK


def _hierarchy(cfg: RunConfig, g_max: int, report: dict):
    t0 = time.perf_counter()
    field, hier = build_solved(cfg.upsilon, cfg.t, cfg.probe_m, g_max, cfg.laurent_depth,
                               cfg.taylor_dirs, cfg.taylor_order, cfg.jet_order)
    report["timings"]["hierarchy"] = time.perf_counter() - t0
    cfg.probe_m = field.probe_m
    report["config"] = cfg.echo()
    eq = hier.eq
    report["equilibrium"] = equilibrium_block(eq)
    return hier


def cmd_resolvent(cfg: RunConfig, report: dict) -> int:
    hier = _hierarchy(cfg, 0, report)
    report["levels"] = [{"g": 0, "laurent": laurent_rows(hier.laurent_table(0)), "contour_residual": None}]
    return EXIT_OK


def cmd_loop(cfg: RunConfig, report: dict) -> int:
    hier = _hierarchy(cfg, cfg.g_max, report)
    contour = _contour(cfg, hier.eq)
    t0 = time.perf_counter()
    levels, worst = [], 0.0
    for g in range(cfg.g_max + 1):
        res = None
        if g >= 1:
            res = contour_residual(hier, g, contour, CONTOUR_Z)
            worst = max(worst, res)
        levels.append({"g": g, "laurent": laurent_rows(hier.laurent_table(g)),
                       "contour_residual": fmt(res) if res is not None else None})
    report["levels"] = levels
    if cfg.laurent_depth >= cfg.upsilon + 1:
        report["eg_table"] = eg_block(extract_eg_derivatives(hier))
    report["timings"]["checks"] = time.perf_counter() - t0
    if worst > cfg.tol("contour"):
        report["reason"] = f"contour residual {worst:.3e} exceeds {cfg.tol('contour'):.1e}"
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_verify(cfg: RunConfig, report: dict) -> int:
    t0 = time.perf_counter()
    checks = run_suite(cfg.suite, cfg.g_max)
    report["timings"]["suite"] = time.perf_counter() - t0
    if not checks:
        return EXIT_OK
    report["oracle"] = {
        "suite": cfg.suite,
        "checks": [{"name": c.name, "passed": bool(c.passed), "value": fmt(c.value), "tol": fmt(c.tol),
                    "detail": c.detail} for c in checks],
        "passed": sum(c.passed for c in checks),
        "failed": sum(not c.passed for c in checks),
    }
    report["timings"]["checks"] = {c.name: c.seconds for c in checks}
    failed = [c.name for c in checks if not c.passed]
    if failed:
        report["reason"] = "failed checks: " + "; ".join(failed)
        return EXIT_VALIDATION
    return EXIT_OK


COMMANDS = {"eqm": cmd_eqm, "resolvent": cmd_resolvent, "loop": cmd_loop, "verify": cmd_verify}
STATUS = {EXIT_OK: "ok", EXIT_VALIDATION: "validation_failure", EXIT_USAGE: "usage_error",
          EXIT_NUMERIC: "numerical_failure"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="loopeq", description="One-cut loop equations: equilibrium, genus expansion, checks.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON config file; flags override its entries")
    p.add_argument("--t4", type=float, help="quartic coupling t_4")
    p.add_argument("--gmax", type=int, help="highest genus level")
    p.add_argument("--depth", type=int, help="Laurent depth L")
    p.add_argument("--probe-m", type=int, help="number of probe couplings")
    p.add_argument("--taylor-order", type=int, help="Taylor order for e_g in t_4")
    p.add_argument("--suite", help=f"verify suite: {', '.join(sorted(SUITES))}")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args) -> RunConfig:
    raw = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    cfg = parse_config(raw)
    if args.t4 is not None:
        if cfg.upsilon < 4:
            cfg.t = list(cfg.t) + [0.0] * (4 - cfg.upsilon)
            cfg.upsilon = 4
        cfg.t = list(cfg.t)
        cfg.t[3] = args.t4
    if args.gmax is not None:
        cfg.g_max = args.gmax
        cfg.jet_order = None if "jet_order" not in raw else cfg.jet_order
    if args.depth is not None:
        cfg.laurent_depth = args.depth
    if args.probe_m is not None:
        cfg.probe_m = args.probe_m
    if args.taylor_order is not None:
        cfg.taylor_order = args.taylor_order
        if not cfg.taylor_dirs:
            cfg.taylor_dirs = [4]
    if args.suite is not None:
        cfg.suite = args.suite
    return cfg


def run_command(argv) -> tuple[int, str, str]:
    """Run one command; returns (exit code, rendered report, format)."""
    args, cfg, out_fmt = None, None, "json"
    try:
        args = build_parser().parse_args(argv)
        out_fmt = args.format
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
        cfg = load_config(args)
        validate_config(cfg, args.command)
        report = empty_report(cfg)
        code = COMMANDS[args.command](cfg, report)
    except (UsageError, ConfigError, FieldError) as exc:
        report, code = empty_report(cfg), EXIT_USAGE
        report["reason"] = str(exc)
    except NUMERIC_ERRORS as exc:
        report, code = empty_report(cfg), EXIT_NUMERIC
        report["reason"] = f"{type(exc).__name__}: {exc}"
    report["status"] = STATUS[code]
    if code == EXIT_OK:
        report["reason"] = None
    text = render(report, out_fmt)
    out_path = getattr(args, "out", None)
    if out_path:
        try:
            with open(out_path, "w") as fh:
                fh.write(text)
        except OSError as exc:
            report["status"], report["reason"] = STATUS[EXIT_USAGE], f"cannot write report: {exc}"
            return EXIT_USAGE, render(report, out_fmt), out_fmt
        return code, "", out_fmt
    return code, text, out_fmt


def main(argv=None) -> int:
    code, text, _ = run_command(sys.argv[1:] if argv is None else argv)
    if text:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
