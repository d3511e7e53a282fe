"""Command-line interface.

Subcommands ``hit``, ``qmatrix``, ``h-table``, ``validate`` and ``mc``.
Settings come from (highest first) command-line flags, a YAML file given by
``--config``, and built-in defaults. Results go to stdout; log messages go
to stderr. Exit codes: 0 success, 1 configuration error, 2 numerical
failure, 3 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import re
import sys
from typing import Any, Optional, Sequence

import numpy as np
import yaml

from . import __version__
from .errors import ConfigError, DomainError, LevyHitError, NumericalError, ValidationFailure
from .hitting import HittingProblem, PointSet, multi_point
from .models import model_from_spec
from .montecarlo import PathConfig, simulate_hitting
from .numerics import QuadratureConfig
from .resolvent import ResolventEvaluator
from .trace_q import build_Q, closed_form_Q, getoor_limit_Q, max_deviation
from .validation import SUITES, run_suites

log = logging.getLogger("levyhit")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 1, 2, 3

DEFAULTS: dict[str, Any] = {
    "model": {"family": "brownian"},
    "format": None,
    "quad": {"abs_tol": 1e-10, "rel_tol": 1e-8, "q_min": 4.0**-10},
    "mc": {"paths": 100_000, "eps": 1e-3, "step": 0.05, "seed": 0},
    "seed": 0,
    "check": [],
    "suite": ["all"],
    "method": "auto",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# configuration


_PARAM_SPLIT = re.compile(r",(?=\s*[A-Za-z_]\w*\s*=)")


def parse_model(text: str) -> dict:
    """``"family:key=value,..."`` into a model spec dict."""
    family, _, rest = text.partition(":")
    spec: dict[str, Any] = {"family": family.strip()}
    if rest.strip():
        for item in _PARAM_SPLIT.split(rest):
            key, eq, value = item.partition("=")
            if not eq:
                raise ConfigError(f"model parameter {item!r} is not key=value")
            spec[key.strip()] = _scalar(value.strip())
    return spec


def _scalar(v: str):
    try:
        return float(v)
    except ValueError:
        return v


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path!r} is not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    if isinstance(data.get("model"), str):
        data["model"] = parse_model(data["model"])
    for key in ("start", "check", "suite"):
        if key in data and not isinstance(data[key], list):
            data[key] = [data[key]]
    return data


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg = _merge(cfg, load_config_file(args.config))
    flags: dict[str, Any] = {}
    if getattr(args, "model", None):
        flags["model"] = parse_model(args.model)
    for key in ("points", "start", "format", "check", "suite", "grid", "method"):
        v = getattr(args, key, None)
        if v is not None and v != []:
            flags[key] = v
    quad = {k: getattr(args, f"quad_{k}") for k in ("abs_tol", "rel_tol", "q_min") if getattr(args, f"quad_{k}", None) is not None}
    if quad:
        flags["quad"] = quad
    mc = {k: getattr(args, k) for k in ("paths", "eps", "step") if getattr(args, k, None) is not None}
    if getattr(args, "seed", None) is not None:
        flags["seed"] = args.seed
        mc["seed"] = args.seed
    if mc:
        flags["mc"] = mc
    return _merge(cfg, flags)


def quad_config(cfg: dict) -> QuadratureConfig:
    q = cfg["quad"]
    try:
        return QuadratureConfig.with_q_min(float(q["q_min"]), abs_tol=float(q["abs_tol"]), rel_tol=float(q["rel_tol"]))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad quadrature settings: {exc}") from None


def evaluator(cfg: dict) -> ResolventEvaluator:
    model = model_from_spec(cfg["model"])
    return ResolventEvaluator(model, quad_config(cfg), method=cfg.get("method", "auto"))


def point_set(cfg: dict) -> PointSet:
    pts = cfg.get("points")
    if not pts:
        raise ConfigError("no points given (use --points)")
    try:
        values = [float(p) for p in pts]
    except (TypeError, ValueError):
        raise ConfigError("points must be numbers") from None
    return PointSet.of(values)


def starts(cfg: dict) -> list[float]:
    xs = cfg.get("start")
    if xs is None or xs == []:
        raise ConfigError("no start value given (use --start)")
    try:
        return [float(x) for x in xs]
    except (TypeError, ValueError):
        raise ConfigError("start values must be numbers") from None


# ---------------------------------------------------------------------------
# output


def _num(v: float) -> str:
    return repr(float(v))


def emit_json(obj) -> str:
    # repr of a float is the shortest string that round-trips exactly
    return json.dumps(obj, allow_nan=True, indent=None)


def emit_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _matrix_table(M: np.ndarray, labels) -> str:
    head = " " * 12 + "".join(f"{_short(a):>16}" for a in labels)
    lines = [head]
    for a, row in zip(labels, M):
        lines.append(f"{_short(a):>12}" + "".join(f"{v:>16.10g}" for v in row))
    return "\n".join(lines)


def _short(v: float) -> str:
    return f"{v:g}"


# ---------------------------------------------------------------------------
# commands


def _format(cfg: dict, default: str = "table") -> str:
    return cfg.get("format") or default


def cmd_hit(cfg: dict) -> tuple[int, str]:
    ev = evaluator(cfg)
    ps = point_set(cfg)
    results = [multi_point(ev, HittingProblem(ps, x)) for x in starts(cfg)]
    fmt = _format(cfg)
    if fmt == "json":
        return EXIT_OK, emit_json({"model": ev.model.describe(), "points": list(ps), "results": [r.as_dict() for r in results]}) + "\n"
    if fmt == "csv":
        rows = [(r.start, a, float(p), tag) for r in results for a, p, tag in zip(r.points, r.probs, r.method_tags)]
        return EXIT_OK, emit_csv(["start", "point", "prob", "method"], rows)
    lines = []
    for r in results:
        lines.append(f"start x = {r.start:g}")
        lines.append(f"{'point':>12}  {'P_x(first hit)':>20}  method")
        for a, p, tag in zip(r.points, r.probs, r.method_tags):
            lines.append(f"{a:>12g}  {p:>20.15g}  {tag}")
        lines.append(f"{'total':>12}  {r.total:>20.15g}")
        lines.append("")
    return EXIT_OK, "\n".join(lines)


def cmd_qmatrix(cfg: dict) -> tuple[int, str]:
    ev = evaluator(cfg)
    ps = point_set(cfg)
    if len(ps) < 2:
        raise ConfigError("qmatrix needs at least two points")
    Q = build_Q(ev, ps)
    checks = {}
    for name in cfg.get("check") or []:
        if name == "closed-form":
            ref = closed_form_Q(ev.model, ps)
        elif name == "getoor":
            ref = getoor_limit_Q(ev, ps)
        else:
            raise ConfigError(f"unknown check {name!r} (choose getoor or closed-form)")
        checks[name] = {"max_deviation": max_deviation(Q, ref), "reference": ref.entries.tolist()}
        log.info("check %s: max deviation %.3e", name, checks[name]["max_deviation"])
    fmt = _format(cfg)
    if fmt == "json":
        out = Q.as_dict()
        out["model"] = ev.model.describe()
        out["checks"] = checks
        return EXIT_OK, emit_json(out) + "\n"
    if fmt == "csv":
        rows = [(a, *[float(v) for v in row]) for a, row in zip(Q.points, Q.entries)]
        return EXIT_OK, emit_csv(["point"] + [_short(a) for a in Q.points], rows)
    lines = [_matrix_table(Q.entries, Q.points), ""]
    lines.append("row sums: " + "  ".join(f"{v:.3e}" for v in Q.row_sums))
    conds = Q.diagnostics.get("conditions", [])
    if conds:
        lines.append("conditions: " + "  ".join(f"{c:.3g}" for c in conds))
    for name, c in checks.items():
        lines.append(f"check {name}: max deviation {c['max_deviation']:.3e}")
    return EXIT_OK, "\n".join(lines) + "\n"


def grid_values(grid) -> np.ndarray:
    if grid is None:
        raise ConfigError("h-table needs --grid MIN MAX COUNT")
    if isinstance(grid, str):
        grid = re.split(r"[:,\s]+", grid.strip())
    if isinstance(grid, dict):
        grid = [grid.get("min"), grid.get("max"), grid.get("count")]
    try:
        lo, hi, count = float(grid[0]), float(grid[1]), int(grid[2])
    except (TypeError, ValueError, IndexError):
        raise ConfigError("grid must be MIN MAX COUNT") from None
    if count < 1 or not hi >= lo:
        raise ConfigError("grid needs COUNT >= 1 and MAX >= MIN")
    return np.linspace(lo, hi, count)


def cmd_h_table(cfg: dict) -> tuple[int, str]:
    ev = evaluator(cfg)
    rows = []
    for x in grid_values(cfg.get("grid")):
        v, tag = ev.h_tagged(float(x))
        rows.append((float(x), float(v), tag))
    fmt = _format(cfg, "csv")
    if fmt == "json":
        return EXIT_OK, emit_json({"model": ev.model.describe(), "rows": [{"x": x, "h": v, "method": t} for x, v, t in rows]}) + "\n"
    if fmt == "table":
        lines = [f"{'x':>14}  {'h(x)':>22}  method"] + [f"{x:>14.8g}  {v:>22.15g}  {t}" for x, v, t in rows]
        return EXIT_OK, "\n".join(lines) + "\n"
    return EXIT_OK, emit_csv(["x", "h", "method"], rows)


def cmd_validate(cfg: dict) -> tuple[int, str]:
    reports = run_suites(cfg.get("suite"), seed=int(cfg.get("seed", 0)))
    failed = [r for r in reports if not r.passed]
    fmt = _format(cfg)
    if fmt == "json":
        body = emit_json([json.loads(r.to_json()) for r in reports]) + "\n"
    else:
        body = "\n".join(r.summary() for r in reports) + "\n"
    if failed:
        for r in failed:
            log.error("suite failed: %s", r.to_json())
        return EXIT_VALIDATION, body
    return EXIT_OK, body


def cmd_mc(cfg: dict) -> tuple[int, str]:
    model = model_from_spec(cfg["model"])
    ps = point_set(cfg)
    mc = cfg["mc"]
    try:
        pc = PathConfig(paths=int(mc["paths"]), eps=float(mc["eps"]), step=float(mc["step"]), seed=int(mc["seed"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad Monte Carlo settings: {exc}") from None
    reports = [simulate_hitting(model, x, ps, pc) for x in starts(cfg)]
    for r in reports:
        for note in r.notes:
            log.info("start %g: %s", r.start, note)
    fmt = _format(cfg)
    if fmt == "json":
        return EXIT_OK, emit_json({"model": model.describe(), "results": [r.as_dict() for r in reports]}) + "\n"
    if fmt == "csv":
        rows = [(r.start, a, float(p), float(s)) for r in reports for a, p, s in zip(r.points, r.estimates, r.std_errors)]
        return EXIT_OK, emit_csv(["start", "point", "estimate", "std_error"], rows)
    lines = []
    for r in reports:
        lines.append(f"start x = {r.start:g}  ({r.paths} paths, {r.method}, censored {r.censored_fraction:.3%})")
        for a, p, s in zip(r.points, r.estimates, r.std_errors):
            lines.append(f"{a:>12g}  {p:>10.5f} +- {s:.5f}")
        lines.append("")
    return EXIT_OK, "\n".join(lines)


COMMANDS = {
    "hit": cmd_hit,
    "qmatrix": cmd_qmatrix,
    "h-table": cmd_h_table,
    "validate": cmd_validate,
    "mc": cmd_mc,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file with settings (flags override it)")
    common.add_argument("--model", help='model spec, e.g. "brownian:sigma2=1,mu=0" or "stable:alpha=1.5,beta=0"')
    common.add_argument("--format", choices=("table", "json", "csv"))
    common.add_argument("--method", choices=("auto", "closed-form", "tsukada", "limit"), help="route used for h")
    common.add_argument("--quad.abs-tol", dest="quad_abs_tol", type=float)
    common.add_argument("--quad.rel-tol", dest="quad_rel_tol", type=float)
    common.add_argument("--quad.q-min", dest="quad_q_min", type=float, help="smallest q of the q -> 0 sequence")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = _Parser(prog="levyhit", description="First-hit probabilities and trace generators for Lévy processes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    hit = sub.add_parser("hit", parents=[common], help="first-hit distribution of a point set")
    hit.add_argument("--points", nargs="+", type=float)
    hit.add_argument("--start", nargs="+", type=float)

    q = sub.add_parser("qmatrix", parents=[common], help="generator of the trace process")
    q.add_argument("--points", nargs="+", type=float)
    q.add_argument("--check", action="append", choices=("getoor", "closed-form"))

    h = sub.add_parser("h-table", parents=[common], help="tabulate the renormalized zero resolvent")
    h.add_argument("--grid", nargs=3, metavar=("MIN", "MAX", "COUNT"))

    v = sub.add_parser("validate", parents=[common], help="run validation suites")
    v.add_argument("--suite", action="append", choices=sorted(SUITES) + ["all"])

    mc = sub.add_parser("mc", parents=[common], help="Monte Carlo first-hit frequencies")
    mc.add_argument("--points", nargs="+", type=float)
    mc.add_argument("--start", nargs="+", type=float)
    mc.add_argument("--paths", type=int)
    mc.add_argument("--eps", type=float)
    mc.add_argument("--step", type=float)
    return p


def _setup_logging(verbosity: int):
    level = logging.WARNING - 10 * min(verbosity, 2)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(level)
    log.propagate = False


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"levyhit: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _setup_logging(getattr(args, "verbose", 0))
    stage = "configuration"
    try:
        cfg = resolve_config(args)
        stage = args.command
        code, out = COMMANDS[args.command](cfg)
    except (ConfigError, DomainError) as exc:
        print(f"levyhit {stage}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"levyhit {stage}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValidationFailure as exc:
        print(f"levyhit {stage}: validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except LevyHitError as exc:
        print(f"levyhit {stage}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
