"""Command-line driver: flat key-value configs in, CSV reports out.

A config document is a list of ``key = value`` lines; ``#`` starts a
comment.  Flags given on the command line override values from the file.
Exit codes: 0 success, 1 configuration error, 2 numerical blow-up,
3 undefined error metric.
"""
import argparse
from dataclasses import dataclass, field, fields
import logging
import math
import os
from pathlib import Path
import sys

import numpy as np

from .boundary import CLOSURES
from .cases import (
    CavityConfig,
    CouetteConfig,
    PeriodicConfig,
    average_error,
    convergence_order,
    couette_exact_field,
    couette_params,
    run_cavity,
    run_couette,
    run_periodic,
)
from .errors import BlowUpError, ConfigError, InvalidInputError, MetricUndefinedError
from .stepper import StopRule, run_until

__all__ = ["RunConfig", "ReportRow", "parse_config", "emit_reports", "main", "main_entry", "run"]

logger = logging.getLogger("bgkfd")

CASES = ("couette", "cavity", "periodic-diagnostic")
STOPS = ("steady", "time", "steps")
DEFAULT_GRID = {"couette": (20, 40), "cavity": (128, 128), "periodic-diagnostic": (64, 64)}
DEFAULT_RE = {"couette": 10.0, "cavity": 400.0, "periodic-diagnostic": 100.0}
DEFAULT_STOP = {"couette": "time", "cavity": "steady", "periodic-diagnostic": "steps"}
MAX_NODES = 4096


@dataclass
class RunConfig:
    case: str
    closure: tuple = ("proposed",)
    grid: tuple = None
    re: float = None
    zeta: float = 0.9
    theta: float = 0.5
    cfl: float = 0.1
    tau_star_ratio: float = 1.0
    u0: float = 0.1
    stop: str = None
    t_end: float = None
    n_steps: int = 1000
    steady_tol: float = 1e-10
    check_every: int = 100
    max_steps: int = 10**7
    sample_times: tuple = (0.5, 5.0, 10.0, 30.0)
    error_every: float = 0.5
    convergence_grids: tuple = ()
    convergence_time: float = 1.0
    out: str = None
    seed: int = 0

    def __post_init__(self):
        if self.grid is None:
            self.grid = DEFAULT_GRID[self.case]
        if self.re is None:
            self.re = DEFAULT_RE[self.case]
        if self.stop is None:
            self.stop = DEFAULT_STOP[self.case]


@dataclass
class ReportRow:
    """One scalar result.  ``key`` holds extra labelled coordinates, e.g. ``(("y", 0.5),)``."""

    case: str
    step: int
    time: float
    metric: str
    value: float
    key: tuple = ()

    def get(self, name, default=None):
        return dict(self.key).get(name, default)


# ---- parsing ---------------------------------------------------------------

def _number(kind, lo, hi, lo_open=False, hi_open=False):
    lo_b = "(" if lo_open else "["
    hi_b = ")" if hi_open else "]"
    desc = f"{lo_b}{lo:g}, {'inf' if hi == math.inf else format(hi, 'g')}{hi_b}"

    def conv(key, text):
        try:
            v = kind(text)
        except ValueError:
            raise ConfigError(f"{key}: expected {kind.__name__} in {desc}, got {text!r}", key) from None
        ok = (v > lo if lo_open else v >= lo) and (v < hi if hi_open else v <= hi)
        if not (ok and math.isfinite(v)):
            raise ConfigError(f"{key}: value {text} outside range {desc}", key)
        return v

    return conv


def _choice(options):
    def conv(key, text):
        if text not in options:
            raise ConfigError(f"{key}: expected one of {', '.join(options)}, got {text!r}", key)
        return text
    return conv


def _grid_value(key, text):
    parts = text.lower().split("x")
    try:
        nx, ny = (int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{key}: expected NXxNY with integers in [3, {MAX_NODES}], got {text!r}", key) from None
    if not (3 <= nx <= MAX_NODES and 3 <= ny <= MAX_NODES):
        raise ConfigError(f"{key}: node counts must lie in [3, {MAX_NODES}], got {text!r}", key)
    return nx, ny


def _list(item):
    def conv(key, text):
        parts = [p.strip() for p in text.split(",") if p.strip()]
        return tuple(item(key, p) for p in parts)
    return conv


def _closures(key, text):
    out = _list(_choice(CLOSURES))(key, text)
    if not out:
        raise ConfigError(f"{key}: expected one or more of {', '.join(CLOSURES)}", key)
    return out


def _text(key, text):
    return text


FIELDS = {
    "case": _choice(CASES),
    "closure": _closures,
    "grid": _grid_value,
    "re": _number(float, 0.0, 1e6, lo_open=True),
    "zeta": _number(float, 0.0, 1.0),
    "theta": _number(float, 0.0, 1.0),
    "cfl": _number(float, 0.0, 1.0, lo_open=True),
    "tau_star_ratio": _number(float, 0.0, 10.0, lo_open=True),
    "u0": _number(float, 0.0, 0.3, lo_open=True),
    "stop": _choice(STOPS),
    "t_end": _number(float, 0.0, 1e6),
    "n_steps": _number(int, 0, 10**9),
    "steady_tol": _number(float, 0.0, 1.0, lo_open=True, hi_open=True),
    "check_every": _number(int, 1, 10**6),
    "max_steps": _number(int, 1, 10**9),
    "sample_times": _list(_number(float, 0.0, 1e6)),
    "error_every": _number(float, 0.0, 1e6, lo_open=True),
    "convergence_grids": _list(_grid_value),
    "convergence_time": _number(float, 0.0, 1e6, lo_open=True),
    "out": _text,
    "seed": _number(int, 0, 2**63 - 1),
}
assert set(FIELDS) == {f.name for f in fields(RunConfig)}


def _read_pairs(text):
    pairs = {}
    for n, raw in enumerate(text.split("\n"), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value', got {raw.strip()!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        k = k.lower()
        if k not in FIELDS:
            raise ConfigError(f"unknown key {k!r} (line {n}); accepted keys: {', '.join(FIELDS)}", k)
        if k in pairs:
            raise ConfigError(f"duplicate key {k!r} (line {n})", k)
        pairs[k] = v
    return pairs


def parse_config(text, overrides=None):
    """Parse a flat ``key = value`` document into a validated :class:`RunConfig`.

    ``overrides`` maps keys to raw string values and wins over the document.
    Keys are case-insensitive.  Raises :class:`ConfigError` naming the key.
    """
    pairs = _read_pairs(text)
    for k, v in (overrides or {}).items():
        k = k.lower()
        if k not in FIELDS:
            raise ConfigError(f"unknown key {k!r}", k)
        pairs[k] = str(v)
    if "case" not in pairs:
        raise ConfigError(f"missing required key 'case' (one of {', '.join(CASES)})", "case")
    values = {k: FIELDS[k](k, v) for k, v in pairs.items()}
    cfg = RunConfig(**values)
    if cfg.case == "cavity" and cfg.grid[0] != cfg.grid[1]:
        raise ConfigError(f"grid: the cavity needs a square grid, got {cfg.grid[0]}x{cfg.grid[1]}", "grid")
    if cfg.stop == "time" and cfg.t_end is None and cfg.case != "couette":
        raise ConfigError("t_end: required when stop = time", "t_end")
    return cfg


# ---- output ----------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def _write(path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for r in rows:
                fh.write(",".join(_fmt(v) for v in r) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return Path(path)


def emit_reports(rows, directory):
    """Write report rows as CSV files in ``directory``; returns the written paths.

    Routing by metric name:

    * ``u_x_num`` / ``u_x_ana`` (key ``y``)  ->  ``profile_<t>.csv``: y,u_x_num,u_x_ana
    * ``average_error`` (key ``closure``)    ->  ``error_history.csv``: time,average_error,closure
    * ``convergence_error`` (keys ``h``, ``order``) -> ``convergence.csv``: h,error,order
    * ``center_x`` / ``center_y`` / ``psi_min`` (key ``Re``) -> ``cavity_summary.csv``
    * ``psi`` (keys ``x``, ``y``)              ->  ``psi_field.csv``: x,y,psi
    * anything else                          ->  ``rows.csv``: case,step,time,metric,value

    The fixed-name files are always written, headers only when empty.
    Reals carry 17 significant digits so they re-parse bit-exactly.
    """
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {d}: {exc.strerror or exc}") from exc
    profiles, errors, conv, psi, other = {}, [], [], [], []
    summary = {}
    for r in rows:
        m = r.metric
        if m in ("u_x_num", "u_x_ana"):
            profiles.setdefault(r.time, {}).setdefault(r.get("y"), {})[m] = r.value
        elif m == "average_error":
            errors.append((r.time, r.value, r.get("closure", "")))
        elif m == "convergence_error":
            conv.append((r.get("h"), r.value, r.get("order", float("nan"))))
        elif m in ("center_x", "center_y", "psi_min"):
            summary.setdefault(r.get("Re"), {})[m] = r.value
        elif m == "psi":
            psi.append((r.get("x"), r.get("y"), r.value))
        else:
            other.append((r.case, r.step, r.time, r.metric, r.value))
    paths = []
    for t, by_y in sorted(profiles.items()):
        body = [(y, v.get("u_x_num", float("nan")), v.get("u_x_ana", float("nan"))) for y, v in sorted(by_y.items())]
        paths.append(_write(d / f"profile_{t:g}.csv", ("y", "u_x_num", "u_x_ana"), body))
    paths.append(_write(d / "error_history.csv", ("time", "average_error", "closure"), errors))
    paths.append(_write(d / "convergence.csv", ("h", "error", "order"), conv))
    body = [(re_, v.get("center_x", float("nan")), v.get("center_y", float("nan")), v.get("psi_min", float("nan")))
            for re_, v in summary.items()]
    paths.append(_write(d / "cavity_summary.csv", ("Re", "center_x", "center_y", "psi_min"), body))
    paths.append(_write(d / "psi_field.csv", ("x", "y", "psi"), psi))
    if other:
        paths.append(_write(d / "rows.csv", ("case", "step", "time", "metric", "value"), other))
    return paths


# ---- runs ------------------------------------------------------------------

def _stop_rule(cfg, u_ref):
    if cfg.stop == "time":
        return StopRule("time", t_end=cfg.t_end)
    if cfg.stop == "steps":
        return StopRule("steps", n_steps=cfg.n_steps)
    return StopRule("steady", tol=cfg.steady_tol, u_ref=u_ref, check_every=cfg.check_every,
                    max_steps=cfg.max_steps)


def _couette_config(cfg, grid):
    return CouetteConfig(nx=grid[0], ny=grid[1], Re=cfg.re, u0=cfg.u0, zeta=cfg.zeta, theta=cfg.theta,
                         cfl=cfg.cfl, tau_star_ratio=cfg.tau_star_ratio, closure=cfg.closure[0],
                         sample_times=tuple(cfg.sample_times))


def _run_couette(cfg):
    case = "couette"
    cc = _couette_config(cfg, cfg.grid)
    rows = []
    if cfg.stop == "time":
        t_end = cfg.t_end if cfg.t_end is not None else max(cfg.sample_times, default=0.0)
        n = int(math.floor(t_end / cfg.error_every + 1e-9))
        error_times = [cfg.error_every * k for k in range(1, n + 1)] + [t_end]
        cc.sample_times = tuple(t for t in cc.sample_times if t <= t_end)
        report = run_couette(cc, closures=cfg.closure, error_times=error_times)
        closure = cfg.closure[0]
        for t, unum, uana in report.profiles[closure]:
            for y, a, b in zip(report.y, unum, uana):
                rows.append(ReportRow(case, 0, t, "u_x_num", a, (("y", y),)))
                rows.append(ReportRow(case, 0, t, "u_x_ana", b, (("y", y),)))
        for c in cfg.closure:
            for t, e in report.error_history[c]:
                rows.append(ReportRow(case, 0, t, "average_error", e, (("closure", c),)))
    else:
        grid, params, boundary, state = couette_params(cc)
        res = run_until(state, params, boundary, _stop_rule(cfg, cc.u0))
        s = res.state
        _, y = grid.coords()
        exact = cc.u0 * y / cc.H
        for yy, a, b in zip(y, s.u[0, 0], exact):
            rows.append(ReportRow(case, s.step_index, s.time, "u_x_num", a, (("y", yy),)))
            rows.append(ReportRow(case, s.step_index, s.time, "u_x_ana", b, (("y", yy),)))
        dev = float(np.abs(s.u[0] - exact[None, :]).max() / cc.u0)
        rows.append(ReportRow(case, s.step_index, s.time, "steady_max_rel_deviation", dev))
        rows.append(ReportRow(case, s.step_index, s.time, "converged", float(res.converged)))
    if cfg.convergence_grids:
        rows.extend(_couette_convergence(cfg))
    return rows


def _couette_convergence(cfg):
    """Average error at ``convergence_time`` on each grid, with the local order."""
    t = cfg.convergence_time
    levels = []
    for g in cfg.convergence_grids:
        cc = _couette_config(cfg, g)
        grid, params, boundary, state = couette_params(cc)
        res = run_until(state, params, boundary, StopRule("time", t_end=t))
        s = res.state
        e = average_error(s.u, couette_exact_field(cc, grid, s.time), floor=1e-12 * cc.u0)
        levels.append((grid.dy, e, s))
        logger.info("convergence %dx%d: h=%.5g error=%.6g", g[0], g[1], grid.dy, e)
    rows = []
    for k, (h, e, s) in enumerate(levels):
        order = convergence_order([levels[k - 1][:2], (h, e)]) if k else float("nan")
        rows.append(ReportRow("couette", s.step_index, s.time, "convergence_error", e, (("h", h), ("order", order))))
    if len(levels) >= 2:
        fit = convergence_order([lv[:2] for lv in levels])
        rows.append(ReportRow("couette", levels[-1][2].step_index, t, "fitted_order", fit))
    return rows


def _run_cavity(cfg):
    cc = CavityConfig(n=cfg.grid[0], Re=cfg.re, u_lid=(cfg.u0, 0.0), zeta=cfg.zeta, theta=cfg.theta, cfl=cfg.cfl,
                      tau_star_ratio=cfg.tau_star_ratio, closure=cfg.closure[0], steady_tol=cfg.steady_tol,
                      check_every=cfg.check_every, max_steps=cfg.max_steps)
    last = [0.0]

    def progress(s):
        if s.time - last[0] >= 10.0:
            last[0] = s.time
            logger.info("cavity t=%.1f step %d", s.time, s.step_index)

    report = run_cavity(cc, callback=progress, stop=_stop_rule(cfg, cc.u_ref))
    s = report.state
    rows = [ReportRow("cavity", s.step_index, s.time, "converged", float(report.converged))]
    x, y = report.grid.coords()
    for i in range(len(x)):
        for j in range(len(y)):
            rows.append(ReportRow("cavity", s.step_index, s.time, "psi", report.psi[i, j], (("x", x[i]), ("y", y[j]))))
    if report.residuals:
        rows.append(ReportRow("cavity", s.step_index, s.time, "final_residual", report.residuals[-1][1]))
    primary = report.primary
    if primary is None:
        return rows, MetricUndefinedError("no clockwise vortex found in the cavity streamfunction")
    key = (("Re", cfg.re),)
    rows += [
        ReportRow("cavity", s.step_index, s.time, "center_x", primary.position[0], key),
        ReportRow("cavity", s.step_index, s.time, "center_y", primary.position[1], key),
        ReportRow("cavity", s.step_index, s.time, "psi_min", primary.strength, key),
    ]
    return rows, None


def _run_periodic(cfg):
    if cfg.stop != "steps":
        raise ConfigError("stop: the periodic diagnostic supports only stop = steps", "stop")
    pc = PeriodicConfig(nx=cfg.grid[0], ny=cfg.grid[1], Re=cfg.re, u0=cfg.u0, zeta=cfg.zeta, theta=cfg.theta,
                        cfl=cfg.cfl, n_steps=cfg.n_steps, seed=cfg.seed)
    report = run_periodic(pc)
    m0 = report.mass[0][2]
    rows = []
    for k, t, m in report.mass:
        rows.append(ReportRow("periodic-diagnostic", k, t, "mass", m))
        rows.append(ReportRow("periodic-diagnostic", k, t, "relative_mass_drift", abs(m - m0) / abs(m0)))
    return rows


def run(cfg):
    """Execute a validated config; returns ``(rows, deferred_error)``.

    A deferred error (an undefined metric) still leaves rows worth writing.
    """
    if cfg.case == "couette":
        return _run_couette(cfg), None
    if cfg.case == "cavity":
        return _run_cavity(cfg)
    return _run_periodic(cfg), None


# ---- entry point -----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(f"{self.prog}: {message}")


def _build_parser():
    p = _Parser(prog="bgkfd", description="Run a finite-difference lattice Boltzmann benchmark.")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--case", help=f"one of {', '.join(CASES)}")
    p.add_argument("--closure", help=f"wall closure(s), comma separated: {', '.join(CLOSURES)}")
    p.add_argument("--grid", help="node counts NXxNY")
    p.add_argument("--re", help="Reynolds number")
    p.add_argument("--out", help="output directory (default: $BGK_OUT_DIR, then ./bgk_out)")
    p.add_argument("--quiet", action="store_true", help="only report warnings and errors")
    return p


def main(argv=None):
    """Entry point; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                            format="%(levelname)s %(name)s: %(message)s", force=True)
        text = ""
        if args.config:
            try:
                text = Path(args.config).read_text(encoding="utf-8")
            except (OSError, UnicodeDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}", "config") from None
        overrides = {k: v for k in ("case", "closure", "grid", "re", "out") if (v := getattr(args, k)) is not None}
        cfg = parse_config(text, overrides)
        out = cfg.out or os.environ.get("BGK_OUT_DIR") or "bgk_out"
        rows, deferred = run(cfg)
        paths = emit_reports(rows, out)
        logger.info("wrote %d files to %s", len(paths), out)
        for r in rows:
            if r.metric in ("center_x", "center_y", "fitted_order", "steady_max_rel_deviation"):
                logger.info("%s = %.6g", r.metric, r.value)
        if deferred is not None:
            raise deferred
    except (ConfigError, InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return 2
    except MetricUndefinedError as exc:
        print(f"metric undefined: {exc}", file=sys.stderr)
        return 3
    return 0


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
