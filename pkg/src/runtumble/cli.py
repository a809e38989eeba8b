"""Command-line entry point: scenario runner, exponent tools, CSV emission.

Subcommands:
  simulate <config>    run the split scheme, write time-series / snapshot CSVs
  exponents solve|region|check ...
  dispersion <config>  decay-rate fits for free transport

Configs are flat "key = value" text with '#' comments and a strict schema:
unknown keys are errors. Exit codes: 0 success, 1 config error, 2 runtime
guard abort.
"""

import argparse
import math
import os
import sys
from fractions import Fraction

import numpy as np

from runtumble.estimator import (BootstrapMonitor, GronwallMonitor, TermTracker,
                                 dispersion_decay_fit)
from runtumble.exponents import (ExponentQuadruple, admissible_region, region_csv_rows,
                                 solve_numerology, strichartz_admissible)
from runtumble.freeflow import GaussianBallData
from runtumble.grid import GridSpec, build_grid, total_mass
from runtumble.kernels import KernelSpec
from runtumble.norms import NormSpec, mixed_norm
from runtumble.simulate import GuardAbort, Simulation
from runtumble.transport import SeparableData

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_GUARD = 2


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

_SCHEMA = {
    "dimension": int,
    "box_half_length": float,
    "nx": int,
    "nv": int,
    "velocity_shape": str,
    "r_min": float,
    "r_max": float,
    "dt": float,
    "t_end": float,
    "beta": int,
    "kernel_family": str,
    "kernel_C": float,
    "memory_epsilon": float,
    "kernel_signs": str,
    "init_kind": str,
    "init_amplitude": float,
    "init_width": float,
    "norms": str,
    "monitors": str,
    "snapshot_every": int,
    "output_dir": str,
    "rng_seed": int,
}

_DEFAULTS = {
    "velocity_shape": "ball",
    "r_min": 0.0,
    "r_max": 1.0,
    "beta": 1,
    "kernel_family": "constant",
    "kernel_C": 1.0,
    "memory_epsilon": 1.0,
    "kernel_signs": "+,-,+,-",
    "init_kind": "gaussian",
    "init_amplitude": 1.0,
    "init_width": 1.0,
    "norms": "",
    "monitors": "",
    "snapshot_every": 0,
    "output_dir": ".",
    "rng_seed": 0,
}

_MONITOR_NAMES = ("gronwall_thm2", "term_tracker_thm1", "bootstrap_thm3")


def parse_exponent(token):
    """One exponent token: 'inf', an integer/decimal, or a fraction 'a/b'."""
    token = token.strip()
    if token in ("inf", "Inf", "INF"):
        return math.inf
    try:
        return float(Fraction(token))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad exponent {token!r}") from exc


def parse_config(path):
    """Read a flat key=value config; strict schema, typed values."""
    raw = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.rstrip()!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            raw[key] = _SCHEMA[key](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    cfg = dict(_DEFAULTS)
    cfg.update(raw)
    for key in ("dimension", "box_half_length", "nx", "nv", "dt", "t_end"):
        if key not in cfg:
            raise ConfigError(f"missing required key {key!r}")
    return cfg


def parse_norm_list(text):
    """Semicolon-separated 'p,q' pairs -> [(p_token, q_token, p, q), ...]."""
    out = []
    for item in filter(None, (chunk.strip() for chunk in text.split(";"))):
        parts = item.split(",")
        if len(parts) != 2:
            raise ConfigError(f"norms entry {item!r} is not a 'p,q' pair")
        ptok, qtok = parts[0].strip(), parts[1].strip()
        out.append((ptok, qtok, parse_exponent(ptok), parse_exponent(qtok)))
    return out


def parse_signs(text):
    table = {"+": 1, "-": -1}
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4 or any(p not in table for p in parts):
        raise ConfigError(f"kernel_signs must be four of '+'/'-', got {text!r}")
    return tuple(table[p] for p in parts)


def build_scene(cfg):
    """Grid, kernel and initial data from a parsed config."""
    try:
        spec = GridSpec(dim=cfg["dimension"], box_half_length=cfg["box_half_length"],
                        nx=cfg["nx"], nv=cfg["nv"], velocity_shape=cfg["velocity_shape"],
                        r_min=cfg["r_min"], r_max=cfg["r_max"], dt=cfg["dt"])
        grid = build_grid(spec)
        kernel = KernelSpec(family=cfg["kernel_family"], coefficient=cfg["kernel_C"],
                            epsilon=cfg["memory_epsilon"], signs=parse_signs(cfg["kernel_signs"]))
        kernel.validate()
        if cfg["init_kind"] not in ("gaussian", "cube"):
            raise ConfigError(f"unknown init_kind {cfg['init_kind']!r}")
        f0 = SeparableData(amplitude=cfg["init_amplitude"], width=cfg["init_width"],
                           kind=cfg["init_kind"])
        if cfg["beta"] not in (0, 1):
            raise ConfigError("beta must be 0 or 1")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return grid, kernel, f0


# ---------------------------------------------------------------------------
# CSV helpers
# ---------------------------------------------------------------------------

def _fmt(value):
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _make_monitors(names, cfg):
    monitors = []
    for name in filter(None, (n.strip() for n in names.split(","))):
        if name == "gronwall_thm2":
            monitors.append(("gronwall_thm2", GronwallMonitor(p=1.5)))
        elif name == "term_tracker_thm1":
            monitors.append(("term_tracker_thm1", TermTracker(p=9.0 / 5.0, q=9.0 / 7.0,
                                                              stride=20)))
        elif name == "bootstrap_thm3":
            monitors.append(("bootstrap_thm3", BootstrapMonitor(a=1.5)))
        else:
            raise ConfigError(f"unknown monitor {name!r}; known: {', '.join(_MONITOR_NAMES)}")
    return monitors


def _snapshot(sim, cfg, step, outdir):
    grid = sim.grid
    rho = sim.rho.values
    mesh = grid.x_mesh()
    d = grid.dim
    path = os.path.join(outdir, f"snapshot_{step:06d}.csv")
    with open(path, "w", newline="") as fh:
        fh.write(f"# t={_fmt(sim.t)} dimension={d} nx={grid.spec.nx} field=rho\n")
        fh.write(",".join([f"x_{a}" for a in range(d)] + ["rho"]) + "\n")
        flat = [m.ravel() for m in mesh] + [rho.ravel()]
        for row in zip(*flat):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def run_simulate(config_path):
    cfg = parse_config(config_path)
    grid, kernel, f0 = build_scene(cfg)
    norm_list = parse_norm_list(cfg["norms"])
    for ptok, qtok, p, q in norm_list:
        if q != math.inf and p != math.inf and p < q:
            raise ConfigError(f"norm {ptok},{qtok}: mixed norms here use p >= q")
    outdir = cfg["output_dir"]
    os.makedirs(outdir, exist_ok=True)

    try:
        sim = Simulation(grid, f0, kernel, beta=cfg["beta"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    monitors = _make_monitors(cfg["monitors"], cfg)
    try:
        for _, mon in monitors:
            sim.attach(mon)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    n_steps = int(round(cfg["t_end"] / cfg["dt"]))
    rows = []

    def record():
        row = [sim.t, total_mass(sim.f), float(sim.f.values.min()), float(sim.f.values.max())]
        for ptok, qtok, p, q in norm_list:
            row.append(mixed_norm(sim.f, NormSpec(p=p, q=q)))
        rows.append(row)

    guard_message = None
    record()
    if cfg["snapshot_every"] > 0:
        _snapshot(sim, cfg, 0, outdir)
    for step in range(1, n_steps + 1):
        try:
            sim.step()
        except GuardAbort as exc:
            guard_message = str(exc)
            break
        record()
        if cfg["snapshot_every"] > 0 and step % cfg["snapshot_every"] == 0:
            _snapshot(sim, cfg, step, outdir)

    header = ["t", "mass", "min_f", "max_f"]
    header += [f"norm_{ptok}_{qtok}" for ptok, qtok, _, _ in norm_list]
    monitor_cols = _monitor_columns(monitors, len(rows))
    for name, cols in monitor_cols:
        header.append(name)
        for i, row in enumerate(rows):
            row.append(cols[i])
    write_csv(os.path.join(outdir, "timeseries.csv"), header, rows)

    if guard_message is not None:
        print(f"guard abort: {guard_message}", file=sys.stderr)
        return EXIT_GUARD
    print(f"wrote {os.path.join(outdir, 'timeseries.csv')} ({len(rows)} rows)")
    return EXIT_OK


def _monitor_columns(monitors, n_rows):
    """Per-monitor CSV columns (cert_*, bound_*, term_*), one value per row."""
    out = []
    for name, mon in monitors:
        if name == "gronwall_thm2":
            rep = mon.certify()
            recs = rep["records"][:n_rows]
            out.append(("cert_gronwall",
                        ["pass" if r["ok"] else "fail" for r in recs] + [""] * (n_rows - len(recs))))
            out.append(("bound_gronwall",
                        [_fmt(r["rhs"]) for r in recs] + [""] * (n_rows - len(recs))))
        elif name == "term_tracker_thm1":
            rep = mon.certify()
            by_step = {e["step"]: e for e in mon.evaluations}
            for label, i in (("term_f1", 0), ("term_f2", 1), ("term_f3", 2)):
                out.append((label, [_fmt(by_step[s]["norms"][i]) if s in by_step else ""
                                    for s in range(n_rows)]))
            out.append(("bound_shifted", [_fmt(by_step[s]["integrals"]["shifted"])
                                          if s in by_step else "" for s in range(n_rows)]))
            out.append(("bound_plain", [_fmt(by_step[s]["integrals"]["plain"])
                                        if s in by_step else "" for s in range(n_rows)]))
            verdict = "pass" if rep["passed"] else "fail"
            out.append(("cert_terms", [""] * (n_rows - 1) + [verdict]))
        elif name == "bootstrap_thm3":
            rep = mon.report()
            X = rep["X"][:n_rows]
            out.append(("term_X", [_fmt(v) for v in X] + [""] * (n_rows - len(X))))
            verdict = "pass" if rep["stable"] else "fail"
            out.append(("cert_bootstrap", [""] * (n_rows - 1) + [verdict]))
    return out


# ---------------------------------------------------------------------------
# exponents
# ---------------------------------------------------------------------------

def run_exponents_solve(args):
    q = parse_exponent(args.q)
    chain = solve_numerology(q)
    for label, value in (("p", chain.p), ("lambda", chain.lam), ("theta", chain.theta),
                         ("c", chain.c), ("b", chain.b), ("eps_interp", chain.eps_interp)):
        print(f"{label} = {_fmt(value)}")
    return EXIT_OK


def run_exponents_region(args):
    _, _, mask = admissible_region(step=args.step)
    header = ["q_prime", "p_prime", "in_region"]
    rows = [(q, p, flag) for q, p, flag in region_csv_rows(step=args.step)]
    write_csv(args.output, header, rows)
    n_in = int(mask.sum())
    print(f"wrote {args.output}: {n_in} of {mask.size} points inside")
    return EXIT_OK


def run_exponents_check(args):
    quad = ExponentQuadruple(r=parse_exponent(args.r), p=parse_exponent(args.p),
                             q=parse_exponent(args.q), a=parse_exponent(args.a), d=args.dim)
    ok, diag = strichartz_admissible(quad)
    print("admissible" if ok else "not admissible")
    for key, val in sorted(diag.items()):
        print(f"  {key} = {val}")
    return EXIT_OK if ok else EXIT_GUARD


# ---------------------------------------------------------------------------
# dispersion
# ---------------------------------------------------------------------------

def run_dispersion(config_path):
    cfg = parse_config(config_path)
    norm_list = parse_norm_list(cfg["norms"])
    if not norm_list:
        raise ConfigError("dispersion needs at least one 'p,q' entry in norms")
    d = cfg["dimension"]
    if d not in (1, 2, 3):
        raise ConfigError("dimension must be 1, 2 or 3")
    if cfg["init_kind"] != "gaussian":
        raise ConfigError("dispersion fits use gaussian initial data")
    data = GaussianBallData(amplitude=cfg["init_amplitude"], sigma=cfg["init_width"],
                            R=cfg["r_max"], d=d)
    outdir = cfg["output_dir"]
    os.makedirs(outdir, exist_ok=True)
    header = ["p", "q", "fitted_slope", "theoretical_slope", "relative_deviation",
              "inequality_margin", "passed"]
    rows = []
    all_ok = True
    for ptok, qtok, p, q in norm_list:
        if q != math.inf and p != math.inf and p < q:
            raise ConfigError(f"norm {ptok},{qtok}: dispersion needs p >= q")
        fit = dispersion_decay_fit(data, p, q)
        ok = fit.relative_deviation <= 0.10 and fit.inequality_ok
        all_ok = all_ok and ok
        rows.append([ptok, qtok, fit.fitted_slope, fit.theoretical_slope,
                     fit.relative_deviation, fit.inequality_margin,
                     "pass" if ok else "fail"])
        print(f"({ptok},{qtok}): slope {fit.fitted_slope:.4f} vs {fit.theoretical_slope:.4f} "
              f"-> {'pass' if ok else 'fail'}")
    write_csv(os.path.join(outdir, "dispersion.csv"), header, rows)
    return EXIT_OK if all_ok else EXIT_GUARD


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def make_parser():
    parser = argparse.ArgumentParser(
        prog="runtumble",
        description="Phase-space transport-scattering laboratory with estimate certificates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a configured scenario")
    p_sim.add_argument("config")

    p_exp = sub.add_parser("exponents", help="exponent algebra tools")
    esub = p_exp.add_subparsers(dest="subcommand", required=True)
    p_solve = esub.add_parser("solve", help="derive the exponent chain for a given q")
    p_solve.add_argument("q")
    p_region = esub.add_parser("region", help="rasterize the admissible exponent region")
    p_region.add_argument("--step", type=float, default=0.05)
    p_region.add_argument("--output", default="region.csv")
    p_check = esub.add_parser("check", help="check a quadruple (r p q a)")
    p_check.add_argument("r")
    p_check.add_argument("p")
    p_check.add_argument("q")
    p_check.add_argument("a")
    p_check.add_argument("--dim", type=int, default=3)

    p_disp = sub.add_parser("dispersion", help="decay-rate fits for free transport")
    p_disp.add_argument("config")
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return run_simulate(args.config)
        if args.command == "exponents":
            if args.subcommand == "solve":
                return run_exponents_solve(args)
            if args.subcommand == "region":
                return run_exponents_region(args)
            return run_exponents_check(args)
        return run_dispersion(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GuardAbort as exc:
        print(f"guard abort: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
