"""Command-line front end.

    inscycle {solve|sweep|simulate|cycles|density|reproduce}
             [--config cfg.json] [--set block.key=value]... [--out DIR]

Data goes to files (and CSV to stdout where noted); diagnostics go to
stderr.  Exit codes: 0 success, 1 no equilibrium / assumption failure,
2 configuration error.  The environment variable INSCYCLE_OUT overrides
the output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import acceptance, svgplot
from .config import ExperimentConfig, apply_overrides, load_config
from .cycles import analyze_cycles, stationary_density
from .dynamics import build_dynamics, simulate
from .errors import ConfigError, InscycleError, NoEquilibrium
from .solver import save_solution, solve_equilibrium, sweep

OUT_ENV = "INSCYCLE_OUT"


def _log(msg):
    print(msg, file=sys.stderr)


def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                f"{v:.17g}" if isinstance(v, float) else str(v)
                for v in row) + "\n")


def _outdir(cfg: ExperimentConfig, args) -> Path:
    directory = cfg.output.directory
    if args.out:
        directory = args.out
    if os.environ.get(OUT_ENV):
        directory = os.environ[OUT_ENV]
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _solved(cfg: ExperimentConfig):
    sol = solve_equilibrium(cfg.market, cfg.solver)
    _log(f"equilibrium solved: M_low={sol.M_low:.6f} M_high={sol.M_high:.6f} "
         f"({sol.diagnostics['objective_evaluations']} shots)")
    return sol


def cmd_solve(cfg, args):
    sol = _solved(cfg)
    out = _outdir(cfg, args)
    save_solution(sol, out / "equilibrium.csv", out / "equilibrium.json")
    _log(f"wrote {out / 'equilibrium.csv'} and {out / 'equilibrium.json'}")
    if cfg.output.emit_svg:
        g = sol.grid
        svgplot.line_plot(out / "u_vs_M.svg", g, sol.u,
                          title="Market-to-book ratio", xlabel="M",
                          ylabel="u(M)")
        svgplot.line_plot(out / "p_vs_M.svg", g, sol.p_star,
                          title="Equilibrium price", xlabel="M",
                          ylabel="p*(M)")
        svgplot.line_plot(out / "Y_vs_M.svg", g, sol.Y_star,
                          title="Aggregate investment", xlabel="M",
                          ylabel="Y*(M)")
    return 0


def cmd_sweep(cfg, args):
    axis = cfg.sweep.axis
    if axis == "lambda":
        axis = "lam"
    rows = sweep(cfg.market, axis, cfg.sweep.values, cfg.solver)
    out = _outdir(cfg, args)
    path = out / f"sweep_{axis}.csv"
    _write_csv(path, ("value", "M_low", "M_high", "dM", "status"),
               [(r.value,
                 r.M_low if r.M_low is not None else "",
                 r.M_high if r.M_high is not None else "",
                 r.dM if r.dM is not None else "",
                 r.status) for r in rows])
    for r in rows:
        if r.status == "ok":
            _log(f"{axis}={r.value}: M_low={r.M_low:.4f} M_high={r.M_high:.4f}")
        else:
            _log(f"{axis}={r.value}: {r.status} ({r.message})")
    _log(f"wrote {path}")
    return 0


def cmd_simulate(cfg, args):
    sol = _solved(cfg)
    dyn = build_dynamics(sol)
    res = simulate(dyn, cfg.simulation, record_stride=cfg.output.stride)
    out = _outdir(cfg, args)
    for i, (t, M) in enumerate(res.paths):
        path = out / (f"path_{i}.csv" if len(res.paths) > 1 else "path.csv")
        _write_csv(path, ("t", "M"), zip(t.tolist(), M.tolist()))
        _log(f"wrote {path}")
    hist = res.histogram
    _write_csv(out / "occupancy.csv", ("bin_left", "bin_right", "fraction"),
               zip(hist.edges[:-1].tolist(), hist.edges[1:].tolist(),
                   hist.fractions.tolist()))
    _log(f"wrote {out / 'occupancy.csv'} "
         f"(mean capacity {res.mean_capacity:.4f})")
    if cfg.output.emit_svg and res.paths:
        t, M = res.paths[0]
        svgplot.line_plot(out / "path.svg", t, M, title="Capacity path",
                          xlabel="t", ylabel="M")
    return 0


def cmd_cycles(cfg, args):
    sol = _solved(cfg)
    cyc = analyze_cycles(build_dynamics(sol), cfg.solver.grid_size)
    out = _outdir(cfg, args)
    _write_csv(out / "durations.csv", ("M", "Ts", "Th"),
               zip(cyc.grid.tolist(), cyc.Ts.tolist(), cyc.Th.tolist()))
    summary = {
        "soft_duration": cyc.soft_duration,
        "hard_duration": cyc.hard_duration,
        "cycle_duration": cyc.cycle_duration,
        "kappa": cyc.kappa,
    }
    with open(out / "cycles.json", "w", newline="\n") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    _log(f"soft={cyc.soft_duration:.2f} hard={cyc.hard_duration:.2f} "
         f"cycle={cyc.cycle_duration:.2f}")
    _log(f"wrote {out / 'durations.csv'} and {out / 'cycles.json'}")
    return 0


def cmd_density(cfg, args):
    sol = _solved(cfg)
    dyn = build_dynamics(sol)
    n = cfg.solver.grid_size
    grid = np.linspace(dyn.M_low, dyn.M_high, n)
    density, kappa = stationary_density(dyn, n)
    out = _outdir(cfg, args)
    _write_csv(out / "density.csv", ("M", "pi"),
               zip(grid.tolist(), density.tolist()))
    _log(f"kappa={kappa:.6g}; wrote {out / 'density.csv'}")
    if cfg.output.emit_svg:
        svgplot.line_plot(out / "density.svg", grid, density,
                          title="Stationary capacity density", xlabel="M",
                          ylabel="pi(M)")
    return 0


def cmd_reproduce(cfg, args):
    results = acceptance.run_all()
    width = max(len(r.name) for r in results)
    all_ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  {r.detail}")
        all_ok &= r.passed
    return 0 if all_ok else 1


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "cycles": cmd_cycles,
    "density": cmd_density,
    "reproduce": cmd_reproduce,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="inscycle",
        description="Robust insurance-market equilibrium experiments")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON experiment configuration")
    parser.add_argument("--set", dest="overrides", action="append",
                        default=[], metavar="BLOCK.KEY=VALUE",
                        help="override a config field, e.g. market.rho=0.2")
    parser.add_argument("--out", help="output directory")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, args.overrides)
    except ConfigError as exc:
        _log(f"configuration error: {exc}")
        return 2

    try:
        return COMMANDS[args.command](cfg, args)
    except NoEquilibrium as exc:
        _log(f"no equilibrium: {exc}")
        return 1
    except InscycleError as exc:
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
