"""Command-line entry point.

Subcommands: laser simulate|sweep-energy|sweep-dt, tunnel,
optimize run|scaling, dmft run, reproduce.  Exit codes: 0 success,
2 any failed run or table, 64 usage error, 65 config error.
"""
from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import dmft, laser, optimizer
from .reproduce import DT_SET, ENERGY_SET, reproduce as run_reproduce
from .config import RunConfig, load_config
from .csvio import emit_csv, format_float
from .errors import ConfigFileError, WorkbenchError
from .tunneling import TunnelBarrier, transmission

EXIT_OK = 0
EXIT_FAIL = 2
EXIT_USAGE = 64
EXIT_CONFIG = 65


class _Parser(argparse.ArgumentParser):
    """argparse with the workbench usage exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in raw.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {raw!r}")


def build_parser() -> _Parser:
    # shared flags are legal both before and after the subcommand; SUPPRESS
    # keeps a later parser from clobbering a value set by an earlier one
    shared = _Parser(add_help=False)
    shared.add_argument("--config", metavar="PATH", default=argparse.SUPPRESS,
                        help="workbench config file (section.key = value lines)")
    shared.add_argument("--out", metavar="DIR", default=argparse.SUPPRESS,
                        help="output directory (default: config output_dir)")
    shared.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="seed override (default: config seed)")

    p = _Parser(prog="qaw", description=__doc__, parents=[shared])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    las = sub.add_parser("laser", help="rate-equation pulse simulations")
    lsub = las.add_subparsers(dest="subcommand", required=True,
                              parser_class=_Parser)
    sim = lsub.add_parser("simulate", parents=[shared],
                          help="single pulse trace + metrics")
    sim.add_argument("--stride", type=int, default=10_000,
                     help="trace decimation stride for the CSV (1 = full)")
    swe = lsub.add_parser("sweep-energy", parents=[shared],
                          help="pulse metrics vs pump energy")
    swe.add_argument("--energies", type=_float_list,
                     default=ENERGY_SET, help="pump energies in J")
    swd = lsub.add_parser("sweep-dt", parents=[shared],
                          help="pulse metrics vs time step")
    swd.add_argument("--dts", type=_float_list, default=DT_SET,
                     help="time steps in s")

    sub.add_parser("tunnel", parents=[shared], help="barrier transmission row")

    opt = sub.add_parser("optimize", help="adiabatic global optimizer")
    osub = opt.add_subparsers(dest="subcommand", required=True,
                              parser_class=_Parser)
    osub.add_parser("run", parents=[shared], help="single instrumented run")
    osub.add_parser("scaling", parents=[shared],
                    help="comparison-count scaling experiment")

    dm = sub.add_parser("dmft", help="impurity self-consistency loop")
    dsub = dm.add_subparsers(dest="subcommand", required=True,
                             parser_class=_Parser)
    dsub.add_parser("run", parents=[shared],
                    help="run the loop and dump Green's functions")

    sub.add_parser("reproduce", parents=[shared],
                   help="regenerate all table artifacts")
    return p


def _cmd_laser_simulate(cfg: RunConfig, out_dir: str, stride: int) -> int:
    trace = laser.simulate(cfg.laser)
    metrics = laser.pulse_metrics(trace)
    stride = max(1, stride)
    path = os.path.join(out_dir, "pulse_trace.csv")
    emit_csv(zip(trace.t[::stride], trace.n[::stride], trace.phi[::stride],
                 trace.e_out[::stride], trace.g0[::stride]),
             [("t_s", "float"), ("n_m3", "float"), ("phi_m3", "float"),
              ("eout_J", "float"), ("g0", "float")], path)
    print(f"pulse: peak {metrics.peak_power:.6g} W at {metrics.peak_time:.6g} s, "
          f"FWHM {metrics.fwhm_width:.6g} s, out {metrics.total_out_energy:.6g} J")
    print(f"trace -> {path}")
    return EXIT_OK


def _sweep_to_csv(rows, key_name: str, path: str) -> int:
    emit_csv([(r.param, r.metrics.peak_power, r.metrics.fwhm_width,
               r.metrics.total_out_energy) for r in rows if r.ok],
             [(key_name, "float"), ("peak_power_W", "float"),
              ("fwhm_s", "float"), ("total_out_J", "float")], path)
    failed = [r for r in rows if not r.ok]
    for r in failed:
        print(f"row {r.param:g} failed: {r.error}", file=sys.stderr)
    print(f"{len(rows) - len(failed)}/{len(rows)} rows -> {path}")
    return EXIT_FAIL if len(failed) == len(rows) else EXIT_OK


def _cmd_tunnel(cfg: RunConfig) -> int:
    t = cfg.tunnel
    barrier = TunnelBarrier.from_ev(t.barrier_height_ev, t.particle_energy_ev,
                                    t.width_m, mass=t.mass_kg)
    result = transmission(barrier)
    print("U_eV,E_eV,L_m,k2_per_m,exponent,T")
    print(",".join(format_float(v) for v in
                   (t.barrier_height_ev, t.particle_energy_ev, t.width_m,
                    result.k2, result.exponent, result.transmission)))
    return EXIT_OK


def _cmd_optimize_run(cfg: RunConfig, out_dir: str, seed: int) -> int:
    opt = cfg.optimize
    if opt.table:
        model = optimizer.reduce(opt.table)
    else:
        rng = np.random.default_rng([seed, opt.size])
        model = optimizer.reduce(rng.random(opt.size))
    schedule = optimizer.map_schedule(opt.gap, opt.drive_energy, opt.safety,
                                      ramp_steps=opt.ramp_steps or None)
    barrier_map = optimizer.make_barrier_map(opt.energy_scale_ev,
                                             opt.length_scale_m)
    report = optimizer.evolve(model, schedule, barrier_map, seed=seed,
                              n_seeds=opt.n_seeds)
    path = os.path.join(out_dir, "optimize_run.csv")
    emit_csv([(report.best_id, report.best_energy, report.visited_count,
               report.comparison_count, report.escape_count, report.seed)],
             [("best_id", "int"), ("best_energy", "float"), ("visited", "int"),
              ("comparisons", "int"), ("escapes", "int"), ("seed", "int")],
             path)
    print(f"best id {report.best_id} energy {report.best_energy:.6g} "
          f"({report.candidate_count} candidates, "
          f"{report.comparison_count} comparisons, "
          f"{report.escape_count} escapes) -> {path}")
    return EXIT_OK


def _cmd_optimize_scaling(cfg: RunConfig, out_dir: str, seed: int) -> int:
    opt = cfg.optimize
    rows = optimizer.scaling_experiment(opt.sizes, trials=opt.trials, seed=seed)
    path = os.path.join(out_dir, "optimize_scaling.csv")
    emit_csv([(r.n, r.mean_time_s, r.mean_comparisons, r.trials) for r in rows],
             [("n", "int"), ("mean_time_s", "float"),
              ("mean_comparisons", "float"), ("trials", "int")], path)
    print(f"{len(rows)} sizes -> {path}")
    return EXIT_OK


def _cmd_dmft_run(cfg: RunConfig, out_dir: str) -> int:
    d = cfg.dmft
    params = dmft.HubbardParams(t=d.t, u=d.u, beta=d.beta, mu=d.mu)
    state = dmft.self_consistency_loop(params, alpha=d.alpha,
                                       max_iter=d.max_iter, mixing=d.mixing,
                                       n_freq=d.n_freq)
    iter_path = os.path.join(out_dir, "dmft_iterations.csv")
    emit_csv([(r.iteration, r.residual, r.re_g0_w0, r.im_g_imp_w0,
               r.im_sigma_w0) for r in state.iterate_log],
             [("iter", "int"), ("residual", "float"), ("ReG0", "float"),
              ("ImG_imp_w0", "float"), ("ImSigma_w0", "float")], iter_path)
    green_path = os.path.join(out_dir, "dmft_green.csv")
    wn = state.g_imp.frequencies
    emit_csv(zip(wn, state.g_imp.values.real, state.g_imp.values.imag,
                 state.sigma.values.real, state.sigma.values.imag),
             [("wn", "float"), ("ReG", "float"), ("ImG", "float"),
              ("ReSigma", "float"), ("ImSigma", "float")], green_path)
    word = "converged" if state.converged else "did NOT converge"
    print(f"DMFT {word} after {state.iteration} iterations "
          f"(residual {state.residual:.3e}) -> {iter_path}, {green_path}")
    return EXIT_OK if state.converged else EXIT_FAIL


def _cmd_reproduce(cfg: RunConfig, out_dir: str, seed: int) -> int:
    manifest = run_reproduce(cfg, out_dir, seed)
    for e in manifest.entries:
        print(f"{e.table}: {e.status} ({e.output_file})")
    print(f"manifest -> {os.path.join(out_dir, 'manifest.csv')}")
    return EXIT_FAIL if manifest.failed else EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(getattr(args, "config", None))
    except ConfigFileError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = getattr(args, "out", None)
    out_dir = out_dir if out_dir is not None else cfg.output_dir
    seed = getattr(args, "seed", None)
    seed = seed if seed is not None else cfg.seed
    try:
        os.makedirs(out_dir, exist_ok=True)
        if args.command == "laser":
            if args.subcommand == "simulate":
                return _cmd_laser_simulate(cfg, out_dir, args.stride)
            rows = (laser.sweep_energy(cfg.laser, args.energies)
                    if args.subcommand == "sweep-energy"
                    else laser.sweep_timestep(cfg.laser, args.dts))
            key = "e_in_J" if args.subcommand == "sweep-energy" else "dt_s"
            name = ("sweep_energy.csv" if args.subcommand == "sweep-energy"
                    else "sweep_dt.csv")
            return _sweep_to_csv(rows, key, os.path.join(out_dir, name))
        if args.command == "tunnel":
            return _cmd_tunnel(cfg)
        if args.command == "optimize":
            if args.subcommand == "run":
                return _cmd_optimize_run(cfg, out_dir, seed)
            return _cmd_optimize_scaling(cfg, out_dir, seed)
        if args.command == "dmft":
            return _cmd_dmft_run(cfg, out_dir)
        if args.command == "reproduce":
            return _cmd_reproduce(cfg, out_dir, seed)
        raise AssertionError(f"unhandled command {args.command!r}")
    except (WorkbenchError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
