"""Regenerates the four workbench tables as CSV artifacts and grades them.

Each table carries a status: `pass` when its quantitative rule holds,
`trend` for the shape-only tables whose historical axes carry no stated
units, `fail` otherwise.  All artifacts are deterministic for a fixed seed,
so two runs produce byte-identical trees.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

import numpy as np

from . import laser, optimizer
from .config import RunConfig
from .csvio import emit_csv

#: Pump energies of the input-energy study, J.
ENERGY_SET = tuple(e * 1e-6 for e in
                   (140, 150, 200, 250, 500, 1000, 1500, 2000, 2500,
                    3000, 3500, 4000))
#: Time steps of the step-duration study, s.
DT_SET = tuple(d * 1e-12 for d in
               (5, 2.5, 1, 0.1, 0.09, 0.08, 0.07, 0.06, 0.05, 0.04, 0.03,
                0.02, 0.01))
#: Sample times of the ramp replay, in units of the final listed time.
RAMP_TIMES = (0.2, 1.3, 1.7, 2.2, 2.7, 3.3, 3.6, 4.1, 4.3, 4.5, 4.6,
              4.7, 4.8, 4.9, 5.0)

#: Acceptance band for the 140 uJ pulse width, s.
FWHM_140_BAND = (2.8e-9, 4.2e-9)
#: Widths above this pump energy must agree within this span, s.
PLATEAU_FROM = 2000e-6
PLATEAU_SPAN = 0.05e-9
#: Output energy may not exceed this multiple of the stored energy.
ENERGY_BOUND = 1.05
#: Relative change allowed when halving the time step.
CONVERGENCE_TOL = 0.02
#: Regression quality for the comparison-count scaling.
R2_MIN = 0.95

TRACE_ROWS = 2000  # decimation target for the pulse-trace artifact


@dataclass(frozen=True)
class ManifestEntry:
    table: str
    output_file: str
    status: str  # pass | trend | fail
    tolerance: str


@dataclass(frozen=True)
class ReproManifest:
    entries: tuple[ManifestEntry, ...]

    @property
    def failed(self) -> bool:
        return any(e.status == "fail" for e in self.entries)


def _check_writable(out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    probe = os.path.join(out_dir, ".write_probe")
    with open(probe, "w") as fh:
        fh.write("")
    os.remove(probe)


def _pulse_trace_table(cfg: RunConfig, out_dir: str) -> ManifestEntry:
    trace = laser.simulate(cfg.laser)
    stride = max(1, len(trace) // TRACE_ROWS)
    t, n, phi = trace.t[::stride], trace.n[::stride], trace.phi[::stride]
    eout, g0 = trace.e_out[::stride], trace.g0[::stride]
    path = os.path.join(out_dir, "table1_pulse_trace.csv")
    emit_csv(zip(t, n, phi, eout, g0),
             [("t_s", "float"), ("n_m3", "float"), ("phi_m3", "float"),
              ("eout_J", "float"), ("g0", "float")], path)
    k = int(np.argmax(trace.phi))
    single_pulse = (0 < k < len(trace) - 1
                    and trace.phi[-1] < 1e-3 * trace.phi[k])
    metrics = laser.pulse_metrics(trace)
    ok = single_pulse and metrics.fwhm_width > 0
    return ManifestEntry("table1", os.path.basename(path),
                         "trend" if ok else "fail",
                         "shape only: single pulse, tail < 1e-3 of peak")


def _ramp_table(cfg: RunConfig, out_dir: str) -> ManifestEntry:
    opt = cfg.optimize
    schedule = optimizer.map_schedule(opt.gap, opt.drive_energy,
                                      safety=opt.safety)
    # replay the historical sample times, scaled onto [0, tau]
    t_max = RAMP_TIMES[-1]
    samples = [(t, schedule.drive_energy * (t / t_max)) for t in RAMP_TIMES]
    path = os.path.join(out_dir, "table2_ramp.csv")
    emit_csv(samples, [("time_frac", "float"), ("drive_level", "float")], path)
    drives = [d for _, d in samples]
    monotone = all(b >= a for a, b in zip(drives, drives[1:]))
    admissible = schedule.admissible
    return ManifestEntry("table2", os.path.basename(path),
                         "trend" if (monotone and admissible) else "fail",
                         "shape only: monotone ramp, tau*g^2 >= E")


def _sweep_rows_csv(rows, key_name, path):
    data = [(r.param, r.metrics.peak_power, r.metrics.fwhm_width,
             r.metrics.total_out_energy) for r in rows if r.ok]
    emit_csv(data, [(key_name, "float"), ("peak_power_W", "float"),
                    ("fwhm_s", "float"), ("total_out_J", "float")], path)


def _dt_sweep_table(cfg: RunConfig, out_dir: str) -> ManifestEntry:
    rows = laser.sweep_timestep(cfg.laser, DT_SET)
    path = os.path.join(out_dir, "table3_dt_sweep.csv")
    _sweep_rows_csv(rows, "dt_s", path)
    # convergence rule: halving the base step changes peak power and width < 2%
    pair = laser.sweep_timestep(cfg.laser, (cfg.laser.dt, cfg.laser.dt / 2.0))
    ok = all(r.ok for r in pair)
    if ok:
        a, b = pair[0].metrics, pair[1].metrics
        ok = (abs(a.peak_power - b.peak_power) / b.peak_power < CONVERGENCE_TOL
              and abs(a.fwhm_width - b.fwhm_width) / b.fwhm_width < CONVERGENCE_TOL)
    return ManifestEntry("table3_dt", os.path.basename(path),
                         "pass" if ok else "fail",
                         f"peak power and FWHM change < {CONVERGENCE_TOL:.0%} "
                         "under dt halving")


def _energy_sweep_table(cfg: RunConfig, out_dir: str) -> ManifestEntry:
    rows = laser.sweep_energy(cfg.laser, ENERGY_SET)
    path = os.path.join(out_dir, "table3_energy_sweep.csv")
    _sweep_rows_csv(rows, "e_in_J", path)
    ok = all(r.ok for r in rows)
    if ok:
        fwhm = [r.metrics.fwhm_width for r in rows]
        power = [r.metrics.peak_power for r in rows]
        ok = all(b <= a for a, b in zip(fwhm, fwhm[1:]))
        ok = ok and FWHM_140_BAND[0] <= fwhm[0] <= FWHM_140_BAND[1]
        plateau = [r.metrics.fwhm_width for r in rows
                   if r.param >= PLATEAU_FROM]
        ok = ok and (max(plateau) - min(plateau)) < PLATEAU_SPAN
        above_150 = [p for r, p in zip(rows, power) if r.param > 150e-6]
        ok = ok and all(b > a for a, b in zip(above_150, above_150[1:]))
        for r in rows:
            est = laser.derive_params(
                replace(cfg.laser, e_in=r.param)).e_stored
            ok = ok and r.metrics.total_out_energy <= ENERGY_BOUND * est
    return ManifestEntry(
        "table3_energy", os.path.basename(path), "pass" if ok else "fail",
        f"non-increasing FWHM; 140 uJ width in [{FWHM_140_BAND[0]:g}, "
        f"{FWHM_140_BAND[1]:g}] s; plateau span < {PLATEAU_SPAN:g} s; "
        f"rising peak power; total <= {ENERGY_BOUND} x stored")


def _scaling_table(cfg: RunConfig, out_dir: str, seed: int) -> ManifestEntry:
    opt = cfg.optimize
    rows = optimizer.scaling_experiment(opt.sizes, trials=opt.trials, seed=seed)
    path = os.path.join(out_dir, "table4_scaling.csv")
    # wall time is intentionally absent: the artifact tree must be
    # byte-identical across runs, and comparisons are the deterministic signal
    emit_csv([(r.n, r.mean_comparisons, r.trials) for r in rows],
             [("n", "int"), ("mean_comparisons", "float"), ("trials", "int")],
             path)
    x = np.log([r.n for r in rows])
    y = np.array([r.mean_comparisons for r in rows])
    slope, intercept = np.polyfit(x, y, 1)
    fit = intercept + slope * x
    ss_res = float(((y - fit) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    ok = r2 >= R2_MIN and all(r.bound_ok for r in rows)
    return ManifestEntry("table4", os.path.basename(path),
                         "pass" if ok else "fail",
                         f"R^2(mean comparisons ~ ln n) >= {R2_MIN}; "
                         "comparisons <= ceil(log2 k) + 1 on every run")


def reproduce(cfg: RunConfig, out_dir: str, seed: int) -> ReproManifest:
    """Regenerate every table artifact under out_dir and write the manifest."""
    _check_writable(out_dir)
    entries = (
        _pulse_trace_table(cfg, out_dir),
        _ramp_table(cfg, out_dir),
        _dt_sweep_table(cfg, out_dir),
        _energy_sweep_table(cfg, out_dir),
        _scaling_table(cfg, out_dir, seed),
    )
    emit_csv([(e.table, e.output_file, e.status, e.tolerance) for e in entries],
             [("table", "str"), ("output_file", "str"), ("status", "str"),
              ("tolerance", "str")],
             os.path.join(out_dir, "manifest.csv"))
    return ReproManifest(entries=entries)
