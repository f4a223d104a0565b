"""Scenario runner and report emitter.

Configs are plain-text INI (key = value under [section] headers); see the
shipped files under ``scenarios/`` for the full key set.  All randomness
(jet sampling, random probe fields) flows from the single ``seed`` key,
overridable with ``--seed``; identical configs and seeds produce
byte-identical CSV artifacts apart from comment lines prefixed "#".

Subcommands::

    run <config> [--out DIR] [--seed N] [--override-tau-star]
    report <dir>
    probe-localization --dim N --alphas LIST [--out DIR]

Exit codes (one fixed code per error family)::

    0   all enabled checks passed
    1   a check failed / missing artifact
    2   ConfigError
    3   NotAdmissible
    4   BarrierViolation
    5   IncompatibleData
    6   NonzeroMeanObstruction
    7   NotReducible
    8   ConcavityViolated
    9   WindowTooSmall
    10  PreconditionFailed
    11  DegenerateFit
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (BarrierViolation, ConcavityViolated, ConfigError,
                     DegenerateFit, IncompatibleData, NonzeroMeanObstruction,
                     NotAdmissible, NotReducible, PreconditionFailed,
                     TwistedMAError, WindowTooSmall)
from .flow import MONITOR_HEADER, FlowState, run as run_flow
from .forms import BackgroundData, flat_background
from .grid import (BicomplexGrid, HermitianMatrixField, ScalarField,
                   load_field, save_field)
from .localization import localization_gap_probe
from .potential import solve_square, square_operator
from .viscosity import subsolution_check, supersolution_check

__all__ = ["ScenarioConfig", "load_config", "run_scenario", "report",
           "main", "EXIT_CODES"]

EXIT_CODES = {
    ConfigError: 2,
    NotAdmissible: 3,
    BarrierViolation: 4,
    IncompatibleData: 5,
    NonzeroMeanObstruction: 6,
    NotReducible: 7,
    ConcavityViolated: 8,
    WindowTooSmall: 9,
    PreconditionFailed: 10,
    DegenerateFit: 11,
}

_EXIT_CHECK_FAILED = 1


@dataclass
class ScenarioConfig:
    """Parsed scenario: grid, background, initial data, run and check specs."""

    grid: BicomplexGrid
    omega_plus_diag: np.ndarray
    omega_minus_diag: np.ndarray
    chi_plus_diag: np.ndarray
    chi_minus_diag: np.ndarray
    zeta_plus: float
    zeta_minus: float
    forcing: str            # "none" | "sin" | "const"
    forcing_amplitude: float
    forcing_axis: int
    initial_kind: str       # "zero" | "cosine" | "file"
    initial_amplitude: float
    initial_axis: int
    initial_mode: int
    initial_file: str
    t_end: float
    safety: float
    emit_every: int
    seed: int
    check_viscosity: bool
    check_roundtrip: bool
    jet_samples: int
    tolerance: float | None

    def __post_init__(self):
        if self.t_end <= 0:
            raise ConfigError("run: t_end must be > 0")
        if not (0 < self.safety <= 1):
            raise ConfigError("run: safety must be in (0, 1]")
        if self.emit_every < 1:
            raise ConfigError("run: emit_every must be >= 1")
        if self.tolerance is not None and self.tolerance <= 0:
            raise ConfigError("checks: tolerance must be > 0")
        if self.jet_samples < 0:
            raise ConfigError("checks: jet_samples must be >= 0")


def _diag(raw, m, what):
    vals = np.array([float(v) for v in raw.replace(",", " ").split()])
    if len(vals) == 1:
        vals = np.repeat(vals, m)
    if len(vals) != m:
        raise ConfigError(f"{what}: expected 1 or {m} diagonal entries")
    return vals


def load_config(path):
    """Parse an INI scenario file into a ScenarioConfig."""
    parser = configparser.ConfigParser()
    try:
        if not parser.read(path):
            raise ConfigError(f"cannot read config {path}")
    except configparser.Error as exc:
        raise ConfigError(f"unparseable config {path}: {exc}") from exc
    try:
        g = parser["grid"]
        k = g.getint("k")
        l = g.getint("l")
        n_raw = g.get("n", "16")
        period = g.getfloat("period", fallback=2.0 * math.pi)
        counts = [int(v) for v in n_raw.replace(",", " ").split()]
        grid = BicomplexGrid.regular(k, l, counts[0] if len(counts) == 1
                                     else counts, period=period)

        b = parser["background"] if parser.has_section("background") else {}
        get = lambda key, dflt: (b.get(key, dflt) if hasattr(b, "get") else dflt)
        omega_p = _diag(get("omega_plus", "1"), k, "omega_plus")
        omega_m = _diag(get("omega_minus", "1"), l, "omega_minus")
        chi_p = _diag(get("chi_plus", "0"), k, "chi_plus")
        chi_m = _diag(get("chi_minus", "0"), l, "chi_minus")
        zeta_p = float(get("zeta_plus", "0"))
        zeta_m = float(get("zeta_minus", "0"))
        forcing = get("forcing", "none").strip().lower()
        if forcing not in ("none", "sin", "const"):
            raise ConfigError(f"background: unknown forcing {forcing!r}")
        f_amp = float(get("forcing_amplitude", "0"))
        f_axis = int(get("forcing_axis", "0"))

        i = parser["initial"] if parser.has_section("initial") else {}
        iget = lambda key, dflt: (i.get(key, dflt) if hasattr(i, "get") else dflt)
        kind = iget("kind", "zero").strip().lower()
        if kind not in ("zero", "cosine", "file"):
            raise ConfigError(f"initial: unknown kind {kind!r}")
        amp = float(iget("amplitude", "0"))
        axis = int(iget("axis", "0"))
        mode = int(iget("mode", "1"))
        ifile = iget("file", "")
        if kind == "file" and not ifile:
            raise ConfigError("initial: kind=file needs a file path")

        r = parser["run"]
        t_end = r.getfloat("t_end")
        safety = r.getfloat("safety", fallback=0.5)
        emit_every = r.getint("emit_every", fallback=10)
        seed = r.getint("seed", fallback=0)

        c = parser["checks"] if parser.has_section("checks") else {}
        cget = lambda key, dflt: (c.get(key, dflt) if hasattr(c, "get") else dflt)
        viscosity = str(cget("viscosity", "true")).strip().lower() in ("1", "true", "yes")
        roundtrip = str(cget("roundtrip", "false")).strip().lower() in ("1", "true", "yes")
        samples = int(cget("jet_samples", "2"))
        tol_raw = str(cget("tolerance", "")).strip()
        tol = float(tol_raw) if tol_raw else None
    except ConfigError:
        raise
    except (KeyError, ValueError, configparser.Error) as exc:
        raise ConfigError(f"inconsistent config {path}: {exc}") from exc

    if not (0 <= f_axis < grid.real_dim and 0 <= axis < grid.real_dim):
        raise ConfigError("axis index out of range for the grid")
    return ScenarioConfig(
        grid=grid, omega_plus_diag=omega_p, omega_minus_diag=omega_m,
        chi_plus_diag=chi_p, chi_minus_diag=chi_m,
        zeta_plus=zeta_p, zeta_minus=zeta_m,
        forcing=forcing, forcing_amplitude=f_amp, forcing_axis=f_axis,
        initial_kind=kind, initial_amplitude=amp, initial_axis=axis,
        initial_mode=mode, initial_file=ifile,
        t_end=t_end, safety=safety, emit_every=emit_every, seed=seed,
        check_viscosity=viscosity, check_roundtrip=roundtrip,
        jet_samples=samples, tolerance=tol)


def _build_background(cfg):
    grid = cfg.grid
    const = lambda v: ScalarField(grid, np.full(grid.shape, v))
    f_fields = None
    if cfg.forcing == "sin":
        coords = grid.axis_coords(cfg.forcing_axis)
        shape = [1] * grid.real_dim
        shape[cfg.forcing_axis] = len(coords)
        vals = cfg.forcing_amplitude * np.sin(coords).reshape(shape)
        f_fields = [ScalarField(grid, np.broadcast_to(vals, grid.shape).copy())]
    elif cfg.forcing == "const":
        f_fields = [const(cfg.forcing_amplitude)]
    return BackgroundData(
        omega0_plus=HermitianMatrixField.constant(grid, "plus", np.diag(cfg.omega_plus_diag)),
        omega0_minus=HermitianMatrixField.constant(grid, "minus", np.diag(cfg.omega_minus_diag)),
        chi_plus=HermitianMatrixField.constant(grid, "plus", np.diag(cfg.chi_plus_diag)),
        chi_minus=HermitianMatrixField.constant(grid, "minus", np.diag(cfg.chi_minus_diag)),
        zeta_plus=const(cfg.zeta_plus),
        zeta_minus=const(cfg.zeta_minus),
        f_times=np.array([0.0]),
        f_fields=f_fields,
    )


def _build_initial(cfg):
    grid = cfg.grid
    if cfg.initial_kind == "zero":
        return ScalarField.zeros(grid)
    if cfg.initial_kind == "file":
        u = load_field(cfg.initial_file, spacing=grid.spacing)
        if u.grid != grid:
            raise ConfigError("initial: file grid does not match [grid] section")
        return u
    coords = grid.axis_coords(cfg.initial_axis)
    period = grid.period(cfg.initial_axis)
    shape = [1] * grid.real_dim
    shape[cfg.initial_axis] = len(coords)
    vals = cfg.initial_amplitude * np.cos(
        2.0 * np.pi * cfg.initial_mode * coords / period).reshape(shape)
    return ScalarField(grid, np.broadcast_to(vals, grid.shape).copy())


def _roundtrip_check(cfg, out):
    """Invert square(f) for a random zero-mean potential and report the error."""
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.grid
    f = ScalarField(grid, rng.standard_normal(grid.shape))
    f = ScalarField(grid, f.values - f.values.mean())
    op, om = square_operator(f)
    dec = solve_square(op, om)
    err = float(np.abs(dec.f.values - f.values).max())
    out.append(f"roundtrip_error = {err!r}")
    return err < 1e-8 * (1.0 + np.abs(f.values).max())


def run_scenario(config, out_dir, seed=None, override_tau_star=False):
    """Execute the pipeline; returns (exit_code, summary_lines)."""
    cfg = config if isinstance(config, ScenarioConfig) else load_config(config)
    if seed is not None:
        cfg.seed = int(seed)
    os.makedirs(out_dir, exist_ok=True)
    background = _build_background(cfg)
    u0 = _build_initial(cfg)

    tau = background.tau_star()
    lines = [f"tau_star = {tau!r}"]
    if math.isfinite(tau) and cfg.t_end >= tau and not override_tau_star:
        raise ConfigError(
            f"t_end {cfg.t_end} reaches tau_star {tau}; pass "
            f"--override-tau-star to probe the degeneration on purpose")

    state0 = FlowState(0.0, u0, background)
    traj = run_flow(state0, cfg.t_end, safety=cfg.safety,
                    emit_every=cfg.emit_every)
    stamp = time.strftime("%Y-%m-%dT%H:%M:%S")
    traj.write_monitor_csv(os.path.join(out_dir, "monitor.csv"),
                           comment=f"written {stamp}")
    save_field(u0, os.path.join(out_dir, "initial.bin"))
    save_field(traj.states[-1].u, os.path.join(out_dir, "final.bin"))
    lines.append(f"steps_emitted = {len(traj.rows)}")
    lines.append(f"barrier_A = {traj.barrier.A!r}")

    ok = True
    if cfg.check_viscosity and len(traj.states) >= 2:
        stack = np.stack([s.u.values for s in traj.states])
        times = np.array([s.t for s in traj.states])
        sub = subsolution_check(stack, times, background, tol=cfg.tolerance,
                                samples=cfg.jet_samples, seed=cfg.seed)
        sup = supersolution_check(stack, times, background, tol=cfg.tolerance,
                                  samples=cfg.jet_samples, seed=cfg.seed + 1)
        sub.write_csv(os.path.join(out_dir, "violations_sub.csv"))
        sup.write_csv(os.path.join(out_dir, "violations_super.csv"))
        lines.append(f"sub_check_ok = {sub.ok} ({len(sub.violations)} violations)")
        lines.append(f"super_check_ok = {sup.ok} ({len(sup.violations)} violations)")
        ok = ok and sub.ok and sup.ok
    if cfg.check_roundtrip:
        ok = _roundtrip_check(cfg, lines) and ok

    lines.append(f"checks_passed = {ok}")
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return (0 if ok else _EXIT_CHECK_FAILED), lines


def _read_monitor(path):
    rows = []
    with open(path) as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                if tuple(header) != MONITOR_HEADER:
                    raise ValueError(f"unexpected monitor header {header}")
                continue
            rows.append([float(v) for v in line.split(",")])
    if header is None or not rows:
        raise ValueError(f"{path}: empty trajectory")
    return np.array(rows)


def report(run_dir):
    """Summarize a run directory; returns the summary lines."""
    path = os.path.join(run_dir, "monitor.csv")
    if not os.path.exists(path):
        raise FileNotFoundError(f"no monitor.csv under {run_dir}")
    rows = _read_monitor(path)
    t = rows[:, 0]
    sup_u = rows[:, 1]
    lines = [f"emissions = {len(rows)}",
             f"t_final = {float(t[-1])!r}",
             f"sup_u_final = {float(sup_u[-1])!r}",
             f"worst_plus_margin = {float(np.nanmin(rows[:, 4]))!r}",
             f"worst_minus_margin = {float(np.nanmin(rows[:, 5]))!r}",
             f"min_barrier_gap_lo = {float(rows[:, 6].min())!r}",
             f"min_barrier_gap_hi = {float(rows[:, 7].min())!r}"]
    # exponential decay-rate fit of sup_u where it stays positive
    mask = (sup_u > 0) & (t > 0)
    if mask.sum() >= 2 and np.ptp(t[mask]) > 0:
        rate = -np.polyfit(t[mask], np.log(sup_u[mask]), 1)[0]
        lines.append(f"fitted_decay_rate = {float(rate)!r}")
    else:
        lines.append("fitted_decay_rate = nan")
    return lines


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="twistedma",
        description="Desk-scale laboratory for the twisted parabolic "
                    "complex Monge-Ampere flow.")
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="execute a scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default="out")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--override-tau-star", action="store_true")

    p_rep = subs.add_parser("report", help="summarize a run directory")
    p_rep.add_argument("dir")

    p_loc = subs.add_parser("probe-localization",
                            help="measure the penalization decay exponent")
    p_loc.add_argument("--dim", type=int, default=1)
    p_loc.add_argument("--alphas", default="1e1,1e2,1e3,1e4")
    p_loc.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            code, lines = run_scenario(args.config, args.out, seed=args.seed,
                                       override_tau_star=args.override_tau_star)
            print("\n".join(lines))
            return code
        if args.command == "report":
            try:
                print("\n".join(report(args.dir)))
            except (FileNotFoundError, ValueError) as exc:
                print(f"error: {exc}", file=sys.stderr)
                return _EXIT_CHECK_FAILED
            return 0
        alphas = [float(v) for v in args.alphas.replace(",", " ").split()]
        result = localization_gap_probe(n=args.dim, alphas=alphas)
        print("alpha,distance,hessian_norm")
        for a, d, h in zip(result.alphas, result.distances, result.hessian_norms):
            print(f"{float(a)!r},{float(d)!r},{float(h)!r}")
        print(f"fitted_exponent = {result.fitted_exponent!r}")
        print(f"reference_exponent = {result.reference_exponent!r}")
        print(f"vacuous = {result.vacuous}")
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            result.write_csv(os.path.join(args.out, "probe.csv"))
        return 0
    except TwistedMAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CODES.get(type(exc), _EXIT_CHECK_FAILED)


if __name__ == "__main__":
    sys.exit(main())
