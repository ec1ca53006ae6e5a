"""Command-line front end: experiment configuration, parameter sweeps, CSV emission."""

from __future__ import annotations

import argparse
import csv
import itertools
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .analytic import (
    SI_MODELS,
    SI_PER_INTERFERER,
    ChannelConfig,
    ModelConfig,
    success_curve,
)
from .geometry import DiskConfig
from .modes import MODE_FIELDS, compute_mode_probabilities
from .popularity import build_zipf
from .quadrature import DEFAULT_NODES, QuadratureSpec
from .simulator import Mode, SimConfig, run_experiment

__all__ = ["ExperimentSpec", "ThetaGrid", "main", "parse_args", "run"]

CSV_COLUMNS = [
    "theta_db",
    "theta_linear",
    "p_cache",
    "p_sir_analytic",
    "p_total_analytic",
    "p_total_sim",
    "ci_halfwidth",
    "n_users",
    "gamma_r",
    "radius",
    "alpha",
    "beta",
    "trials",
    "seed",
]

RUN_MODES = ("analytic", "simulate", "both")
SWEEPABLE = ("n_users", "gamma_r", "radius", "beta")

_DEFAULTS = {
    "mode": "analytic",
    "radius": "30",
    "library_size": "1000",
    "zipf": "1.2",
    "alpha": "4",
    "beta": "1e-5",
    "theta_db": "-10:30:2",
    "trials": "10000",
    "seed": "0",
    "si_model": SI_PER_INTERFERER,
    "out": "results.csv",
}


@dataclass(frozen=True)
class ThetaGrid:
    """Inclusive dB-valued threshold grid ``start:stop:step``."""

    start_db: float
    stop_db: float
    step_db: float

    def values_db(self) -> np.ndarray:
        span = self.stop_db - self.start_db
        n_steps = int(math.floor(span / self.step_db + 1e-9))
        return self.start_db + self.step_db * np.arange(n_steps + 1)

    def values_linear(self) -> np.ndarray:
        return 10.0 ** (self.values_db() / 10.0)


@dataclass
class ExperimentSpec:
    """Fully validated description of one CLI invocation."""

    mode: str
    n_users: int
    radius: float
    library_size: int
    gamma_r: float
    alpha: float
    beta: float
    theta_grid: ThetaGrid
    sweep: list = field(default_factory=list)  # [(parameter, [values...]), ...]
    trials: int = 10_000
    seed: int = 0
    si_model: str = SI_PER_INTERFERER
    quad_nodes: dict = field(default_factory=dict)
    output_path: str = "results.csv"

    def sweep_points(self) -> list:
        """Cartesian product of sweep values as per-point override dicts."""
        if not self.sweep:
            return [{}]
        names = [name for name, _ in self.sweep]
        return [dict(zip(names, combo)) for combo in itertools.product(*(vals for _, vals in self.sweep))]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdd2d",
        description=(
            "Evaluate the full-duplex cache-enabled D2D network model: "
            "closed-form success curves, Monte Carlo simulation, or both."
        ),
    )
    parser.add_argument("--config", help="flat key=value file; flags override file values")
    parser.add_argument("--mode", choices=RUN_MODES, help=f"what to compute (default {_DEFAULTS['mode']})")
    parser.add_argument("--n-users", dest="n_users", help="number of users N (required)")
    parser.add_argument("--radius", help=f"disk radius in meters (default {_DEFAULTS['radius']})")
    parser.add_argument("--library-size", dest="library_size", help=f"content library size m (default {_DEFAULTS['library_size']})")
    parser.add_argument("--zipf", help=f"Zipf skew exponent gamma_r (default {_DEFAULTS['zipf']})")
    parser.add_argument("--alpha", help=f"path-loss exponent, > 2 (default {_DEFAULTS['alpha']})")
    parser.add_argument("--beta", help=f"residual self-interference power ratio in [0,1] (default {_DEFAULTS['beta']})")
    parser.add_argument("--theta-db", dest="theta_db", help=f"SIR threshold grid start:stop:step in dB (default {_DEFAULTS['theta_db']})")
    parser.add_argument(
        "--sweep",
        action="append",
        default=None,
        metavar="PARAM=V1,V2,...",
        help=f"sweep one of {SWEEPABLE}; repeat the flag to sweep several (cartesian product)",
    )
    parser.add_argument("--trials", help=f"Monte Carlo trials (default {_DEFAULTS['trials']})")
    parser.add_argument("--seed", help=f"master seed for the simulator (default {_DEFAULTS['seed']})")
    parser.add_argument("--si-model", dest="si_model", choices=SI_MODELS, help="self-interference accounting (default per-interferer)")
    parser.add_argument(
        "--quad-nodes",
        dest="quad_nodes",
        metavar="LEVEL=K,...",
        help=f"override quadrature node counts per level, defaults {DEFAULT_NODES}",
    )
    parser.add_argument("--out", help=f"output CSV path (default {_DEFAULTS['out']})")
    return parser


def _read_config_file(path: str, error) -> dict:
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    error(f"--config {path}: line {lineno} is not key=value: {raw.strip()!r}")
                key, value = (part.strip() for part in line.split("=", 1))
                values[key.replace("-", "_")] = value
    except OSError as exc:
        error(f"--config: cannot read {path}: {exc}")
    return values


def _parse_int(text, flag, error, minimum=None):
    try:
        value = int(text)
    except (TypeError, ValueError):
        error(f"{flag} expects an integer, got {text!r}")
    if minimum is not None and value < minimum:
        error(f"{flag} must be at least {minimum}, got {value}")
    return value


def _parse_float(text, flag, error):
    try:
        value = float(text)
    except (TypeError, ValueError):
        error(f"{flag} expects a number, got {text!r}")
    if not math.isfinite(value):
        error(f"{flag} must be finite, got {text!r}")
    return value


def _parse_theta_grid(text, error) -> ThetaGrid:
    parts = text.split(":")
    if len(parts) != 3:
        error(f"--theta-db expects start:stop:step, got {text!r}")
    start, stop, step = (_parse_float(p, "--theta-db", error) for p in parts)
    if step <= 0:
        error(f"--theta-db step must be positive, got {step}")
    if stop < start:
        error(f"--theta-db start must not exceed stop, got {text!r}")
    return ThetaGrid(start, stop, step)


def _parse_sweep(entries, error) -> list:
    sweep = []
    for entry in entries:
        if "=" not in entry:
            error(f"--sweep expects PARAM=V1,V2,..., got {entry!r}")
        name, _, values_text = entry.partition("=")
        name = name.strip().replace("-", "_")
        if name not in SWEEPABLE:
            error(f"--sweep parameter must be one of {SWEEPABLE}, got {name!r}")
        raw_values = [v for v in values_text.split(",") if v.strip()]
        if not raw_values:
            error(f"--sweep {name} has no values")
        if name == "n_users":
            values = [_parse_int(v, "--sweep n_users", error, minimum=1) for v in raw_values]
        else:
            values = [_parse_float(v, f"--sweep {name}", error) for v in raw_values]
        sweep.append((name, values))
    return sweep


def _parse_quad_nodes(text, error) -> dict:
    overrides = {}
    for pair in text.split(","):
        pair = pair.strip()
        if not pair:
            continue
        if "=" not in pair:
            error(f"--quad-nodes expects LEVEL=K pairs, got {pair!r}")
        level, _, count = pair.partition("=")
        level = level.strip()
        if level not in DEFAULT_NODES:
            error(f"--quad-nodes level must be one of {sorted(DEFAULT_NODES)}, got {level!r}")
        overrides[level] = _parse_int(count, "--quad-nodes", error, minimum=4)
    return overrides


def _join_theta_flag(argv) -> list:
    """Fuse ``--theta-db -10:30:1`` into one token so argparse does not read the
    leading minus of the grid as an option prefix."""
    out = []
    i = 0
    while i < len(argv):
        if argv[i] == "--theta-db" and i + 1 < len(argv):
            out.append(argv[i] + "=" + argv[i + 1])
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def parse_args(argv=None) -> ExperimentSpec:
    """Parse flags (and an optional config file) into a validated ExperimentSpec.

    Usage problems exit with status 2 and a message naming the flag.
    """
    parser = _build_parser()
    args = parser.parse_args(_join_theta_flag(sys.argv[1:] if argv is None else list(argv)))
    error = parser.error

    file_values = _read_config_file(args.config, error) if args.config else {}

    def setting(name):
        flag = getattr(args, name, None)
        if flag is not None:
            return flag
        if name in file_values:
            return file_values[name]
        return _DEFAULTS.get(name)

    mode = setting("mode")
    if mode not in RUN_MODES:
        error(f"--mode must be one of {RUN_MODES}, got {mode!r}")
    si_model = setting("si_model")
    if si_model not in SI_MODELS:
        error(f"--si-model must be one of {SI_MODELS}, got {si_model!r}")

    if setting("n_users") is None:
        error("--n-users is required (flag or config file)")
    n_users = _parse_int(setting("n_users"), "--n-users", error, minimum=1)
    library_size = _parse_int(setting("library_size"), "--library-size", error, minimum=1)
    radius = _parse_float(setting("radius"), "--radius", error)
    if radius <= 0:
        error(f"--radius must be positive, got {radius}")
    gamma_r = _parse_float(setting("zipf"), "--zipf", error)
    if gamma_r < 0:
        error(f"--zipf must be nonnegative, got {gamma_r}")
    alpha = _parse_float(setting("alpha"), "--alpha", error)
    if alpha <= 2:
        error(f"--alpha must exceed 2, got {alpha}")
    beta = _parse_float(setting("beta"), "--beta", error)
    if not 0 <= beta <= 1:
        error(f"--beta must lie in [0, 1], got {beta}")
    trials = _parse_int(setting("trials"), "--trials", error, minimum=1)
    seed = _parse_int(setting("seed"), "--seed", error, minimum=0)

    theta_grid = _parse_theta_grid(setting("theta_db"), error)

    sweep_entries = args.sweep if args.sweep is not None else (
        [file_values["sweep"]] if "sweep" in file_values else []
    )
    sweep = _parse_sweep(sweep_entries, error)

    quad_text = setting("quad_nodes")
    quad_nodes = _parse_quad_nodes(quad_text, error) if quad_text else {}

    if n_users > library_size:
        error(f"--n-users ({n_users}) must not exceed --library-size ({library_size})")
    for name, values in sweep:
        if name == "n_users" and max(values) > library_size:
            error(f"--sweep n_users values must not exceed --library-size ({library_size})")
        if name == "radius" and min(values) <= 0:
            error("--sweep radius values must be positive")
        if name == "gamma_r" and min(values) < 0:
            error("--sweep gamma_r values must be nonnegative")
        if name == "beta" and not all(0 <= v <= 1 for v in values):
            error("--sweep beta values must lie in [0, 1]")

    return ExperimentSpec(
        mode=mode,
        n_users=n_users,
        radius=radius,
        library_size=library_size,
        gamma_r=gamma_r,
        alpha=alpha,
        beta=beta,
        theta_grid=theta_grid,
        sweep=sweep,
        trials=trials,
        seed=seed,
        si_model=si_model,
        quad_nodes=quad_nodes,
        output_path=setting("out"),
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _point_config(spec: ExperimentSpec, point: dict) -> ModelConfig:
    n_users = int(point.get("n_users", spec.n_users))
    radius = float(point.get("radius", spec.radius))
    gamma_r = float(point.get("gamma_r", spec.gamma_r))
    beta = float(point.get("beta", spec.beta))
    profile = build_zipf(spec.library_size, gamma_r)
    return ModelConfig(
        n_users=n_users,
        disk=DiskConfig(radius),
        profile=profile,
        channel=ChannelConfig(alpha=spec.alpha, beta=beta),
    )


def run(spec: ExperimentSpec) -> int:
    """Execute the experiment, write the CSV, and print the summary.

    Returns the process exit code: 0 on success, 3 on output I/O failure.
    """
    thetas_db = spec.theta_grid.values_db()
    thetas = spec.theta_grid.values_linear()
    quad = QuadratureSpec(nodes_per_level={**DEFAULT_NODES, **spec.quad_nodes})
    simulate = spec.mode in ("simulate", "both")
    analytic = spec.mode in ("analytic", "both")

    rows = []
    gap_overall = None
    for point in spec.sweep_points():
        cfg = _point_config(spec, point)
        label = " ".join(
            f"{k}={v}"
            for k, v in (
                ("n_users", cfg.n_users),
                ("gamma_r", cfg.profile.gamma_r),
                ("radius", cfg.disk.radius),
                ("alpha", cfg.channel.alpha),
                ("beta", cfg.channel.beta),
            )
        )
        mp = compute_mode_probabilities(cfg.profile, cfg.n_users)
        print(f"== {label} ==")
        print("  " + "  ".join(f"{name[2:].upper().replace('_', '-')}={getattr(mp, name):.6f}" for name in MODE_FIELDS))
        print(f"  P-TX={mp.p_tx:.6f}")

        curve_a = success_curve(cfg, thetas, quad, spec.si_model) if analytic else None
        curve_s = None
        if simulate:
            sim = SimConfig(trials=spec.trials, master_seed=spec.seed, si_model=spec.si_model)
            curve_s, report = run_experiment(cfg, sim, thetas)
            freqs = report.mode_frequencies
            print("  simulated mode frequencies: " + "  ".join(
                f"{mode.name.replace('_', '-')}={freqs[mode]:.6f}" for mode in Mode
            ))
        if analytic and simulate:
            gap = float(np.max(np.abs(curve_a.p_total - curve_s.p_total)))
            at_db = float(thetas_db[int(np.argmax(np.abs(curve_a.p_total - curve_s.p_total)))])
            print(f"  max |p_total_analytic - p_total_sim| = {gap:.6f} at theta_db={at_db:g}")
            gap_overall = gap if gap_overall is None else max(gap_overall, gap)

        p_cache = float(curve_a.p_cache) if curve_a is not None else (
            float(curve_s.p_cache) if curve_s is not None else None
        )
        for i, theta_db in enumerate(thetas_db):
            rows.append(
                {
                    "theta_db": _fmt(float(theta_db)),
                    "theta_linear": _fmt(float(thetas[i])),
                    "p_cache": _fmt(p_cache),
                    "p_sir_analytic": _fmt(float(curve_a.p_sir[i])) if curve_a is not None else "",
                    "p_total_analytic": _fmt(float(curve_a.p_total[i])) if curve_a is not None else "",
                    "p_total_sim": _fmt(float(curve_s.p_total[i])) if curve_s is not None else "",
                    "ci_halfwidth": _fmt(float(curve_s.ci_halfwidth[i])) if curve_s is not None else "",
                    "n_users": _fmt(cfg.n_users),
                    "gamma_r": _fmt(cfg.profile.gamma_r),
                    "radius": _fmt(cfg.disk.radius),
                    "alpha": _fmt(cfg.channel.alpha),
                    "beta": _fmt(cfg.channel.beta),
                    "trials": _fmt(spec.trials) if simulate else "",
                    "seed": _fmt(spec.seed) if simulate else "",
                }
            )

    try:
        with open(spec.output_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
    except OSError as exc:
        print(f"fdd2d: cannot write {spec.output_path}: {exc}", file=sys.stderr)
        return 3
    if gap_overall is not None:
        print(f"overall max analytic-vs-simulated gap: {gap_overall:.6f}")
    print(f"wrote {len(rows)} rows to {spec.output_path}")
    return 0


def main(argv=None):
    sys.exit(run(parse_args(argv)))


if __name__ == "__main__":
    main()
