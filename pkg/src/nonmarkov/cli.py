"""Command-line entry point: ``nonmarkov {sweep,channels,decompose,trajectory}``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import CHANNEL_LABELS, EXPERIMENTS, parse_config
from .errors import ConfigError, DomainError
from .experiments import RUNNERS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

# flag name -> config key; values are passed through as strings so the
# config parser reports malformed input with the flag name.
_FLAGS = {
    "--out": "out",
    "--seed": "seed",
    "--ensemble": "ensemble",
    "--omega0": "omega0",
    "--omega0-ancilla": "omega0_ancilla",
    "--omega0-grid": "omega0_grid",
    "--tf": "tf",
    "--dt": "dt",
    "--channels": "channels",
    "--mode": "mode",
    "--workers": "workers",
    "--theta": "theta",
    "--temperature": "temperature",
    "--smooth-window": "smooth_window",
}

_HELP = {
    "--out": "output CSV path (default: stdout)",
    "--seed": "master seed (unsigned 64-bit)",
    "--ensemble": "number of noise realizations N",
    "--omega0": "base frequency of the system comb, MHz",
    "--omega0-ancilla": "base frequency of the ancilla comb, MHz",
    "--omega0-grid": "sweep grid lo:hi:step in MHz (inclusive)",
    "--tf": "time horizon, μs",
    "--dt": "time step, μs",
    "--channels": "noisy qubits: " + "|".join(CHANNEL_LABELS),
    "--mode": "analytic|bessel|mc",
    "--workers": "worker processes for ensemble averages",
    "--theta": "bath temperature as a frequency k_B T/h, MHz",
    "--temperature": "bath temperature in kelvin (replaces --theta)",
    "--smooth-window": "Savitzky-Golay window for QFI flows (odd, >= 3)",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nonmarkov",
        description="Dephasing of a Bell pair under sum-of-sinusoids noise: non-Markovianity measures and QFI flows.",
    )
    sub = parser.add_subparsers(dest="experiment", metavar="EXPERIMENT")
    sub.required = True
    descriptions = {
        "sweep": "N0, BLP and RHP over a grid of base frequencies",
        "channels": "system-only, ancilla-only and both-channel trajectories with QFI flows",
        "decompose": "SLD-based QFI and per-channel flow decomposition",
        "trajectory": "one trajectory with all measure curves",
    }
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=descriptions[name])
        p.add_argument("--config", metavar="PATH", help="flat key = value config file")
        for flag, key in _FLAGS.items():
            p.add_argument(flag, dest=key, metavar="X", help=_HELP[flag])
        p.add_argument(
            "--parallel-sweep", dest="parallel_sweep", action="store_const", const="true",
            help="process sweep points in parallel (uses --workers)",
        )
    return parser


def check_writable(out: str | None) -> None:
    """Fail early, before any computation, if ``out`` cannot be created."""
    if out is None:
        return
    parent = Path(out).resolve().parent
    if not parent.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {parent}")
    if not os.access(parent, os.W_OK):
        raise PermissionError(f"output directory is not writable: {parent}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    flags = {key: getattr(args, key) for key in list(_FLAGS.values()) + ["parallel_sweep"]}
    try:
        cfg = parse_config(args.config, flags, experiment=args.experiment)
        check_writable(cfg.out)
        RUNNERS[cfg.experiment](cfg)
    except ConfigError as exc:
        print(f"nonmarkov: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, FloatingPointError, ArithmeticError) as exc:
        print(f"nonmarkov: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"nonmarkov: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
