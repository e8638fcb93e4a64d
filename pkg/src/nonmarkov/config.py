"""Run configuration: flat ``key = value`` files, command-line overrides, defaults.

All frequencies in a run configuration are cyclic MHz (ν); the library works
in angular units, ω = 2πν rad/μs.  Times are μs.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
from scipy import constants

from .dynamics import ChannelConfig, EnsembleConfig
from .errors import ConfigError
from .measures import MeasureConfig
from .noise import TWO_PI, SpectralModel

EXPERIMENTS = ("sweep", "channels", "decompose", "trajectory")
MODES = ("analytic", "bessel", "mc")
CHANNEL_LABELS = ("s", "a", "sa", "none")


def _default_grid() -> tuple[float, ...]:
    return parse_grid("0.02:0.20:0.01")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved parameters of one experiment run."""

    experiment: str
    lam: float = 2e-4
    gamma: float = 0.9
    theta: float | None = 150.0
    temperature: float | None = None
    omega0: float = 0.05
    omega0_ancilla: float = 0.19
    omega0_grid: tuple[float, ...] = field(default_factory=_default_grid)
    omega_j: float = 5000.0
    omega_s: float = 0.0
    omega_a: float = 0.0
    ensemble: int = 150
    seed: int = 0
    dt: float = 0.01
    tf: float = 5.0
    channels: str = "s"
    mode: str = "analytic"
    out: str | None = None
    workers: int = 1
    parallel_sweep: bool = False
    smooth_window: int | None = None
    epsilon_plus: float = 1e-12
    rank_floor: float = 1e-12
    dtheta: float = 1e-5

    # --- derived objects -------------------------------------------------------

    @property
    def theta_rad(self) -> float:
        """Bath temperature as an angular frequency k_B T/ħ in rad/μs."""
        if self.temperature is not None:
            return constants.k * self.temperature / constants.hbar * 1e-6
        return TWO_PI * self.theta

    def model(self, omega0: float | None = None) -> SpectralModel:
        """Drude-Lorentz comb at base frequency ``omega0`` (cyclic MHz)."""
        nu0 = self.omega0 if omega0 is None else omega0
        return SpectralModel.drude_lorentz(
            TWO_PI * self.lam,
            TWO_PI * self.gamma,
            self.theta_rad,
            TWO_PI * nu0,
            n_modes=int(math.floor(self.omega_j / nu0 + 1e-9)),
        )

    def channel_config(self, channels: str | None = None) -> ChannelConfig:
        return ChannelConfig.from_label(
            self.channels if channels is None else channels,
            model_s=self.model(self.omega0),
            model_a=self.model(self.omega0_ancilla),
            omega_s=TWO_PI * self.omega_s,
            omega_a=TWO_PI * self.omega_a,
        )

    def ensemble_config(self) -> EnsembleConfig:
        return EnsembleConfig.from_horizon(self.tf, self.dt, self.ensemble, self.seed)

    def measure_config(self) -> MeasureConfig:
        return MeasureConfig(t_f=self.tf, eps_plus=self.epsilon_plus, smooth_window=self.smooth_window, rank_floor=self.rank_floor)

    def header_lines(self) -> list[str]:
        """``key = value`` lines echoing every resolved field."""
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name == "omega0_grid":
                value = ",".join(repr(v) for v in value)
            lines.append(f"{f.name} = {value}")
        return lines


# --- parsing -------------------------------------------------------------------

def _as_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return value


def _as_int(text: str) -> int:
    return int(text, 0) if not isinstance(text, int) else text


def _as_bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _as_optional(conv):
    def parse(text):
        if str(text).strip().lower() in ("none", ""):
            return None
        return conv(text)

    return parse


def parse_grid(text: str) -> tuple[float, ...]:
    """``lo:hi:step`` (inclusive of hi) or a comma-separated list."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be lo:hi:step, got {text!r}")
        lo, hi, step = (_as_float(p) for p in parts)
        if step <= 0:
            raise ValueError("grid step must be positive")
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        if n < 1:
            raise ValueError(f"empty grid {text!r}")
        # Round to 12 decimals so 0.02 + 8*0.01 prints as 0.1, not 0.09999999999999999.
        return tuple(round(lo + k * step, 12) for k in range(n))
    return tuple(_as_float(p) for p in text.split(",") if p.strip())


_PARSERS: dict[str, Any] = {
    "experiment": str,
    "lam": _as_float,
    "gamma": _as_float,
    "theta": _as_optional(_as_float),
    "temperature": _as_optional(_as_float),
    "omega0": _as_float,
    "omega0_ancilla": _as_float,
    "omega0_grid": parse_grid,
    "omega_j": _as_float,
    "omega_s": _as_float,
    "omega_a": _as_float,
    "ensemble": _as_int,
    "seed": _as_int,
    "dt": _as_float,
    "tf": _as_float,
    "channels": str,
    "mode": str,
    "out": _as_optional(str),
    "workers": _as_int,
    "parallel_sweep": _as_bool,
    "smooth_window": _as_optional(_as_int),
    "epsilon_plus": _as_float,
    "rank_floor": _as_float,
    "dtheta": _as_float,
}
_ALIASES = {"n": "ensemble", "n_realizations": "ensemble", "t_f": "tf", "eps_plus": "epsilon_plus", "lambda": "lam"}


def _convert(key: str, raw: Any, where: str) -> Any:
    key = _ALIASES.get(key, key)
    if key not in _PARSERS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    if not isinstance(raw, str):
        return key, raw
    try:
        return key, _PARSERS[key](raw.strip())
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from None


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    values: dict[str, Any] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{path}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        key, value = _convert(key.lower(), raw, where)
        values[key] = (value, where)
    return values


def validate(cfg: RunConfig, origin: Mapping[str, str] | None = None) -> RunConfig:
    """Check cross-field invariants; messages name the key and where it was set."""
    origin = origin or {}

    def fail(key: str, msg: str):
        where = origin.get(key, "default")
        raise ConfigError(f"{where}: {key}: {msg}")

    if cfg.experiment not in EXPERIMENTS:
        fail("experiment", f"must be one of {', '.join(EXPERIMENTS)}, got {cfg.experiment!r}")
    for key in ("lam", "gamma", "omega0", "omega0_ancilla", "omega_j", "dt", "tf", "dtheta"):
        if not getattr(cfg, key) > 0:
            fail(key, f"must be > 0, got {getattr(cfg, key)!r}")
    if cfg.theta is not None and cfg.temperature is not None:
        if "theta" in origin and "temperature" in origin:
            fail("temperature", "theta and temperature are mutually exclusive")
    if cfg.theta is None and cfg.temperature is None:
        fail("theta", "either theta or temperature is required")
    if cfg.temperature is not None and not cfg.temperature > 0:
        fail("temperature", "must be > 0")
    if cfg.temperature is None and not cfg.theta > 0:
        fail("theta", "must be > 0")
    grid = np.asarray(cfg.omega0_grid, dtype=float)
    if grid.size == 0:
        fail("omega0_grid", "must contain at least one point")
    if np.any(grid <= 0):
        fail("omega0_grid", "all base frequencies must be > 0")
    if np.any(np.diff(grid) <= 0):
        fail("omega0_grid", "must be strictly increasing")
    if cfg.ensemble < 1:
        fail("ensemble", f"must be >= 1, got {cfg.ensemble}")
    if cfg.seed < 0 or cfg.seed >= 2**64:
        fail("seed", "must be an unsigned 64-bit integer")
    if cfg.workers < 1:
        fail("workers", f"must be >= 1, got {cfg.workers}")
    if cfg.tf < cfg.dt * 2:
        fail("tf", "horizon must span at least two time steps")
    if cfg.channels not in CHANNEL_LABELS:
        fail("channels", f"must be one of {', '.join(CHANNEL_LABELS)}, got {cfg.channels!r}")
    if cfg.mode not in MODES:
        fail("mode", f"must be one of {', '.join(MODES)}, got {cfg.mode!r}")
    if cfg.smooth_window is not None and (cfg.smooth_window < 3 or cfg.smooth_window % 2 == 0):
        fail("smooth_window", "must be an odd integer >= 3")
    if cfg.epsilon_plus < 0:
        fail("epsilon_plus", "must be >= 0")
    if not cfg.rank_floor > 0:
        fail("rank_floor", "must be > 0")
    return cfg


def parse_config(path: str | Path | None = None, flags: Mapping[str, Any] | None = None, experiment: str | None = None) -> RunConfig:
    """Resolve a RunConfig with precedence flags > file > defaults.

    ``flags`` maps config keys to raw strings or typed values; ``None`` values
    are treated as unset.  ``experiment`` (e.g. the CLI subcommand) overrides
    any ``experiment`` key in the file.
    """
    values: dict[str, Any] = {}
    origin: dict[str, str] = {}
    if path is not None:
        for key, (value, where) in read_config_file(path).items():
            values[key] = value
            origin[key] = where
    for key, raw in (flags or {}).items():
        if raw is None:
            continue
        key, value = _convert(key, raw, f"--{key.replace('_', '-')}")
        values[key] = value
        origin[key] = f"--{key.replace('_', '-')}"
    if experiment is not None:
        values["experiment"] = experiment
        origin["experiment"] = "command line"
    if "experiment" not in values:
        raise ConfigError("no experiment given (expected one of: " + ", ".join(EXPERIMENTS) + ")")
    # An explicit temperature replaces the default theta unless theta was also set.
    if values.get("temperature") is not None and "theta" not in values:
        values["theta"] = None
    if "omega0_grid" in values:
        values["omega0_grid"] = tuple(float(v) for v in values["omega0_grid"])
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:  # pragma: no cover - guarded by _PARSERS
        raise ConfigError(str(exc)) from None
    return validate(cfg, origin)
