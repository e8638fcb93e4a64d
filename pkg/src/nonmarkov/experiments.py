"""End-to-end experiments: base-frequency sweep, channel runs, flow decomposition.

Every experiment returns its table as a dict of equal-length columns and,
when ``cfg.out`` is set, writes it as CSV.  Output bytes depend only on the
physical configuration (seed included), never on worker counts.
"""

from __future__ import annotations

import csv
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .config import RunConfig
from .dynamics import ANCILLA, SYSTEM, Trajectory, analytic_chi, analytic_chi_dot, dephasing_map, evolve
from .errors import ConfigError
from .measures import (
    ChannelSpec,
    blp_measure,
    channel_flow_decomposition,
    closed_form_qfi,
    fd_param_derivative,
    measure_report,
    n0_measure,
    qfi,
    qfi_curve,
    qfi_flow,
    rhp_measure,
    sld,
)
from .quantum import BELL_KET, COLLECTIVE_Z, unitary_phase

# Fields that affect scheduling only; they are kept out of CSV headers so
# output is byte-identical across worker settings.
_SCHEDULING_KEYS = {"workers", "parallel_sweep", "out"}
_MODE_NAMES = {"analytic": "analytic", "bessel": "bessel", "mc": "monte_carlo"}


@dataclass(frozen=True)
class SweepRow:
    omega0_mhz: float
    n0: float
    n_blp: float
    n_rhp: float


# --- CSV -----------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (str, int, np.integer)):
        return str(x)
    return repr(float(x))


def format_csv(cfg: RunConfig, columns: Mapping[str, Iterable], extra_header: Iterable[str] = ()) -> str:
    """CSV text: ``#`` header lines, column names, rows in shortest round-trip decimal."""
    from . import __version__

    buf = io.StringIO()
    buf.write(f"# nonmarkov {__version__}\n")
    for line in cfg.header_lines():
        if line.split(" = ", 1)[0] not in _SCHEDULING_KEYS:
            buf.write(f"# {line}\n")
    for line in extra_header:
        buf.write(f"# {line}\n")
    names = list(columns)
    data = [list(columns[n]) for n in names]
    lengths = {len(c) for c in data}
    if len(lengths) > 1:
        raise ValueError(f"columns have different lengths: {sorted(lengths)}")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*data):
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def emit(text: str, out: str | Path | None) -> None:
    """Write to ``out`` (parent directories must exist) or to stdout."""
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", newline="") as fh:
        fh.write(text)


def _suffixed(out: str | None, suffix: str) -> str | None:
    if out is None:
        return None
    p = Path(out)
    return str(p.with_name(f"{p.stem}_{suffix}{p.suffix or '.csv'}"))


# --- sweep -----------------------------------------------------------------------

def _sweep_point(cfg: RunConfig, nu0: float, workers: int) -> SweepRow:
    point = replace(cfg, omega0=nu0)
    traj = evolve(point.channel_config("s"), point.ensemble_config(), _MODE_NAMES[cfg.mode], workers)
    mcfg = point.measure_config()
    return SweepRow(nu0, n0_measure(traj, mcfg), blp_measure(traj, mcfg), rhp_measure(traj, mcfg))


def sweep_rows(cfg: RunConfig) -> list[SweepRow]:
    """N₀, BLP and RHP for every base frequency of ``cfg.omega0_grid`` (ascending)."""
    grid = sorted(cfg.omega0_grid)
    if cfg.parallel_sweep and cfg.workers > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(grid))) as pool:
            return list(pool.map(_sweep_point, [cfg] * len(grid), grid, [1] * len(grid)))
    return [_sweep_point(cfg, nu0, cfg.workers) for nu0 in grid]


def sweep_columns(rows: list[SweepRow]) -> dict[str, list[float]]:
    return {
        "omega0_mhz": [r.omega0_mhz for r in rows],
        "N0": [r.n0 for r in rows],
        "N_BLP": [r.n_blp for r in rows],
        "N_RHP": [r.n_rhp for r in rows],
    }


def run_sweep(cfg: RunConfig) -> list[SweepRow]:
    rows = sweep_rows(cfg)
    emit(format_csv(cfg, sweep_columns(rows)), cfg.out)
    return rows


# --- channel runs ------------------------------------------------------------------

CHANNEL_RUNS = ("s", "a", "sa")


def channel_table(cfg: RunConfig, label: str) -> dict[str, np.ndarray]:
    """Trajectory columns for one channel selection (``s``, ``a`` or ``sa``)."""
    chan = cfg.channel_config(label)
    ens = cfg.ensemble_config()
    analytic = evolve(chan, ens, "analytic")
    mc = evolve(chan, ens, "monte_carlo", cfg.workers)
    chosen = {"analytic": analytic, "mc": mc}.get(cfg.mode)
    if chosen is None:
        chosen = evolve(chan, ens, "bessel")
    q = qfi_curve(chosen, COLLECTIVE_Z, cfg.rank_floor)
    flow = qfi_flow(q, ens.dt, cfg.smooth_window)
    q_closed, f_closed = closed_form_qfi(chan, ens.grid)
    return {
        "t": ens.grid,
        "f_analytic": analytic.f,
        "f_mc": mc.f,
        "f_stderr": mc.f_stderr,
        "Q": q,
        "F": flow,
        "Q_closed": q_closed,
        "F_closed": f_closed,
    }


def run_channels(cfg: RunConfig) -> dict[str, dict[str, np.ndarray]]:
    """System-only, ancilla-only and both-channel runs; one CSV each.

    With ``cfg.out = "x.csv"`` the files are ``x_s.csv``, ``x_a.csv`` and
    ``x_sa.csv``; without an output path the three tables go to stdout.
    """
    tables = {}
    for label in CHANNEL_RUNS:
        tables[label] = channel_table(cfg, label)
    for label, table in tables.items():
        emit(format_csv(cfg, table, [f"run = {label}"]), _suffixed(cfg.out, label))
    return tables


# --- decomposition -------------------------------------------------------------------

def _noisy(label: str) -> tuple[str, ...]:
    return {"s": (SYSTEM,), "a": (ANCILLA,), "sa": (SYSTEM, ANCILLA), "none": ()}[label]


def decompose_table(cfg: RunConfig) -> dict[str, np.ndarray]:
    """QFI, its flow and the per-channel flow split along the analytic trajectory.

    At each t the phase θ is imprinted on the Bell pair by e^{-iθÔ}, the
    state is dephased, ∂_θρ is taken by central differences in θ, and the
    SLD L gives Q = Tr(ρL²) and the flows γ_k J_k with γ_k = 2χ'(t) on the
    projectors of each noisy qubit.
    """
    if cfg.mode != "analytic":
        raise ConfigError(f"mode: decompose needs closed-form rates, mode must be analytic (got {cfg.mode!r})")
    noisy = _noisy(cfg.channels)
    chan = cfg.channel_config(cfg.channels)
    t = cfg.ensemble_config().grid
    models = dict(chan.active())
    chi = {c: analytic_chi(models[c], t) if c in models else np.zeros(t.shape) for c in (SYSTEM, ANCILLA)}
    chi_dot = {c: analytic_chi_dot(models[c], t) if c in models else np.zeros(t.shape) for c in (SYSTEM, ANCILLA)}
    spec = ChannelSpec.dephasing(noisy)
    rho0 = np.outer(BELL_KET, BELL_KET.conj())

    def prepared(theta):
        u = unitary_phase(theta, COLLECTIVE_Z)
        return u @ rho0 @ u.conj().T

    q14 = np.empty(t.shape)
    qtr = np.empty(t.shape)
    per = {label: np.empty(t.shape) for label in spec.labels}
    for k, tk in enumerate(t):
        def state(theta, k=k, tk=tk):
            return dephasing_map(prepared(theta), chi[SYSTEM][k], chi[ANCILLA][k], chan.omega_s * tk, chan.omega_a * tk)

        rho = state(0.0)
        L = sld(rho, fd_param_derivative(state, 0.0, cfg.dtheta), cfg.rank_floor)
        q14[k] = qfi(rho, COLLECTIVE_Z, cfg.rank_floor)
        qtr[k] = float(np.trace(rho @ L @ L).real)
        rates = {label: 2.0 * chi_dot[label.rsplit("_", 1)[0]][k] for label in spec.labels}
        for label, value in channel_flow_decomposition(rho, L, spec, rates).items():
            per[label][k] = value
    table = {
        "t": t,
        "Q_eq14": q14,
        "Q_trL2": qtr,
        "F_total": qfi_flow(q14, cfg.dt, cfg.smooth_window),
        "F_flow": np.sum([per[label] for label in spec.labels], axis=0) if spec.labels else np.zeros(t.shape),
    }
    for label in spec.labels:
        table[f"F_{label}"] = per[label]
    return table


def run_decompose(cfg: RunConfig) -> dict[str, np.ndarray]:
    table = decompose_table(cfg)
    emit(format_csv(cfg, table), cfg.out)
    return table


# --- single trajectory -------------------------------------------------------------

def trajectory_table(cfg: RunConfig) -> tuple[Trajectory, dict[str, np.ndarray], dict[str, float]]:
    traj = evolve(cfg.channel_config(), cfg.ensemble_config(), _MODE_NAMES[cfg.mode], cfg.workers)
    report = measure_report(traj, cfg.measure_config())
    c = report.curves
    table = {
        "t": traj.t,
        "f": traj.f,
        "f_stderr": traj.f_stderr,
        "I": c["I"],
        "dI_dt": c["dI_dt"],
        "D": c["D"],
        "g_rhp": c["g_rhp"],
        "Q": c["Q"],
        "F": c["F"],
    }
    return traj, table, {"N0": report.n0, "N_BLP": report.n_blp, "N_RHP": report.n_rhp}


def run_trajectory(cfg: RunConfig) -> dict[str, np.ndarray]:
    _, table, scalars = trajectory_table(cfg)
    extra = [f"{k} = {_fmt(v)}" for k, v in scalars.items()]
    emit(format_csv(cfg, table, extra), cfg.out)
    return table


RUNNERS = {
    "sweep": run_sweep,
    "channels": run_channels,
    "decompose": run_decompose,
    "trajectory": run_trajectory,
}
