"""Two-qubit dephasing trajectories: closed form, Bessel oracle, Monte Carlo.

Each noisy qubit i carries H_i = β_i(t) σ_i^z.  The |00>,|11> coherence
picks up the phase 2∫β_i per noisy qubit because the σ^z eigenvalues of the
two basis states differ by 2.  Averaging e^{-2iΦ} over uniform mode phases
gives exactly Π_j J₀(4 (c_j/ω_j) sin(ω_j t/2)); in the Gaussian limit this
becomes e^{-2χ(t)}.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import j0

from .errors import DomainError
from .noise import (
    SpectralModel,
    _CHUNK,
    integrated_field_grid,
    mode_amplitudes,
    sample_realization,
)

SYSTEM = "system"
ANCILLA = "ancilla"
CHANNEL_TAGS = {SYSTEM: 0, ANCILLA: 1}
_LABELS = {"s": (SYSTEM,), "a": (ANCILLA,), "sa": (SYSTEM, ANCILLA), "none": ()}


@dataclass(frozen=True)
class ChannelConfig:
    """Which qubits see noise, their spectral models and Zeeman frequencies."""

    noisy: frozenset = frozenset({SYSTEM})
    model_s: SpectralModel | None = None
    model_a: SpectralModel | None = None
    omega_s: float = 0.0
    omega_a: float = 0.0

    def __post_init__(self):
        noisy = frozenset(self.noisy)
        object.__setattr__(self, "noisy", noisy)
        if not noisy <= {SYSTEM, ANCILLA}:
            raise DomainError(f"unknown channel(s): {sorted(noisy - {SYSTEM, ANCILLA})}")
        if SYSTEM in noisy and self.model_s is None:
            raise DomainError("system channel is noisy but has no spectral model")
        if ANCILLA in noisy and self.model_a is None:
            raise DomainError("ancilla channel is noisy but has no spectral model")

    @classmethod
    def from_label(cls, label: str, model_s=None, model_a=None, omega_s=0.0, omega_a=0.0) -> "ChannelConfig":
        """Build from a short label: ``s``, ``a``, ``sa`` or ``none``."""
        try:
            noisy = _LABELS[label]
        except KeyError:
            raise DomainError(f"channel label must be one of {sorted(_LABELS)}, got {label!r}") from None
        return cls(frozenset(noisy), model_s, model_a, omega_s, omega_a)

    def active(self) -> list[tuple[str, SpectralModel]]:
        """(channel name, model) for each noisy channel, system first."""
        out = []
        if SYSTEM in self.noisy:
            out.append((SYSTEM, self.model_s))
        if ANCILLA in self.noisy:
            out.append((ANCILLA, self.model_a))
        return out


@dataclass(frozen=True)
class EnsembleConfig:
    """Ensemble size, master seed and the uniform grid t_k = k·dt, k = 0..n_steps."""

    n_realizations: int = 150
    master_seed: int = 0
    dt: float = 0.01
    n_steps: int = 500

    def __post_init__(self):
        if self.n_realizations < 1:
            raise DomainError(f"ensemble size must be >= 1, got {self.n_realizations}")
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 0:
            raise DomainError(f"n_steps must be >= 0, got {self.n_steps}")

    @classmethod
    def from_horizon(cls, t_f: float, dt: float = 0.01, n_realizations: int = 150, master_seed: int = 0):
        return cls(n_realizations, master_seed, dt, int(round(t_f / dt)))

    @property
    def grid(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)


@dataclass
class Trajectory:
    """Sampled two-qubit state along a uniform time grid.

    ``g`` is the complex |00><11| coherence (times 2), ``f = |g|``.
    ``chi_dot`` is only available for analytic trajectories.
    """

    t: np.ndarray
    f: np.ndarray
    f_stderr: np.ndarray
    chi: np.ndarray
    g: np.ndarray
    rho: np.ndarray
    kind: str
    chi_dot: np.ndarray | None = None
    config: ChannelConfig | None = field(default=None, repr=False)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0

    def __len__(self) -> int:
        return int(self.t.size)


def _mode_sum(model: SpectralModel, t, fn) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("times must be non-negative")
    ts = t.reshape(-1)
    w = model.omegas
    coef = model.chi_coefficients()
    out = np.zeros(ts.shape)
    step = max(1, _CHUNK // max(1, ts.size))
    for lo in range(0, w.size, step):
        sl = slice(lo, lo + step)
        out += fn(np.outer(ts, w[sl]), w[sl]) @ coef[sl]
    return out.reshape(t.shape)


def analytic_chi(model: SpectralModel, t) -> np.ndarray:
    """χ(t) = Σ_j coef_j sin²(ω_j t/2), the Drude-Lorentz partial sum for a comb."""
    return _mode_sum(model, t, lambda wt, w: np.sin(wt / 2) ** 2)


def analytic_chi_dot(model: SpectralModel, t) -> np.ndarray:
    """Term-wise derivative χ'(t) = Σ_j coef_j (ω_j/2) sin(ω_j t)."""
    return _mode_sum(model, t, lambda wt, w: np.sin(wt) * (w / 2))


def bessel_coherence(model: SpectralModel, t) -> np.ndarray:
    """Exact phase average Π_j J₀(4 (c_j/ω_j) sin(ω_j t/2)); may be negative."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("times must be non-negative")
    amps = mode_amplitudes(model)
    a = 4.0 * amps.displacement
    ts = t.reshape(-1)
    out = np.ones(ts.shape)
    step = max(1, _CHUNK // max(1, ts.size))
    for lo in range(0, amps.n_modes, step):
        sl = slice(lo, lo + step)
        out *= np.prod(j0(a[sl] * np.sin(np.outer(ts, amps.omega[sl]) / 2)), axis=1)
    return out.reshape(t.shape)


def bessel_f(model: SpectralModel, t) -> np.ndarray:
    return np.abs(bessel_coherence(model, t))


def _phasor_block(channels, seed, dt, n_steps, lo, hi) -> np.ndarray:
    """e^{-2iΦ_n(t_k)} for realizations lo..hi-1, summing Φ over channels."""
    amps = [(mode_amplitudes(model), tag) for model, tag in channels]
    out = np.empty((hi - lo, n_steps + 1), dtype=complex)
    for row, n in enumerate(range(lo, hi)):
        phi = np.zeros(n_steps + 1)
        for a, tag in amps:
            r = sample_realization(a.n_modes, seed, index=n, channel=tag)
            phi += integrated_field_grid(r, a, dt, n_steps)
        out[row] = np.exp(-2j * phi)
    return out


def ensemble_phasors(channels, ens: EnsembleConfig, workers: int = 1) -> np.ndarray:
    """Per-realization phasors, shape (N, K+1), rows in realization order.

    ``channels`` is a list of (SpectralModel, channel tag).  Blocks may be
    computed in parallel; each row depends only on its own keyed phases.
    """
    n = ens.n_realizations
    workers = max(1, min(int(workers), n))
    if workers == 1:
        return _phasor_block(channels, ens.master_seed, ens.dt, ens.n_steps, 0, n)
    edges = np.linspace(0, n, workers + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_phasor_block, channels, ens.master_seed, ens.dt, ens.n_steps, int(lo), int(hi))
            for lo, hi in zip(edges[:-1], edges[1:])
            if hi > lo
        ]
        blocks = [fut.result() for fut in futures]
    return np.concatenate(blocks, axis=0)


def _reduce(phasors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = phasors.shape[0]
    mean = phasors.mean(axis=0)
    if n < 2:
        return mean, np.zeros(mean.shape)
    var = np.sum(np.abs(phasors - mean) ** 2, axis=0) / (n - 1)
    return mean, np.sqrt(var / n)


def ensemble_coherence(channels, ens: EnsembleConfig, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Complex ensemble mean of e^{-2iΦ} and its standard error."""
    return _reduce(ensemble_phasors(channels, ens, workers))


def mc_coherence(model: SpectralModel, ens: EnsembleConfig, workers: int = 1, channel: int = 0):
    """Monte Carlo coherence norm f̄(t_k) = |mean_n e^{-2iΦ_n(t_k)}| and its standard error.

    Complex mean first, modulus second.  The standard error comes from the
    complex sample variance, sqrt(Σ|z_n - z̄|² / (N(N-1))), and is 0 for N=1.
    """
    mean, err = ensemble_coherence([(model, channel)], ens, workers)
    return _checked_norm(mean), err


def _checked_norm(g: np.ndarray) -> np.ndarray:
    f = np.abs(g)
    if f.size and f.max() > 1 + 1e-12:
        raise DomainError(f"coherence norm {f.max():.15g} exceeds 1")
    return np.minimum(f, 1.0)


def bell_states(g: np.ndarray) -> np.ndarray:
    """Stack of Bell-family density matrices, one per complex coherence."""
    g = np.asarray(g, dtype=complex)
    rho = np.zeros(g.shape + (4, 4), dtype=complex)
    rho[..., 0, 0] = 0.5
    rho[..., 3, 3] = 0.5
    rho[..., 0, 3] = g / 2
    rho[..., 3, 0] = np.conj(g) / 2
    return rho


def _chi_from_f(f: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return -0.5 * np.log(f)


def evolve(config: ChannelConfig, ens: EnsembleConfig, mode: str = "analytic", workers: int = 1) -> Trajectory:
    """Trajectory of the dephased Bell pair on ``ens.grid``.

    Parameters
    ----------
    mode : {"analytic", "bessel", "monte_carlo"}
        ``analytic`` uses f = exp(-2 Σ χ_i); ``bessel`` the exact
        large-ensemble product; ``monte_carlo`` the finite ensemble with
        independent keyed phases per channel.
    """
    t = ens.grid
    active = config.active()
    rotation = np.exp(-1j * (config.omega_s + config.omega_a) * t)
    chi_dot = None
    stderr = np.zeros(t.shape)
    if mode == "analytic":
        chi = np.zeros(t.shape)
        chi_dot = np.zeros(t.shape)
        for _, model in active:
            chi = chi + analytic_chi(model, t)
            chi_dot = chi_dot + analytic_chi_dot(model, t)
        f = np.exp(-2.0 * chi)
        g = f * rotation
    elif mode == "bessel":
        coh = np.ones(t.shape)
        for _, model in active:
            coh = coh * bessel_coherence(model, t)
        f = np.abs(coh)
        chi = _chi_from_f(f)
        g = coh * rotation
    elif mode in ("monte_carlo", "mc"):
        mode = "monte_carlo"
        if active:
            channels = [(model, CHANNEL_TAGS[name]) for name, model in active]
            mean, stderr = ensemble_coherence(channels, ens, workers)
        else:
            mean = np.ones(t.shape, dtype=complex)
        f = _checked_norm(mean)
        chi = _chi_from_f(f)
        scale = np.where(np.abs(mean) > 1.0, 1.0 / np.maximum(np.abs(mean), 1e-300), 1.0)
        g = mean * scale * rotation
    else:
        raise DomainError(f"unknown evolution mode {mode!r}")
    return Trajectory(t, f, stderr, chi, g, bell_states(g), mode, chi_dot, config)


# σ^z eigenvalue of the system / ancilla qubit for basis states |00>, |01>, |10>, |11>.
_Z_S = np.array([1.0, 1.0, -1.0, -1.0])
_Z_A = np.array([1.0, -1.0, 1.0, -1.0])


def dephasing_map(rho: np.ndarray, chi_s: float = 0.0, chi_a: float = 0.0, phase_s: float = 0.0, phase_a: float = 0.0) -> np.ndarray:
    """Ensemble-averaged dephasing applied to an arbitrary two-qubit state.

    Element (m, n) is multiplied by exp(-Σ_i χ_i (z_i(m) - z_i(n))² / 2)
    times exp(-i Σ_i φ_i (z_i(m) - z_i(n)) / 2), with φ_i = ω_i t.  On the
    Bell pair this gives the coherence f·e^{-i(φ_s + φ_a)} with f = e^{-2(χ_s+χ_a)}.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise DomainError(f"dephasing_map needs a 4x4 state, got {rho.shape}")
    if chi_s < 0 or chi_a < 0:
        raise DomainError("decoherence factors must be non-negative")
    ds = _Z_S[:, None] - _Z_S[None, :]
    da = _Z_A[:, None] - _Z_A[None, :]
    factor = np.exp(-(chi_s * ds**2 + chi_a * da**2) / 2 - 0.5j * (phase_s * ds + phase_a * da))
    return rho * factor
