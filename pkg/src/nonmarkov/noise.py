"""Classical dephasing fields built from a discrete spectral comb.

A field realization is

    β(t) = Σ_j c_j sin(ω_j t + ψ_j),   ω_j = j ω₀,

with independent uniform phases ψ_j.  The amplitudes c_j are fixed so that
the ensemble variance of ∫₀ᵗ β equals the Drude-Lorentz decoherence factor

    χ(t) = λγω₀ Σ_j coth(ω_j / 2Θ) / (ω_j (ω_j² + γ²)) · sin²(ω_j t / 2)

term by term, i.e. 2 c_j² / ω_j² equals the j-th coefficient of χ.

All frequencies are angular (rad/μs); times are μs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi
# elements per chunk of (time x mode) work arrays
_CHUNK = 1 << 22
_MAX_FOLD = 1 << 20


def coth(x: np.ndarray) -> np.ndarray:
    """coth with the series 1/x + x/3 below 1e-4 to avoid overflow noise."""
    x = np.asarray(x, dtype=float)
    small = x < 1e-4
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 / np.where(small, x, 1.0) + x / 3.0, 1.0 / np.tanh(safe))


@dataclass(frozen=True)
class SpectralModel:
    """Bath description fixing mode frequencies and amplitudes.

    ``kind == "drude_lorentz"`` uses (lam, gamma, theta, omega0, n_modes).
    ``kind == "custom"`` uses the explicit ``custom_omega`` / ``custom_c``
    tables.  Units are rad/μs throughout.
    """

    kind: str = "drude_lorentz"
    lam: float = 0.0
    gamma: float = 0.0
    theta: float = 0.0
    omega0: float = 0.0
    n_modes: int = 0
    custom_omega: tuple[float, ...] = field(default=(), repr=False)
    custom_c: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind == "drude_lorentz":
            for name in ("lam", "gamma", "theta", "omega0"):
                v = getattr(self, name)
                if not (math.isfinite(v) and v > 0):
                    raise DomainError(f"{name} must be a positive finite number, got {v!r}")
            if int(self.n_modes) < 1:
                raise DomainError(f"mode count must be >= 1, got {self.n_modes!r}")
            object.__setattr__(self, "n_modes", int(self.n_modes))
        elif self.kind == "custom":
            om = np.asarray(self.custom_omega, dtype=float)
            c = np.asarray(self.custom_c, dtype=float)
            if om.ndim != 1 or om.shape != c.shape or om.size < 1:
                raise DomainError("custom modes need equal-length non-empty omega and c tables")
            if np.any(om <= 0) or np.any(np.diff(om) <= 0):
                raise DomainError("custom mode frequencies must be positive and strictly increasing")
            if np.any(c < 0) or not np.all(np.isfinite(c)):
                raise DomainError("custom mode amplitudes must be finite and non-negative")
            object.__setattr__(self, "n_modes", int(om.size))
        else:
            raise DomainError(f"unknown spectral model kind {self.kind!r}")

    @classmethod
    def drude_lorentz(
        cls,
        lam: float,
        gamma: float,
        theta: float,
        omega0: float,
        omega_cutoff: float | None = None,
        n_modes: int | None = None,
    ) -> "SpectralModel":
        """Drude-Lorentz comb; give either the cutoff ω_J or the count J."""
        if (omega_cutoff is None) == (n_modes is None):
            raise DomainError("give exactly one of omega_cutoff and n_modes")
        if n_modes is None:
            if not omega0 > 0:
                raise DomainError(f"omega0 must be positive, got {omega0!r}")
            # 1e-9 guards 5000/0.05 -> 99999.99999999999
            n_modes = int(math.floor(omega_cutoff / omega0 + 1e-9))
        return cls("drude_lorentz", float(lam), float(gamma), float(theta), float(omega0), int(n_modes))

    @classmethod
    def from_mhz(
        cls,
        lam: float,
        gamma: float,
        theta: float,
        omega0: float,
        omega_cutoff: float,
    ) -> "SpectralModel":
        """Drude-Lorentz comb from cyclic-frequency inputs in MHz."""
        return cls.drude_lorentz(
            TWO_PI * lam, TWO_PI * gamma, TWO_PI * theta, TWO_PI * omega0,
            n_modes=int(math.floor(omega_cutoff / omega0 + 1e-9)),
        )

    @classmethod
    def custom(cls, omegas: Sequence[float], amplitudes: Sequence[float]) -> "SpectralModel":
        return cls(
            "custom",
            custom_omega=tuple(float(w) for w in omegas),
            custom_c=tuple(float(c) for c in amplitudes),
        )

    @property
    def is_comb(self) -> bool:
        return self.kind == "drude_lorentz"

    @property
    def omegas(self) -> np.ndarray:
        if self.kind == "custom":
            return np.asarray(self.custom_omega, dtype=float)
        return self.omega0 * np.arange(1, self.n_modes + 1, dtype=float)

    def chi_coefficients(self) -> np.ndarray:
        """Per-mode weights of sin²(ω_j t/2) in χ(t)."""
        w = self.omegas
        if self.kind == "custom":
            c = np.asarray(self.custom_c, dtype=float)
            return 2.0 * c**2 / w**2
        return (
            self.lam * self.gamma * self.omega0 * coth(w / (2.0 * self.theta))
            / (w * (w**2 + self.gamma**2))
        )


@dataclass(frozen=True)
class ModeAmplitudes:
    """Per-mode field amplitudes c_j at frequencies ω_j.

    ``harmonics`` holds the integer j of each mode when the modes sit on a
    comb ω_j = j·ω₀ (``omega0`` set); ``chi_bound`` is the χ error bound
    from dropped tail modes (0 when nothing was dropped).
    """

    omega: np.ndarray
    c: np.ndarray
    omega0: float | None = None
    harmonics: np.ndarray | None = None
    chi_bound: float = 0.0

    @property
    def n_modes(self) -> int:
        return int(self.omega.size)

    @property
    def displacement(self) -> np.ndarray:
        """c_j / ω_j, the amplitude of each mode's contribution to ∫β."""
        return self.c / self.omega


def mode_amplitudes(model: SpectralModel) -> ModeAmplitudes:
    """Amplitudes c_j = ω_j · sqrt(coef_j / 2) where coef_j is the χ weight."""
    w = model.omegas
    if model.kind == "custom":
        return ModeAmplitudes(w, np.asarray(model.custom_c, dtype=float))
    c = w * np.sqrt(model.chi_coefficients() / 2.0)
    if not np.all(np.isfinite(c)):
        raise DomainError("non-finite mode amplitude")
    return ModeAmplitudes(w, c, model.omega0, np.arange(1, model.n_modes + 1, dtype=np.int64))


def truncate_modes(amps: ModeAmplitudes, eps: float) -> ModeAmplitudes:
    """Drop modes whose χ weight c_j²/ω_j² is below ``eps`` times the largest.

    The returned ``chi_bound`` is Σ_dropped 2c_j²/ω_j², an upper bound on
    the resulting |Δχ(t)| for every t.
    """
    if eps <= 0:
        return amps
    weight = amps.displacement**2
    keep = weight >= eps * weight.max()
    dropped = float(2.0 * weight[~keep].sum())
    return ModeAmplitudes(
        amps.omega[keep],
        amps.c[keep],
        amps.omega0,
        None if amps.harmonics is None else amps.harmonics[keep],
        amps.chi_bound + dropped,
    )


@dataclass(frozen=True)
class NoiseRealization:
    """One draw of the mode phases ψ_j in [0, 2π)."""

    phases: np.ndarray
    seed: int
    index: int = 0
    channel: int = 0


def phase_stream(seed: int, index: int, channel: int, n: int) -> np.ndarray:
    """Uniform phases from Philox keyed by ``seed``.

    The counter's high words hold (realization index, channel tag) and the
    low word advances with the mode index, so phase j depends only on
    (seed, channel, index, j) and never on evaluation order.
    """
    if not 0 <= seed < 2**64:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    if not (0 <= index < 2**64 and 0 <= channel < 2**64):
        raise DomainError("realization index and channel tag must fit in 64 bits")
    counter = (int(index) << 128) | (int(channel) << 192)
    gen = np.random.Generator(np.random.Philox(key=int(seed), counter=counter))
    return TWO_PI * gen.random(n)


def sample_realization(model: SpectralModel | int, seed: int, index: int = 0, channel: int = 0) -> NoiseRealization:
    n = model if isinstance(model, int) else model.n_modes
    return NoiseRealization(phase_stream(seed, index, channel, n), int(seed), int(index), int(channel))


def _chunked_mode_sum(t: np.ndarray, omega: np.ndarray, fn) -> np.ndarray:
    """Σ_j fn(ω_j, t_k, slice) accumulated over mode chunks."""
    out = np.zeros(t.shape, dtype=float)
    step = max(1, _CHUNK // max(1, t.size))
    for lo in range(0, omega.size, step):
        out += fn(np.outer(t, omega[lo:lo + step]), slice(lo, lo + step))
    return out


def _times(t) -> tuple[np.ndarray, bool]:
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise DomainError("times must be non-negative")
    return arr.reshape(-1), arr.ndim == 0


def field_value(r: NoiseRealization, amps: ModeAmplitudes, t):
    """β(t) = Σ_j c_j sin(ω_j t + ψ_j)."""
    ts, scalar = _times(t)
    psi = r.phases

    def term(wt, sl):
        return np.sin(wt + psi[sl]) @ amps.c[sl]

    out = _chunked_mode_sum(ts, amps.omega, term)
    return float(out[0]) if scalar else out


def integrated_field(r: NoiseRealization, amps: ModeAmplitudes, t):
    """Exact ∫₀ᵗ β = Σ_j (c_j/ω_j)[cos ψ_j − cos(ω_j t + ψ_j)].

    Evaluated as Σ_j (c_j/ω_j)·2 sin(ω_j t/2) sin(ω_j t/2 + ψ_j), which is
    free of cancellation at small t and exactly 0 at t = 0.
    """
    ts, scalar = _times(t)
    psi = r.phases
    a = amps.displacement

    def term(wt, sl):
        half = wt / 2
        return (2.0 * np.sin(half) * np.sin(half + psi[sl])) @ a[sl]

    out = _chunked_mode_sum(ts, amps.omega, term)
    return float(out[0]) if scalar else out


def comb_fold(omega0: float, dt: float) -> tuple[int, int] | None:
    """(p, M) with ω₀·dt = 2π p/M exactly in floating point, else None."""
    r = omega0 * dt / TWO_PI
    frac = Fraction(r).limit_denominator(_MAX_FOLD)
    if frac.numerator == 0 or abs(r - float(frac)) > 1e-15 * r:
        return None
    return frac.numerator, frac.denominator


def integrated_field_grid(r: NoiseRealization, amps: ModeAmplitudes, dt: float, n_steps: int) -> np.ndarray:
    """∫₀^{t_k} β on the grid t_k = k·dt, k = 0..n_steps.

    On a comb whose step angle ω₀·dt is a rational multiple of 2π the mode
    sum is folded onto M bins and evaluated with one FFT, which is exact up
    to rounding; otherwise the direct sum is used.
    """
    fold = comb_fold(amps.omega0, dt) if amps.harmonics is not None else None
    if fold is None:
        return integrated_field(r, amps, dt * np.arange(n_steps + 1))
    p, m = fold
    a = amps.displacement
    psi = r.phases
    bins = (amps.harmonics * p) % m
    coeff = np.bincount(bins, a * np.cos(psi), minlength=m) + 1j * np.bincount(bins, a * np.sin(psi), minlength=m)
    s = np.fft.ifft(coeff) * m
    k = np.arange(n_steps + 1) % m
    out = float(np.cos(psi) @ a) - s[k].real
    out[0] = 0.0  # exact at t = 0; the folded sum leaves rounding residue there
    return out


def autocorrelation_check(
    realizations: Sequence[NoiseRealization],
    amps: ModeAmplitudes,
    tau: float,
    t_window: float,
    n_samples: int | None = None,
) -> float:
    """Time-averaged ⟨β(t+τ)β(t)⟩ over [0, T_window), averaged over realizations.

    Converges to ½ Σ_j c_j² cos(ω_j τ).  The time average uses uniform
    samples (rectangle rule), spectrally accurate when T_window spans whole
    periods of the field.
    """
    if len(realizations) < 1:
        raise DomainError("need at least one realization")
    if n_samples is None:
        wmax = float(amps.omega.max()) if amps.n_modes else 1.0
        n_samples = int(min(1 << 18, max(4096, math.ceil(8.0 * t_window * wmax / TWO_PI))))
    t = np.arange(n_samples) * (t_window / n_samples)
    acc = 0.0
    for r in realizations:
        acc += float(np.mean(field_value(r, amps, t + tau) * field_value(r, amps, t)))
    return acc / len(realizations)
