"""Global and local non-Markovianity measures.

Global: quantum mutual information I(t) and its accumulated rises N₀, the
trace-distance (BLP) and divisibility (RHP) witnesses.  Local: quantum
Fisher information Q(t) of the phase generated by (σ_s^z + σ_a^z)/2, its
flow dQ/dt, the symmetric logarithmic derivative and the per-channel flow
decomposition F = Σ γ_k J_k with J_k = -Tr(ρ [L, A_k]^† [L, A_k]).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.signal import savgol_filter

from .dynamics import ANCILLA, SYSTEM, ChannelConfig, Trajectory, analytic_chi, analytic_chi_dot
from .errors import DomainError
from .quantum import (
    COLLECTIVE_Z,
    IDENTITY2,
    check_hermitian,
    eigh,
    hermitian_part,
    partial_trace,
    trace_distance,
    von_neumann_entropy,
)


@dataclass(frozen=True)
class MeasureConfig:
    """Horizon and numerical rules shared by the measures.

    ``smooth_window`` turns on Savitzky-Golay differentiation of Q(t)
    (degree ``smooth_degree``); ``None`` means plain central differences.
    """

    t_f: float = 5.0
    eps_plus: float = 1e-12
    smooth_window: int | None = None
    smooth_degree: int = 2
    rank_floor: float = 1e-12

    def __post_init__(self):
        if self.eps_plus < 0:
            raise DomainError("eps_plus must be non-negative")
        if self.t_f < 0:
            raise DomainError("t_f must be non-negative")


# --- quantum mutual information -------------------------------------------------

def qmi(rho_sa: np.ndarray) -> float:
    """I = S(ρ_s) + S(ρ_a) - S(ρ_sa) in bits."""
    rho_sa = np.asarray(rho_sa, dtype=complex)
    if rho_sa.shape != (4, 4):
        raise DomainError(f"qmi needs a 4x4 state, got {rho_sa.shape}")
    return (
        von_neumann_entropy(partial_trace(rho_sa, "system"))
        + von_neumann_entropy(partial_trace(rho_sa, "ancilla"))
        - von_neumann_entropy(rho_sa)
    )


def _xlog2x(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    pos = x > 0
    return np.where(pos, x * np.log2(np.where(pos, x, 1.0)), 0.0)


def qmi_bell(f, one_minus_f=None) -> np.ndarray:
    """Closed form 2 + Σ± p± log₂ p± with p± = (1 ± f)/2.

    ``one_minus_f`` may be given directly (e.g. -expm1(-2χ)) to keep full
    relative precision of the small eigenvalue when f is close to 1.
    """
    f = np.asarray(f, dtype=float)
    omf = 1.0 - f if one_minus_f is None else np.asarray(one_minus_f, dtype=float)
    return 2.0 + _xlog2x((1.0 + f) / 2.0) + _xlog2x(omf / 2.0)


def _one_minus_f(traj: Trajectory) -> np.ndarray:
    chi = np.asarray(traj.chi, dtype=float)
    if traj.kind == "analytic":
        return -np.expm1(-2.0 * chi)
    return 1.0 - traj.f


def qmi_curve(traj: Trajectory) -> np.ndarray:
    """I(t_k) for every point of a Bell-family trajectory."""
    return qmi_bell(traj.f, _one_minus_f(traj))


def qmi_rate(traj: Trajectory, k: int | None = None):
    """dI/dt in bits/μs.

    Analytic trajectories use -χ'(t) f log₂[(1+f)/(1-f)] with the closed-form
    χ'; the t where f = 1 exactly (χ = 0, hence χ' = 0) gives 0.  Other
    trajectories fall back to central differences of I on the grid.
    """
    if traj.kind == "analytic" and traj.chi_dot is not None:
        f = traj.f
        omf = _one_minus_f(traj)
        with np.errstate(divide="ignore", invalid="ignore"):
            rate = -traj.chi_dot * f * np.log2((1.0 + f) / omf)
        rate = np.where(omf > 0, rate, 0.0)
    else:
        if len(traj) < 2:
            raise DomainError("need at least two grid points for a finite-difference rate")
        rate = np.gradient(qmi_curve(traj), traj.dt)
    return rate if k is None else float(rate[k])


# --- rise-accumulating measures ---------------------------------------------------

def _horizon(traj, cfg: MeasureConfig) -> slice:
    if not isinstance(traj, Trajectory):
        return slice(None)
    t = traj.t
    if cfg.t_f > t[-1] + 1e-9 * max(1.0, traj.dt):
        raise DomainError(f"trajectory ends at {t[-1]} but t_f = {cfg.t_f}")
    return slice(0, int(np.searchsorted(t, cfg.t_f + 1e-9 * max(traj.dt, 1e-12), side="right")))


def summed_rises(y: np.ndarray, eps: float = 0.0, gate: np.ndarray | None = None) -> float:
    """Σ of the increments of ``y`` on the steps where ``gate`` rises by more than ``eps``.

    ``gate`` defaults to ``y`` itself; pass the coherence f when ``y`` is a
    monotone function of f whose increments can be much smaller than those
    of f (I(f) is flat near f = 0).  With the default gate this equals
    ∫ max(dy/dt, 0) dt for the piecewise-linear interpolant of y.
    """
    d = np.diff(np.asarray(y, dtype=float))
    g = d if gate is None else np.diff(np.asarray(gate, dtype=float))
    return float(np.sum(d[g > eps]))


def n0_measure(traj, cfg: MeasureConfig = MeasureConfig()) -> float:
    """Accumulated rises of the mutual information over [0, t_f], in bits.

    ``traj`` is a Trajectory or a plain sequence of coherence norms f.
    """
    sl = _horizon(traj, cfg)
    if isinstance(traj, Trajectory):
        f = traj.f[sl]
        i_curve = qmi_curve(traj)[sl]
    else:
        f = np.asarray(traj, dtype=float)
        i_curve = qmi_bell(f)
    # I is strictly increasing in f, so I rises exactly where f does.
    return summed_rises(i_curve, cfg.eps_plus, gate=f)


def blp_measure(traj, cfg: MeasureConfig = MeasureConfig()) -> float:
    """Accumulated rises of the trace distance of the canonical |±> pair.

    For pure dephasing that pair stays at distance D(t) = f(t), so this is
    the sum of the rises of f.  Use :func:`blp_pair_measure` for other pairs.
    """
    sl = _horizon(traj, cfg)
    f = traj.f[sl] if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    return summed_rises(f, cfg.eps_plus)


def dephased_qubit_pair(g: complex) -> tuple[np.ndarray, np.ndarray]:
    """|+> and |-> after a dephasing channel with coherence factor g."""
    plus = np.array([[1.0, g], [np.conj(g), 1.0]], dtype=complex) / 2
    minus = np.array([[1.0, -g], [-np.conj(g), 1.0]], dtype=complex) / 2
    return plus, minus


def trace_distance_curve(rho1: Sequence[np.ndarray], rho2: Sequence[np.ndarray]) -> np.ndarray:
    if len(rho1) != len(rho2):
        raise DomainError("state sequences have different lengths")
    return np.array([trace_distance(a, b) for a, b in zip(rho1, rho2)])


def blp_pair_measure(rho1: Sequence[np.ndarray], rho2: Sequence[np.ndarray], cfg: MeasureConfig = MeasureConfig()) -> float:
    """BLP rises for an arbitrary pair of evolved state sequences on one grid."""
    return summed_rises(trace_distance_curve(rho1, rho2), cfg.eps_plus)


def rhp_measure(traj, cfg: MeasureConfig = MeasureConfig()) -> float:
    """∫ max(0, f'/f) dt, the accumulated log-growth of the coherence.

    The intermediate map t -> t+ε of a dephasing channel multiplies the
    coherence by f(t+ε)/f(t); its Choi trace norm exceeds 1 exactly when f
    grows.  Analytic trajectories use ln f = -2χ directly.
    """
    sl = _horizon(traj, cfg)
    if isinstance(traj, Trajectory) and traj.kind == "analytic":
        log_f = -2.0 * np.asarray(traj.chi)[sl]
    else:
        f = traj.f[sl] if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
        if np.any(f <= 0):
            raise DomainError("coherence vanishes; the intermediate map is undefined")
        return summed_rises(np.log(f), cfg.eps_plus, gate=f)
    return summed_rises(log_f, cfg.eps_plus)


def rhp_witness_curve(traj: Trajectory) -> np.ndarray:
    """Pointwise max(0, f'/f) on the grid (zero where f vanishes)."""
    if traj.kind == "analytic" and traj.chi_dot is not None:
        return np.maximum(0.0, -2.0 * traj.chi_dot)
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.gradient(np.log(traj.f), traj.dt)
    return np.where(np.isfinite(rate), np.maximum(rate, 0.0), 0.0)


# --- quantum Fisher information -----------------------------------------------------

def qfi(rho: np.ndarray, gen: np.ndarray = COLLECTIVE_Z, floor: float = 1e-12) -> float:
    """Q = 2 Σ_{P_i+P_j > floor} (P_i-P_j)²/(P_i+P_j) |<ψ_i|Ô|ψ_j>|²."""
    gen = check_hermitian(gen)
    p, v = eigh(rho)
    o = v.conj().T @ gen @ v
    s = p[:, None] + p[None, :]
    keep = s > floor
    d2 = (p[:, None] - p[None, :]) ** 2
    terms = np.where(keep, d2 / np.where(keep, s, 1.0), 0.0) * np.abs(o) ** 2
    return float(2.0 * terms.sum())


def qfi_curve(traj: Trajectory, gen: np.ndarray = COLLECTIVE_Z, floor: float = 1e-12) -> np.ndarray:
    return np.array([qfi(r, gen, floor) for r in traj.rho])


def qfi_flow(q: np.ndarray, dt: float, smooth_window: int | None = None, degree: int = 2) -> np.ndarray:
    """dQ/dt on a uniform grid: central differences, one-sided at both ends.

    With ``smooth_window`` the derivative of a local degree-``degree``
    polynomial fit (Savitzky-Golay) is used instead.
    """
    q = np.asarray(q, dtype=float)
    if q.size < 3:
        raise DomainError("qfi_flow needs at least 3 points")
    if smooth_window:
        window = int(smooth_window) | 1
        if window > q.size:
            raise DomainError(f"smoothing window {window} longer than series ({q.size})")
        return savgol_filter(q, window, degree, deriv=1, delta=dt, mode="interp")
    return np.gradient(q, dt)


def closed_form_qfi(config: ChannelConfig, t) -> tuple[np.ndarray, np.ndarray]:
    """(Q, F) = (4 e^{-4χ}, -16 χ' e^{-4χ}) with χ summed over the noisy channels.

    This covers the system-only, ancilla-only and both-channel cases with
    χ = χ_s, χ_a or χ_s + χ_a respectively.
    """
    t = np.asarray(t, dtype=float)
    chi = np.zeros(t.shape)
    chi_dot = np.zeros(t.shape)
    for _, model in config.active():
        chi = chi + analytic_chi(model, t)
        chi_dot = chi_dot + analytic_chi_dot(model, t)
    q = 4.0 * np.exp(-4.0 * chi)
    return q, -4.0 * chi_dot * q


# --- SLD and flow decomposition ----------------------------------------------------

def sld(rho: np.ndarray, drho: np.ndarray, spectrum_floor: float = 1e-10) -> np.ndarray:
    """Symmetric logarithmic derivative solving dρ = (Lρ + ρL)/2 on the support.

    In the eigenbasis of ρ, L_ij = 2<ψ_i|dρ|ψ_j>/(p_i + p_j); pairs with
    p_i + p_j below ``spectrum_floor`` are set to zero.
    """
    drho = check_hermitian(drho)
    if abs(np.trace(drho)) > 1e-10:
        raise DomainError(f"parameter derivative must be traceless, trace = {np.trace(drho):.3e}")
    p, v = eigh(rho)
    d = v.conj().T @ drho @ v
    s = p[:, None] + p[None, :]
    keep = s >= spectrum_floor
    l_eig = np.where(keep, 2.0 * d / np.where(keep, s, 1.0), 0.0)
    return hermitian_part(v @ l_eig @ v.conj().T)


def fd_param_derivative(evolve_fn: Callable[[float], np.ndarray], theta0: float, dtheta: float) -> np.ndarray:
    """Central difference (ρ(θ₀+dθ) - ρ(θ₀-dθ)) / 2dθ, Hermitized."""
    if not dtheta > 0:
        raise DomainError("dtheta must be positive")
    diff = (np.asarray(evolve_fn(theta0 + dtheta)) - np.asarray(evolve_fn(theta0 - dtheta))) / (2.0 * dtheta)
    return hermitian_part(diff)


@dataclass(frozen=True)
class ChannelSpec:
    """Jump operators A_k with labels; rates are supplied per call."""

    labels: tuple[str, ...]
    operators: np.ndarray = field(repr=False)

    def __post_init__(self):
        ops = np.asarray(self.operators, dtype=complex)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2] or ops.shape[1] == 0:
            raise DomainError(f"operators must have shape (n, d, d), got {ops.shape}")
        if len(self.labels) != ops.shape[0]:
            raise DomainError("one label per jump operator is required")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "labels", tuple(self.labels))

    @classmethod
    def matrix_units(cls, basis: np.ndarray, pairs: Sequence[tuple[int, int]]) -> "ChannelSpec":
        """A_ij = |ε_i><ε_j| for each (i, j), with ε the columns of ``basis``."""
        basis = np.asarray(basis, dtype=complex)
        gram = basis.conj().T @ basis
        if not np.allclose(gram, np.eye(basis.shape[1]), atol=1e-10):
            raise DomainError("basis columns are not orthonormal")
        ops = [np.outer(basis[:, i], basis[:, j].conj()) for i, j in pairs]
        return cls(tuple(f"A_{i + 1}{j + 1}" for i, j in pairs), np.array(ops))

    @classmethod
    def dephasing(cls, channels: Sequence[str] = (SYSTEM,)) -> "ChannelSpec":
        """Projectors |0><0| and |1><1| of each listed qubit (identity on the other).

        Each projector at rate γ damps the qubit coherence by γ/2, so the pair
        reproduces a coherence factor e^{-2χ} with γ(t) = 2χ'(t) per projector.
        """
        proj = [np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)]
        labels, ops = [], []
        for c in channels:
            for i, p in enumerate(proj):
                if c == SYSTEM:
                    ops.append(np.kron(p, IDENTITY2))
                elif c == ANCILLA:
                    ops.append(np.kron(IDENTITY2, p))
                else:
                    raise DomainError(f"unknown channel {c!r}")
                labels.append(f"{c}_{i}{i}")
        if not ops:
            return cls((), np.zeros((0, 4, 4), dtype=complex))
        return cls(tuple(labels), np.array(ops))


def flow_kernels(rho: np.ndarray, L: np.ndarray, channels: ChannelSpec) -> np.ndarray:
    """J_k = -Tr(ρ [L, A_k]^† [L, A_k]) for every channel; each is <= 0."""
    rho = np.asarray(rho, dtype=complex)
    L = np.asarray(L, dtype=complex)
    if rho.shape != L.shape or channels.operators.shape[1:] != rho.shape:
        raise DomainError("state, SLD and jump operators must share one dimension")
    comm = L @ channels.operators - channels.operators @ L
    return -np.einsum("ij,kjl,kli->k", rho, np.conj(np.swapaxes(comm, 1, 2)), comm).real


def channel_flow_decomposition(
    rho: np.ndarray,
    L: np.ndarray,
    channels: ChannelSpec,
    rates: Sequence[float] | Mapping[str, float],
) -> dict[str, float]:
    """Per-channel QFI flows F_k = γ_k J_k (1/μs)."""
    if isinstance(rates, Mapping):
        try:
            rates = [rates[label] for label in channels.labels]
        except KeyError as exc:
            raise DomainError(f"no rate for channel {exc.args[0]!r}") from None
    rates = np.asarray(rates, dtype=float)
    if rates.shape != (len(channels.labels),):
        raise DomainError(f"expected {len(channels.labels)} rates, got shape {rates.shape}")
    kern = flow_kernels(rho, L, channels)
    return {label: float(r * j) for label, r, j in zip(channels.labels, rates, kern)}


# --- reports ---------------------------------------------------------------------

@dataclass
class MeasureReport:
    """Scalar measures plus the curves they were integrated from."""

    n0: float
    n_blp: float
    n_rhp: float
    curves: dict[str, np.ndarray] = field(default_factory=dict, repr=False)


def measure_report(traj: Trajectory, cfg: MeasureConfig = MeasureConfig(), gen: np.ndarray = COLLECTIVE_Z) -> MeasureReport:
    q = qfi_curve(traj, gen, cfg.rank_floor)
    curves = {
        "t": traj.t,
        "I": qmi_curve(traj),
        "dI_dt": qmi_rate(traj),
        "D": traj.f,
        "g_rhp": rhp_witness_curve(traj),
        "Q": q,
        "F": qfi_flow(q, traj.dt, cfg.smooth_window, cfg.smooth_degree) if len(traj) >= 3 else np.zeros(q.shape),
    }
    return MeasureReport(n0_measure(traj, cfg), blp_measure(traj, cfg), rhp_measure(traj, cfg), curves)
