"""Dense two-qubit linear algebra.

Basis ordering is |00>, |01>, |10>, |11> with the system qubit first and the
ancilla second.  Density matrices are plain ``complex128`` arrays; the
validators below enforce the invariants where it matters.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DomainError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

SIGMA_Z_SYSTEM = np.kron(SIGMA_Z, IDENTITY2)
SIGMA_Z_ANCILLA = np.kron(IDENTITY2, SIGMA_Z)
# Phase generator (σ_s^z + σ_a^z)/2 used for every QFI in the package.
COLLECTIVE_Z = (SIGMA_Z_SYSTEM + SIGMA_Z_ANCILLA) / 2

BELL_KET = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


class Spectrum(NamedTuple):
    """Eigenvalues in descending order and matching column eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def _hermiticity_error(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def check_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    err = _hermiticity_error(a)
    if err > tol * scale:
        raise DomainError(f"matrix is not Hermitian (max |A - A^dag| = {err:.3e})")
    return a


def check_density_matrix(rho: np.ndarray) -> np.ndarray:
    """Validate a 2x2 or 4x4 density matrix and return it as complex128.

    Raises
    ------
    DomainError
        If ``rho`` is not Hermitian, not unit trace, or has an eigenvalue
        below ``-PSD_TOL``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape not in ((2, 2), (4, 4)):
        raise DomainError(f"density matrix must be 2x2 or 4x4, got {rho.shape}")
    err = _hermiticity_error(rho)
    if err > HERMITIAN_TOL:
        raise DomainError(f"density matrix is not Hermitian (error {err:.3e})")
    tr = np.trace(rho)
    if abs(tr - 1) > TRACE_TOL:
        raise DomainError(f"density matrix trace is {tr.real:.15g}, expected 1")
    lo = float(np.linalg.eigvalsh(hermitian_part(rho))[0])
    if lo < -PSD_TOL:
        raise DomainError(f"density matrix has negative eigenvalue {lo:.3e}")
    return rho


def bell_coherence_state(g: complex) -> np.ndarray:
    """½(|00><00| + |11><11| + g|00><11| + g*|11><00|) for complex ``g``."""
    g = complex(g)
    if abs(g) > 1 + 1e-12:
        raise DomainError(f"coherence modulus {abs(g):.15g} exceeds 1")
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[3, 3] = 0.5
    rho[0, 3] = g / 2
    rho[3, 0] = g.conjugate() / 2
    return rho


def bell_dephased_state(f: float, phase: float = 0.0) -> np.ndarray:
    """Dephased Bell pair with coherence ``g = f * exp(-i * phase)``.

    Parameters
    ----------
    f : float
        Coherence norm, ``0 <= f <= 1``.
    phase : float
        Deterministic phase in radians, ``(ω_s + ω_a) t`` in the lab frame.
    """
    if not 0.0 <= f <= 1.0:
        raise DomainError(f"coherence norm f={f!r} outside [0, 1]")
    return bell_coherence_state(f * np.exp(-1j * phase))


def eigh(rho: np.ndarray) -> Spectrum:
    """Eigendecomposition with eigenvalues sorted in descending order."""
    rho = check_hermitian(rho)
    w, v = np.linalg.eigh(hermitian_part(rho))
    return Spectrum(w[::-1].copy(), v[:, ::-1].copy())


def partial_trace(rho: np.ndarray, keep: str = "system") -> np.ndarray:
    """Reduce a two-qubit state to the ``system`` or ``ancilla`` qubit."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise DomainError(f"partial_trace needs a 4x4 matrix, got {rho.shape}")
    r = rho.reshape(2, 2, 2, 2)
    if keep == "system":
        return np.einsum("iaja->ij", r)
    if keep == "ancilla":
        return np.einsum("aiaj->ij", r)
    raise DomainError(f"keep must be 'system' or 'ancilla', not {keep!r}")


def clamp_spectrum(p: np.ndarray) -> np.ndarray:
    """Zero eigenvalues in ``[-PSD_TOL, 0)``; anything more negative is an error."""
    p = np.asarray(p, dtype=float)
    if p.size and p.min() < -PSD_TOL:
        raise DomainError(f"eigenvalue {p.min():.3e} is below -{PSD_TOL:g}")
    return np.where(p < 0, 0.0, p)


def shannon_bits(p: np.ndarray) -> float:
    p = clamp_spectrum(p)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """S(ρ) = -Tr ρ log₂ ρ in bits."""
    rho = check_hermitian(rho)
    return shannon_bits(np.linalg.eigvalsh(hermitian_part(rho)))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise DomainError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    w = np.linalg.eigvalsh(hermitian_part(rho - sigma))
    return float(0.5 * np.sum(np.abs(w)))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random state ``A A^dag / Tr`` with a complex Gaussian ``A`` (Ginibre)."""
    rank = dim if rank is None else rank
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = a @ a.conj().T
    return hermitian_part(rho / np.trace(rho).real)


def unitary_phase(theta: float, generator: np.ndarray = COLLECTIVE_Z) -> np.ndarray:
    """exp(-iθÔ) for Hermitian ``generator``."""
    w, v = np.linalg.eigh(generator)
    return (v * np.exp(-1j * theta * w)) @ v.conj().T
