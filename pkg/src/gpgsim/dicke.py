"""Exact linear algebra on the (N+1)-dimensional symmetric (Dicke) subspace.

Conventions used throughout the package:

* amplitudes are indexed by increasing magnetic quantum number, index
  ``i`` holds ``M = i - N/2`` (index 0 is ``M = -J`` with ``J = N/2``),
* the computational single-spin state ``|0>`` carries ``Jz = +1/2``, so
  "all spins down" is ``|1>^N = |J,-J>``,
* rotations are evaluated through a cached eigendecomposition of the
  generator, which stays stable for angles up to pi and N up to ~1000.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "DickeKet",
    "DickeDensity",
    "CollectiveOperators",
    "CollectiveMoments",
    "GlobalRotation",
    "DickeDiagonal",
    "ResourceLimitError",
    "build_collective_operators",
    "wigner_d_matrix",
    "rotation_about",
    "spin_coherent",
    "moments",
    "full_register_oracle",
    "m_values",
]

_FULL_REGISTER_MAX_SPINS = 8


class ResourceLimitError(ValueError):
    """Raised when a brute-force register simulation would not fit in memory."""


def m_values(n_spins: int) -> np.ndarray:
    """Jz eigenvalues -J..J (half-integers for odd N) in index order."""
    return np.arange(n_spins + 1) - n_spins / 2.0


@dataclass(frozen=True)
class DickeKet:
    """Pure state on the symmetric subspace, amplitudes[i] at M = i - N/2."""

    n_spins: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_spins < 1:
            raise ValueError(f"need at least one spin, got N={self.n_spins}")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.n_spins + 1,):
            raise ValueError(
                f"amplitude vector must have length N+1={self.n_spins + 1}, "
                f"got shape {amps.shape}"
            )
        norm = np.sum(np.abs(amps) ** 2)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state not normalized: sum |a|^2 = {norm!r}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis_state(cls, n_spins: int, m: float) -> "DickeKet":
        """The Dicke basis state |J, M>."""
        amps = np.zeros(n_spins + 1, dtype=complex)
        amps[_index_of_m(n_spins, m)] = 1.0
        return cls(n_spins, amps)

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "DickeKet":
        """Build a normalized ket from (possibly unnormalized) amplitudes."""
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(len(amps) - 1, amps / np.linalg.norm(amps))

    def amplitude_at(self, m: float) -> complex:
        return self.amplitudes[_index_of_m(self.n_spins, m)]

    def to_density(self) -> "DickeDensity":
        return DickeDensity(self.n_spins, np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "DickeKet") -> complex:
        return np.vdot(self.amplitudes, other.amplitudes)

    def fidelity(self, other: "DickeKet") -> float:
        return abs(self.overlap(other)) ** 2


@dataclass(frozen=True)
class DickeDensity:
    """Mixed state on the symmetric subspace, matrix[i, j] = rho_{M_i, M_j}."""

    n_spins: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.n_spins < 1:
            raise ValueError(f"need at least one spin, got N={self.n_spins}")
        rho = np.asarray(self.matrix, dtype=complex)
        dim = self.n_spins + 1
        if rho.shape != (dim, dim):
            raise ValueError(f"density matrix must be {dim}x{dim}, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
            raise ValueError("density matrix not Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-12:
            raise ValueError(f"trace is {np.trace(rho)!r}, expected 1")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("density matrix has a significantly negative eigenvalue")
        object.__setattr__(self, "matrix", rho)

    def fidelity_with_ket(self, ket: DickeKet) -> float:
        return float(np.real(ket.amplitudes.conj() @ self.matrix @ ket.amplitudes))


@dataclass(frozen=True)
class CollectiveOperators:
    """Dense matrices of the collective angular-momentum operators."""

    n_spins: int
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray
    j_plus: np.ndarray
    j_minus: np.ndarray


@dataclass(frozen=True)
class CollectiveMoments:
    """Second and fourth moments entering the estimation-variance formula."""

    mean_jx2: float
    mean_jy2: float
    mean_jz2: float
    mean_jz_jx2_jz: float
    var_jx2: float
    var_jz2: float


def _index_of_m(n_spins: int, m: float) -> int:
    idx = m + n_spins / 2.0
    i = int(round(idx))
    if abs(idx - i) > 1e-9 or not 0 <= i <= n_spins:
        raise ValueError(f"M={m} is not in the Dicke ladder for N={n_spins}")
    return i


@functools.lru_cache(maxsize=None)
def build_collective_operators(n_spins: int) -> CollectiveOperators:
    """Collective operators for N spin-1/2 particles restricted to J = N/2.

    J+|J,M> = sqrt(J(J+1) - M(M+1)) |J,M+1>, jz = diag(M), and
    jx = (J+ + J-)/2, jy = (J+ - J-)/(2i).
    """
    if n_spins < 1:
        raise ValueError(f"need at least one spin, got N={n_spins}")
    j = n_spins / 2.0
    m = m_values(n_spins)
    raise_coeff = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    # row index = output M; raising couples (M+1, M), one below the main
    # diagonal in the increasing-M storage order.
    j_plus = np.diag(raise_coeff.astype(complex), k=-1)
    j_minus = j_plus.conj().T
    jx = (j_plus + j_minus) / 2.0
    jy = (j_plus - j_minus) / 2.0j
    jz = np.diag(m.astype(complex))
    return CollectiveOperators(n_spins, jx, jy, jz, j_plus, j_minus)


@functools.lru_cache(maxsize=None)
def _jy_eigensystem(n_spins: int):
    ops = build_collective_operators(n_spins)
    evals, evecs = np.linalg.eigh(ops.jy)
    return evals, evecs


def wigner_d_matrix(n_spins: int, angle: float) -> np.ndarray:
    """exp(-i*angle*jy) on the Dicke subspace, element (M', M) = d^J_{M',M}(angle)."""
    if not np.isfinite(angle):
        raise ValueError(f"rotation angle must be finite, got {angle}")
    evals, evecs = _jy_eigensystem(n_spins)
    return (evecs * np.exp(-1j * angle * evals)) @ evecs.conj().T


def rotation_about(n_spins: int, axis: str, angle: float) -> np.ndarray:
    """exp(+i*angle*J_axis) for axis in {x, y, z}."""
    if not np.isfinite(angle):
        raise ValueError(f"rotation angle must be finite, got {angle}")
    if axis == "y":
        return wigner_d_matrix(n_spins, -angle)
    if axis == "z":
        return np.diag(np.exp(1j * angle * m_values(n_spins)))
    if axis == "x":
        ops = build_collective_operators(n_spins)
        evals, evecs = np.linalg.eigh(ops.jx)
        return (evecs * np.exp(1j * angle * evals)) @ evecs.conj().T
    raise ValueError(f"unknown rotation axis {axis!r}")


def spin_coherent(n_spins: int, epsilon: float) -> DickeKet:
    """The tipped initial state exp(+i*epsilon*jy)|J,-J>."""
    bottom = np.zeros(n_spins + 1, dtype=complex)
    bottom[0] = 1.0
    amps = wigner_d_matrix(n_spins, -epsilon) @ bottom
    amps = amps / np.linalg.norm(amps)
    return DickeKet(n_spins, amps)


def moments(state: DickeKet | DickeDensity) -> CollectiveMoments:
    """Exact moments of Jx^2, Jy^2, Jz^2, Jz Jx^2 Jz and their variances."""
    if isinstance(state, DickeKet):
        n = state.n_spins
        psi = state.amplitudes

        def expval(op):
            return float(np.real(np.vdot(psi, op @ psi)))

    else:
        n = state.n_spins
        rho = state.matrix

        def expval(op):
            return float(np.real(np.trace(rho @ op)))

    ops = build_collective_operators(n)
    jx2 = ops.jx @ ops.jx
    jy2 = ops.jy @ ops.jy
    jz2 = ops.jz @ ops.jz
    mean_jx2 = expval(jx2)
    mean_jy2 = expval(jy2)
    mean_jz2 = expval(jz2)
    mean_jx4 = expval(jx2 @ jx2)
    mean_jz4 = expval(jz2 @ jz2)
    mean_jz_jx2_jz = expval(ops.jz @ jx2 @ ops.jz)
    return CollectiveMoments(
        mean_jx2=mean_jx2,
        mean_jy2=mean_jy2,
        mean_jz2=mean_jz2,
        mean_jz_jx2_jz=mean_jz_jx2_jz,
        var_jx2=mean_jx4 - mean_jx2**2,
        var_jz2=mean_jz4 - mean_jz2**2,
    )


@dataclass(frozen=True)
class GlobalRotation:
    """Circuit step applying exp(+i*angle*J_axis) to every spin collectively."""

    axis: str
    angle: float


@dataclass(frozen=True)
class DickeDiagonal:
    """Circuit step diagonal in Jz; phases[i] multiplies the M = i - N/2 sector."""

    phases: np.ndarray = field(repr=False)


def _full_register_pauli_sum(n_spins: int, axis: str) -> np.ndarray:
    paulis = {
        "x": np.array([[0, 1], [1, 0]], dtype=complex),
        "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "z": np.array([[1, 0], [0, -1]], dtype=complex),
    }
    sigma = paulis[axis]
    dim = 2**n_spins
    total = np.zeros((dim, dim), dtype=complex)
    for site in range(n_spins):
        op = np.eye(1, dtype=complex)
        for other in range(n_spins):
            op = np.kron(op, sigma if other == site else np.eye(2, dtype=complex))
        total += op
    return total / 2.0


def _register_m_per_basis_state(n_spins: int) -> np.ndarray:
    # bit 1 means spin down, so M = N/2 - popcount
    indices = np.arange(2**n_spins, dtype=np.uint64)
    pops = np.array([bin(int(b)).count("1") for b in indices])
    return n_spins / 2.0 - pops


def full_register_oracle(
    n_spins: int, circuit: list[GlobalRotation | DickeDiagonal]
) -> tuple[DickeKet, float]:
    """Brute-force cross-check: run the circuit on the full 2^N register.

    Starts from all spins down, applies each step on the full register,
    projects onto the symmetric sector and returns (ket, leakage) where
    leakage is the probability weight left outside the sector.  Intended
    purely as a test oracle; N is capped at 8.
    """
    if n_spins > _FULL_REGISTER_MAX_SPINS:
        raise ResourceLimitError(
            f"full-register oracle limited to N<={_FULL_REGISTER_MAX_SPINS}, got {n_spins}"
        )
    dim = 2**n_spins
    psi = np.zeros(dim, dtype=complex)
    psi[dim - 1] = 1.0  # |1>^N, all spins down
    m_of_basis = _register_m_per_basis_state(n_spins)
    for step in circuit:
        if isinstance(step, GlobalRotation):
            generator = _full_register_pauli_sum(n_spins, step.axis)
            evals, evecs = np.linalg.eigh(generator)
            psi = (evecs * np.exp(1j * step.angle * evals)) @ (evecs.conj().T @ psi)
        elif isinstance(step, DickeDiagonal):
            phases = np.asarray(step.phases, dtype=complex)
            sector = np.rint(m_of_basis + n_spins / 2.0).astype(int)
            psi = phases[sector] * psi
        else:
            raise TypeError(f"unsupported circuit step {step!r}")

    # project onto the symmetric sector, basis state by excitation number
    dicke_amps = np.zeros(n_spins + 1, dtype=complex)
    for i in range(n_spins + 1):
        mask = np.rint(m_of_basis + n_spins / 2.0).astype(int) == i
        count = int(np.sum(mask))
        dicke_amps[i] = np.sum(psi[mask]) / np.sqrt(count)
    captured = float(np.sum(np.abs(dicke_amps) ** 2))
    leakage = max(0.0, 1.0 - captured)
    dicke_amps = dicke_amps / np.sqrt(captured)
    return DickeKet(n_spins, dicke_amps), leakage
