"""Ancilla-controlled gates and the error-tolerant probe-state circuits.

The mode is never simulated here: controlled displacements compile to
their net block unitaries, so a controlled gate is identity on the
ancilla-|0> block and the gate on the |1> block.  Two deterministic
compile-time phase corrections are included, both free operations:

* each phasing map carries a known overall phase e^{i pi/(N+1)} relative
  to the ideal rank-1 reflection, which becomes a physical relative
  phase in the controlled setting and is cancelled by an ancilla frame
  rotation;
* the cat-generating step e^{i Jy pi/2} U(pi, pi/2, pi/8) e^{-i Jy pi/2}
  maps |J,-J> to (|J,-J> - i (-1)^J |J,J>)/sqrt(2); a collective z
  rotation by -pi/(2N) turns the relative -i(-1)^J into +1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import gpg
from .dicke import DickeKet, m_values, rotation_about
from .gpg import GpgParams

__all__ = [
    "AncillaDickeState",
    "AncillaOperator",
    "CircuitOutcome",
    "UnsupportedParityError",
    "controlled_gpg",
    "controlled_collective_rotation",
    "controlled_grover",
    "ideal_preparation_block",
    "ghz_step_block",
    "z_correction_diagonal",
    "phi_u_state",
    "phi1_state",
    "phi2_state",
    "prepare_phi1",
    "prepare_phi2",
]


class UnsupportedParityError(ValueError):
    """The classical Z correction assumes N/2 odd; other parities differ."""


@dataclass(frozen=True)
class AncillaDickeState:
    """Joint pure state of one ancilla qubit and the Dicke register."""

    n_spins: int
    amplitudes: np.ndarray  # shape (2, N+1), rows = ancilla |0>, |1>

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2, self.n_spins + 1):
            raise ValueError(f"expected shape (2, {self.n_spins + 1}), got {amps.shape}")
        norm = np.sum(np.abs(amps) ** 2)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state not normalized: total weight {norm!r}")
        object.__setattr__(self, "amplitudes", amps)


@dataclass(frozen=True)
class AncillaOperator:
    """Block-diagonal operator in the ancilla basis: |0><0| A0 + |1><1| A1."""

    n_spins: int
    block0: np.ndarray
    block1: np.ndarray

    def apply(self, state: AncillaDickeState) -> AncillaDickeState:
        if state.n_spins != self.n_spins:
            raise ValueError("dimension mismatch between operator and state")
        amps = np.vstack([self.block0 @ state.amplitudes[0], self.block1 @ state.amplitudes[1]])
        return AncillaDickeState(self.n_spins, amps)

    def as_matrix(self) -> np.ndarray:
        """Dense 2(N+1) x 2(N+1) form, for brute-force comparisons."""
        dim = self.n_spins + 1
        mat = np.zeros((2 * dim, 2 * dim), dtype=complex)
        mat[:dim, :dim] = self.block0
        mat[dim:, dim:] = self.block1
        return mat


@dataclass(frozen=True)
class CircuitOutcome:
    outcome_r: int
    probability: float
    conditional_state: DickeKet
    fidelity: float


def controlled_gpg(n_spins: int, params: GpgParams) -> AncillaOperator:
    """Gate on the register only when the ancilla is |1>."""
    dim = n_spins + 1
    return AncillaOperator(
        n_spins=n_spins,
        block0=np.eye(dim, dtype=complex),
        block1=gpg.gpg_unitary(n_spins, params),
    )


def controlled_collective_rotation(
    n_spins: int, small_theta: float
) -> tuple[AncillaOperator, float]:
    """Controlled e^{i Jy pi/2} mediated through one large-area gate.

    The |1> block is e^{-i Jx pi/2} U(theta, 0, pi/(4 theta)) e^{i Jx pi/2},
    which approaches e^{i Jy pi/2} as theta -> 0 with block infidelity
    O((theta N)^2).  Returns (operator, infidelity of the underlying
    z-block against e^{-i Jz pi/2}).
    """
    if small_theta <= 0:
        raise ValueError(f"small_theta must be positive, got {small_theta}")
    if small_theta * n_spins >= 1.0:
        warnings.warn(
            f"theta*N = {small_theta * n_spins:.3g} >= 1; the linearization "
            "sin(theta Jz) ~ theta Jz needs theta << 1/N",
            stacklevel=2,
        )
    params = GpgParams(small_theta, 0.0, math.pi / (4.0 * small_theta))
    z_block = gpg.gpg_diagonal(n_spins, params)
    m = m_values(n_spins)
    ideal = np.exp(-1j * math.pi / 2.0 * m)
    overlap = np.sum(np.conj(ideal) * z_block) / (n_spins + 1)
    infidelity = max(0.0, 1.0 - abs(overlap) ** 2)
    conj = rotation_about(n_spins, "x", -math.pi / 2.0)
    block1 = conj @ np.diag(z_block) @ conj.conj().T
    dim = n_spins + 1
    op = AncillaOperator(n_spins, np.eye(dim, dtype=complex), block1)
    return op, infidelity


def controlled_grover(n_spins: int, target_m: float = 0.0) -> AncillaOperator:
    """Controlled version of the full amplification unitary U_G^{#G}.

    The |1> block is the literal product of schedule diagonals and
    rotations; the accumulated schedule phase (e^{i pi/(N+1)} per phasing
    map, two maps per step) is divided out, standing in for the ancilla
    frame rotation that makes the block the exact product of reflections.
    """
    from .grover import make_plan  # deferred to avoid an import cycle

    plan = make_plan(n_spins, target_m)
    dim = n_spins + 1
    w_target = gpg.schedule_product_diagonal(
        gpg.phasing_schedule(n_spins, int(round(target_m + n_spins / 2.0)))
    )
    w_zero = gpg.schedule_product_diagonal(gpg.phasing_schedule(n_spins, 0))
    tip = rotation_about(n_spins, "y", plan.epsilon)
    u_s = tip @ np.diag(w_zero) @ tip.conj().T
    step = u_s @ np.diag(w_target)
    block1 = np.linalg.matrix_power(step, plan.n_steps)
    # Two plan-known phases per compiled block: the schedule phase
    # e^{i pi/(N+1)} per phasing map, and the reflection-product sign
    # (U_s U_w is a rotation by delta + pi on the Grover plane, so each
    # step contributes -1 on the branch state).
    maps_per_step = 2
    known_phase = (-1.0) ** plan.n_steps * np.exp(
        1j * math.pi / (n_spins + 1)
    ) ** (maps_per_step * plan.n_steps)
    block1 = block1 / known_phase
    return AncillaOperator(n_spins, np.eye(dim, dtype=complex), block1)


def ideal_preparation_block(n_spins: int, target_m: float = 0.0) -> np.ndarray:
    """The exact plane rotation |J,-J> -> |J,M>, identity off the span."""
    dim = n_spins + 1
    a = DickeKet.basis_state(n_spins, -n_spins / 2.0).amplitudes
    b = DickeKet.basis_state(n_spins, target_m).amplitudes
    block = np.eye(dim, dtype=complex)
    block -= np.outer(a, a.conj()) + np.outer(b, b.conj())
    block += np.outer(b, a.conj()) - np.outer(a, b.conj())
    return block


def ghz_step_block(n_spins: int) -> np.ndarray:
    """Cat step mapping |J,-J> to (|J,-J> + |J,J>)/sqrt(2) exactly.

    e^{i Jy pi/2} U(pi, pi/2, pi/8) e^{-i Jy pi/2} followed by the
    z-rotation -pi/(2N) that absorbs the intrinsic relative phase of the
    generated cat (valid for odd J, the parity these circuits assume).
    """
    if n_spins % 2 != 0 or (n_spins // 2) % 2 != 1:
        raise UnsupportedParityError(
            f"cat phase correction assumes N/2 odd, got N={n_spins}"
        )
    kick = gpg.gpg_unitary(n_spins, GpgParams(math.pi, math.pi / 2.0, math.pi / 8.0))
    rot = rotation_about(n_spins, "y", math.pi / 2.0)
    raw = rot @ kick @ rot.conj().T
    fix = rotation_about(n_spins, "z", -math.pi / (2.0 * n_spins))
    # the z rotation leaves e^{i pi/4} on the cat; remove it so the step
    # maps |J,-J> to the plus cat with no phase at all
    return np.exp(-1j * math.pi / 4.0) * (fix @ raw)


def z_correction_diagonal(n_spins: int) -> np.ndarray:
    """Z on every spin: |J,M> picks up (-1)^(J-M)."""
    j = n_spins / 2.0
    return np.array([(-1.0) ** round(j - m) for m in m_values(n_spins)], dtype=complex)


def phi_u_state(u: int, n: int, k: int) -> DickeKet:
    """Error-tolerant probe family on N = k*n*u spins.

    Amplitudes sqrt(binom(n, j)/2^n) on M = k*j - J; u sets loss
    tolerance and n dephasing tolerance.
    """
    if u < 1 or n < 1 or k < 1:
        raise ValueError("u, n, k must all be positive integers")
    n_spins = k * n * u
    j_total = n_spins / 2.0
    amps = np.zeros(n_spins + 1, dtype=complex)
    for j in range(n + 1):
        m = k * j - j_total
        amps[int(round(m + j_total))] = math.sqrt(math.comb(n, j) / 2.0**n)
    return DickeKet(n_spins, amps)


def phi1_state(n_spins: int) -> DickeKet:
    """(|J,-J> + sqrt(2)|J,0> + |J,J>)/2, tolerant to one erasure."""
    if n_spins % 2 != 0:
        raise ValueError("phi_1 needs even N")
    return phi_u_state(1, 2, n_spins // 2)


def phi2_state(n_spins: int) -> DickeKet:
    """(|J,-J> + |J,0>)/sqrt(2), tolerant to one dephasing error."""
    if n_spins % 2 != 0:
        raise ValueError("phi_2 needs even N")
    return phi_u_state(2, 1, n_spins // 2)


def _measure_and_correct(
    branch0: np.ndarray, branch1: np.ndarray, n_spins: int, target: DickeKet
) -> list[CircuitOutcome]:
    """Ancilla X-basis measurement of (|0>b0 + |1>b1)/sqrt(2), then Z(r)."""
    z_corr = z_correction_diagonal(n_spins)
    outcomes = []
    for r in (+1, -1):
        raw = (branch0 + r * branch1) / 2.0
        prob = float(np.sum(np.abs(raw) ** 2))
        state = raw / math.sqrt(prob)
        if r == -1:
            state = z_corr * state
        ket = DickeKet(n_spins, state)
        outcomes.append(
            CircuitOutcome(
                outcome_r=r,
                probability=prob,
                conditional_state=ket,
                fidelity=ket.fidelity(target),
            )
        )
    return outcomes


def _check_parity(n_spins: int):
    if n_spins % 2 != 0 or (n_spins // 2) % 2 != 1:
        raise UnsupportedParityError(
            f"the Z(r) correction assumes N even with N/2 odd, got N={n_spins}"
        )


def _controlled_preparation(n_spins: int, small_theta: float, ideal: bool, branch1):
    """Apply the controlled |J,-J> -> |J,0> preparation to the |1> branch."""
    if ideal:
        return ideal_preparation_block(n_spins) @ branch1
    tip_op, _ = controlled_collective_rotation(n_spins, small_theta)
    return controlled_grover(n_spins).block1 @ (tip_op.block1 @ branch1)


def prepare_phi2(
    n_spins: int,
    small_theta: float | None = None,
    use_ideal_gates: bool = False,
) -> list[CircuitOutcome]:
    """Both measurement branches of the phi_2 preparation circuit.

    Ancilla in |+>, controlled tip to the equator, controlled
    amplification, X-basis measurement, classical Z(r) correction.
    ``use_ideal_gates`` swaps the controlled preparation for the exact
    |J,-J> -> |J,0> rotation, isolating circuit algebra from gate error.
    """
    _check_parity(n_spins)
    if small_theta is None:
        small_theta = 1e-3 / n_spins
    bottom = DickeKet.basis_state(n_spins, -n_spins / 2.0).amplitudes
    branch0 = bottom.copy()
    branch1 = _controlled_preparation(n_spins, small_theta, use_ideal_gates, bottom)
    return _measure_and_correct(branch0, branch1, n_spins, phi2_state(n_spins))


def prepare_phi1(
    n_spins: int,
    small_theta: float | None = None,
    use_ideal_gates: bool = False,
) -> list[CircuitOutcome]:
    """Both measurement branches of the phi_1 preparation circuit.

    As for phi_2 but the passive branch holds the cat
    (|J,-J> + |J,J>)/sqrt(2), installed by one controlled cat step
    before an ancilla X swaps the roles of the branches.
    """
    _check_parity(n_spins)
    if small_theta is None:
        small_theta = 1e-3 / n_spins
    bottom = DickeKet.basis_state(n_spins, -n_spins / 2.0).amplitudes
    branch0 = bottom.copy()
    branch1 = ghz_step_block(n_spins) @ bottom
    branch0, branch1 = branch1, branch0  # ancilla X
    branch1 = _controlled_preparation(n_spins, small_theta, use_ideal_gates, branch1)
    return _measure_and_correct(branch0, branch1, n_spins, phi1_state(n_spins))
