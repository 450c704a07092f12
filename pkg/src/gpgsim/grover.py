"""Amplitude-amplified preparation of Dicke states.

One step is the product of two reflections, both compiled from phasing
schedules: U_w flips the target state's sign and U_s flips the tipped
initial state's sign (the latter by conjugating the ell = 0 schedule with
collective y rotations).  The iterate stays in the two-dimensional span
of the target and the initial state, so the output fidelity has the
closed form sin^2((n_steps + 1/2) * delta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gpg
from .dicke import DickeKet, DickeDiagonal, GlobalRotation, spin_coherent, wigner_d_matrix

__all__ = [
    "GroverPlan",
    "make_plan",
    "asymptotic_step_count",
    "grover_step",
    "prepare_dicke",
    "predicted_fidelity",
    "grover_circuit_steps",
]


@dataclass(frozen=True)
class GroverPlan:
    """Derived quantities fixing one preparation run.

    ``degenerate`` marks |M| = J targets, which need no amplification:
    M = -J is the start state and M = +J is one collective flip away.
    """

    n_spins: int
    target_m: float
    epsilon: float
    overlap: float
    grover_delta: float
    n_steps: int
    degenerate: bool = False

    @property
    def gpg_count(self) -> int:
        """Total gates used: two phasing maps per step."""
        per_map = self.n_spins // 2 if self.n_spins % 2 == 0 else self.n_spins
        return self.n_steps * 2 * per_map


def make_plan(n_spins: int, target_m: float) -> GroverPlan:
    """Plan the iteration toward |J, M>.

    The initial-state overlap is taken from the exact rotation matrix
    element |<J,M| e^{i eps Jy} |J,-J>| rather than its large-J asymptote,
    so the step count and the predicted fidelity are self-consistent.
    """
    j = n_spins / 2.0
    if abs(target_m) > j or (n_spins + 2 * target_m) % 2 != 0:
        raise ValueError(f"M={target_m} is not in the Dicke ladder for N={n_spins}")
    if abs(abs(target_m) - j) < 1e-12:
        epsilon = 0.0 if target_m > 0 else math.pi
        return GroverPlan(
            n_spins=n_spins,
            target_m=target_m,
            epsilon=epsilon,
            overlap=1.0,
            grover_delta=math.pi,
            n_steps=0,
            degenerate=True,
        )
    epsilon = math.acos(target_m / j)
    target_index = int(round(target_m + j))
    overlap = abs(wigner_d_matrix(n_spins, -epsilon)[target_index, 0])
    delta = 2.0 * math.asin(min(1.0, overlap))
    # Optimal count for the exact rotation angle delta; the small-overlap
    # form floor(pi/(4*overlap)) overshoots by one step at some N (first
    # at N=28), where it breaks the sqrt(2/(pi N)) error guarantee.
    n_steps = int(math.floor(math.pi / (4.0 * math.asin(min(1.0, overlap)))))
    return GroverPlan(
        n_spins=n_spins,
        target_m=target_m,
        epsilon=epsilon,
        overlap=overlap,
        grover_delta=delta,
        n_steps=n_steps,
    )


def asymptotic_step_count(n_spins: int) -> int:
    """Large-N step count floor(pi^{5/4} N^{1/4} / 2^{9/4}) for the M=0 target."""
    if n_spins < 1:
        raise ValueError(f"need at least one spin, got N={n_spins}")
    return int(math.floor(math.pi ** 1.25 * n_spins ** 0.25 / 2 ** 2.25))


def _target_reflection(plan: GroverPlan) -> np.ndarray:
    ell = int(round(plan.target_m + plan.n_spins / 2.0))
    return gpg.schedule_product_diagonal(gpg.phasing_schedule(plan.n_spins, ell))


def _initial_reflection(plan: GroverPlan) -> np.ndarray:
    n = plan.n_spins
    w0 = gpg.schedule_product_diagonal(gpg.phasing_schedule(n, 0))
    rot = wigner_d_matrix(n, -plan.epsilon)  # exp(+i eps jy)
    return rot @ np.diag(w0) @ rot.conj().T


def grover_step(state: DickeKet, plan: GroverPlan) -> DickeKet:
    """Apply U_w then U_s."""
    if state.n_spins != plan.n_spins:
        raise ValueError(f"state has N={state.n_spins}, plan has N={plan.n_spins}")
    amps = _target_reflection(plan) * state.amplitudes
    amps = _initial_reflection(plan) @ amps
    return DickeKet(state.n_spins, amps)


def prepare_dicke(n_spins: int, target_m: float) -> tuple[DickeKet, float]:
    """Run the planned iteration from the tipped start state.

    Returns the output ket and its fidelity |<J,M|psi>|^2 with the target.
    """
    plan = make_plan(n_spins, target_m)
    target = DickeKet.basis_state(n_spins, target_m)
    if plan.degenerate:
        if target_m < 0:
            out = DickeKet.basis_state(n_spins, -n_spins / 2.0)
        else:
            flip = wigner_d_matrix(n_spins, -math.pi)  # exp(+i pi jy), a global flip
            out = DickeKet(n_spins, flip @ DickeKet.basis_state(n_spins, -n_spins / 2.0).amplitudes)
        return out, out.fidelity(target)
    state = spin_coherent(n_spins, plan.epsilon)
    for _ in range(plan.n_steps):
        state = grover_step(state, plan)
    return state, state.fidelity(target)


def predicted_fidelity(plan: GroverPlan) -> float:
    """Closed-form output fidelity sin^2((n_steps + 1/2) * delta)."""
    return math.sin((plan.n_steps + 0.5) * plan.grover_delta) ** 2


def grover_circuit_steps(plan: GroverPlan) -> list[GlobalRotation | DickeDiagonal]:
    """The preparation as primitive steps, for the full-register oracle.

    Starts from |J,-J>: tip by epsilon about y, then per step apply the
    target schedule diagonal and the conjugated ell = 0 schedule diagonal.
    """
    n = plan.n_spins
    ell = int(round(plan.target_m + n / 2.0))
    w_target = gpg.schedule_product_diagonal(gpg.phasing_schedule(n, ell))
    w_zero = gpg.schedule_product_diagonal(gpg.phasing_schedule(n, 0))
    steps: list[GlobalRotation | DickeDiagonal] = [GlobalRotation("y", plan.epsilon)]
    for _ in range(plan.n_steps):
        steps.append(DickeDiagonal(w_target))
        steps.append(GlobalRotation("y", -plan.epsilon))
        steps.append(DickeDiagonal(w_zero))
        steps.append(GlobalRotation("y", plan.epsilon))
    return steps
