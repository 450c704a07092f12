"""Geometric phase gates and the composite phasing maps built from them.

A single gate is diagonal in the collective basis,
``exp(-i 2 chi sin(theta*M + phi))``, and a scheduled product of N/2 such
gates (N for odd N) applies a pi phase to exactly one Dicke state, up to
one overall phase that is tracked explicitly where it matters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dicke import DickeKet, m_values

__all__ = [
    "GpgParams",
    "PhasingSchedule",
    "ModeDisplacement",
    "DispersiveInterval",
    "gpg_diagonal",
    "gpg_unitary",
    "phasing_schedule",
    "schedule_product_diagonal",
    "ideal_phasing_diagonal",
    "align_global_phase",
    "apply_phasing",
    "gpg_pulse_decomposition",
    "schedule_to_json",
    "schedule_from_json",
]


@dataclass(frozen=True)
class GpgParams:
    """One gate: dispersive angle theta, loop orientation phi, action chi.

    chi >= 0 by convention; a sign flip of chi is absorbed as phi -> phi + pi.
    """

    theta: float
    phi: float
    chi: float

    def __post_init__(self):
        for name in ("theta", "phi", "chi"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)}")
        if self.chi < 0:
            raise ValueError("chi must be non-negative (absorb the sign into phi)")


@dataclass(frozen=True)
class PhasingSchedule:
    """Ordered gate list whose product flips the sign of one Dicke state.

    ``ordering`` permutes gate indices (0-based).  The noiseless product is
    ordering-independent because all gates are diagonal; the ordering is
    kept because gate durations differ, which matters for decoupling and
    decay analyses downstream.
    """

    n_spins: int
    target_ell: int
    gates: tuple[GpgParams, ...]
    ordering: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.ordering:
            object.__setattr__(self, "ordering", tuple(range(len(self.gates))))
        if sorted(self.ordering) != list(range(len(self.gates))):
            raise ValueError(f"ordering {self.ordering} is not a permutation of the gates")

    def gates_in_order(self) -> tuple[GpgParams, ...]:
        return tuple(self.gates[i] for i in self.ordering)

    def reordered(self, ordering) -> "PhasingSchedule":
        return PhasingSchedule(self.n_spins, self.target_ell, self.gates, tuple(ordering))


def gpg_diagonal(n_spins: int, params: GpgParams) -> np.ndarray:
    """Diagonal entries exp(-i 2 chi sin(theta*M + phi)) for M = -J..J."""
    m = m_values(n_spins)
    return np.exp(-2j * params.chi * np.sin(params.theta * m + params.phi))


def gpg_unitary(n_spins: int, params: GpgParams) -> np.ndarray:
    return np.diag(gpg_diagonal(n_spins, params))


def phasing_schedule(n_spins: int, ell: int) -> PhasingSchedule:
    """The gate schedule realizing a pi phase on the state with ell excitations.

    Even N uses N/2 gates with chi = pi/(N+1); odd N uses N gates with
    chi = pi/(2(N+1));  theta_k = 2 pi k/(N+1) and
    phi_k = 2 pi k (N/2 - ell)/(N+1) + pi/2 in both cases.
    """
    if not 0 <= ell <= n_spins:
        raise ValueError(f"ell must lie in [0, N]={n_spins}, got {ell}")
    if n_spins % 2 == 0:
        n_gates = n_spins // 2
        chi = np.pi / (n_spins + 1)
    else:
        n_gates = n_spins
        chi = np.pi / (2 * (n_spins + 1))
    gates = []
    for k in range(1, n_gates + 1):
        theta_k = 2 * np.pi * k / (n_spins + 1)
        phi_k = 2 * np.pi * k * (n_spins / 2 - ell) / (n_spins + 1) + np.pi / 2
        gates.append(GpgParams(theta=theta_k, phi=phi_k, chi=chi))
    return PhasingSchedule(n_spins, ell, tuple(gates))


def schedule_product_diagonal(schedule: PhasingSchedule) -> np.ndarray:
    """Product of all gate diagonals, in the stored ordering."""
    diag = np.ones(schedule.n_spins + 1, dtype=complex)
    for gate in schedule.gates_in_order():
        diag *= gpg_diagonal(schedule.n_spins, gate)
    return diag


def ideal_phasing_diagonal(n_spins: int, ell: int) -> np.ndarray:
    """The target diagonal: -1 at the state with ell excitations, +1 elsewhere."""
    diag = np.ones(n_spins + 1, dtype=complex)
    diag[ell] = -1.0
    return diag


def align_global_phase(
    diag: np.ndarray, target: np.ndarray | None = None, reference_index: int = 0
) -> np.ndarray:
    """Fix the overall phase using the M = -J entry.

    With ``target`` given, rotate ``diag`` so its reference entry has the
    same phase as the target's (the reference entry may itself carry the
    pi flip, e.g. for ell = 0); otherwise make the reference entry
    positive real.
    """
    ref = diag[reference_index]
    if abs(ref) < 1e-300:
        raise ValueError("cannot align phase to a vanishing reference entry")
    phase = abs(ref) / ref
    if target is not None:
        goal = target[reference_index]
        phase *= goal / abs(goal)
    return diag * phase


def apply_phasing(state: DickeKet, schedule: PhasingSchedule) -> DickeKet:
    """Multiply the state by the schedule's product diagonal."""
    if state.n_spins != schedule.n_spins:
        raise ValueError(
            f"state has N={state.n_spins} but schedule targets N={schedule.n_spins}"
        )
    return DickeKet(state.n_spins, schedule_product_diagonal(schedule) * state.amplitudes)


@dataclass(frozen=True)
class ModeDisplacement:
    """Instantaneous mode displacement D(gamma)."""

    gamma: complex


@dataclass(frozen=True)
class DispersiveInterval:
    """Dispersive evolution for duration theta/g under sign * g a†a Jz.

    sign=-1 intervals are realized physically by conjugating the native
    coupling with a global spin flip, so the control sign function C(t)
    is -1 there.
    """

    sign: int
    theta: float


def gpg_pulse_decomposition(
    params: GpgParams,
    alpha_mag: float | None = None,
    beta_mag: float | None = None,
    kappa_over_g: float = 0.0,
) -> list[ModeDisplacement | DispersiveInterval]:
    """The displacement/dispersive sequence realizing one gate from vacuum.

    With the mode starting in vacuum the leading dispersive interval is a
    no-op and is dropped, leaving seven steps: four displacements and
    three equal dispersive intervals of duration theta/g.  The last two
    displacements are shrunk by exp(-kappa*theta/g) so the mode returns
    to vacuum under decay.  Phases are assigned as arg(alpha) = phi,
    arg(beta) = 0.  When the loop area vanishes (alpha or beta zero) the
    dispersive intervals cancel pairwise and only displacements remain.
    """
    if alpha_mag is None and beta_mag is None:
        alpha_mag = beta_mag = math.sqrt(params.chi)
    if alpha_mag is None or beta_mag is None:
        raise ValueError("give both alpha_mag and beta_mag, or neither")
    if abs(alpha_mag * beta_mag - params.chi) > 1e-12 * max(1.0, params.chi):
        raise ValueError(
            f"|alpha||beta| = {alpha_mag * beta_mag} does not match chi = {params.chi}"
        )
    alpha = alpha_mag * np.exp(1j * params.phi)
    beta = complex(beta_mag)
    shrink = math.exp(-kappa_over_g * params.theta)
    if alpha_mag == 0.0 or beta_mag == 0.0:
        steps = [
            ModeDisplacement(alpha),
            ModeDisplacement(beta),
            ModeDisplacement(-alpha * shrink),
            ModeDisplacement(-beta * shrink),
        ]
        return [s for s in steps if abs(s.gamma) > 0.0]
    return [
        ModeDisplacement(alpha),
        DispersiveInterval(-1, params.theta),
        ModeDisplacement(beta),
        DispersiveInterval(+1, params.theta),
        ModeDisplacement(-alpha * shrink),
        DispersiveInterval(-1, params.theta),
        ModeDisplacement(-beta * shrink),
    ]


def schedule_to_json(schedule: PhasingSchedule) -> str:
    doc = {
        "n_spins": schedule.n_spins,
        "target_ell": schedule.target_ell,
        "gates": [
            {"theta": g.theta, "phi": g.phi, "chi": g.chi} for g in schedule.gates
        ],
        "ordering": list(schedule.ordering),
    }
    return json.dumps(doc, indent=2)


def schedule_from_json(text: str) -> PhasingSchedule:
    doc = json.loads(text)
    gates = tuple(GpgParams(g["theta"], g["phi"], g["chi"]) for g in doc["gates"])
    return PhasingSchedule(
        n_spins=doc["n_spins"],
        target_ell=doc["target_ell"],
        gates=gates,
        ordering=tuple(doc["ordering"]),
    )
