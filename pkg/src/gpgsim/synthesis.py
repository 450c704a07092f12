"""Variational synthesis of Dicke-subspace states and unitaries.

A state map |J,-J> -> |target> is sought as

    K = [prod_s e^{i beta_s Jy} U(theta_s, phi_s, chi_s)] P,
    P = e^{-i Jy pi/2} U(pi/2, 0, pi/4) e^{i Jy pi/2},

optimized over the 4N-4 free parameters by seeded Nelder-Mead restarts.
A full unitary U = sum_k e^{i lambda_k}|v_k><v_k| is then assembled as a
product of K(lambda_k) e^{i lambda_k |J,-J><J,-J|} K(lambda_k)† factors,
with the rank-1 phaser realized by the ell = 0 schedule at rescaled
action chi -> (2 pi - lambda)/(N+1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from . import gpg
from .dicke import DickeKet, m_values, rotation_about, _jy_eigensystem
from .gpg import GpgParams

__all__ = [
    "AnsatzParams",
    "GateStep",
    "SynthesisResult",
    "ansatz_unitary",
    "ansatz_column",
    "optimize_state_map",
    "phaser_diagonal",
    "synthesize_unitary",
    "program_unitary",
    "program_to_json",
    "program_from_json",
]


@dataclass(frozen=True)
class AnsatzParams:
    """4N-4 free parameters: N-1 rotation angles and N-1 gate triples."""

    n_spins: int
    betas: tuple[float, ...]
    gate_params: tuple[GpgParams, ...]

    def __post_init__(self):
        expected = self.n_spins - 1
        if len(self.betas) != expected or len(self.gate_params) != expected:
            raise ValueError(
                f"need {expected} rotation angles and gate triples for N={self.n_spins}"
            )

    @property
    def free_parameter_count(self) -> int:
        return 4 * self.n_spins - 4


def _prefix_matrix(n_spins: int) -> np.ndarray:
    rot = rotation_about(n_spins, "y", math.pi / 2.0)
    kick = gpg.gpg_diagonal(n_spins, GpgParams(math.pi / 2.0, 0.0, math.pi / 4.0))
    return rot.conj().T @ (kick[:, None] * rot)


def _vector_to_raw(vec: np.ndarray, n_spins: int):
    n_free = n_spins - 1
    betas = vec[:n_free]
    thetas = vec[n_free : 2 * n_free]
    phis = vec[2 * n_free : 3 * n_free]
    chis = vec[3 * n_free :]
    return betas, thetas, phis, chis


def _ansatz_column_raw(n_spins: int, vec: np.ndarray) -> np.ndarray:
    """K|J,-J> for raw parameters (chi may be negative during search)."""
    betas, thetas, phis, chis = _vector_to_raw(vec, n_spins)
    m = m_values(n_spins)
    evals, evecs = _jy_eigensystem(n_spins)
    v = _prefix_matrix(n_spins)[:, 0].copy()
    for s in range(n_spins - 2, -1, -1):
        v = np.exp(-2j * chis[s] * np.sin(thetas[s] * m + phis[s])) * v
        v = evecs @ (np.exp(1j * betas[s] * evals) * (evecs.conj().T @ v))
    return v


def ansatz_column(params: AnsatzParams) -> np.ndarray:
    """The synthesized state K|J,-J>."""
    vec = _params_to_vector(params)
    return _ansatz_column_raw(params.n_spins, vec)


def ansatz_unitary(params: AnsatzParams) -> np.ndarray:
    """The full ansatz product as a dense matrix."""
    n = params.n_spins
    m = m_values(n)
    mat = _prefix_matrix(n)
    for s in range(n - 2, -1, -1):
        g = params.gate_params[s]
        mat = np.exp(-2j * g.chi * np.sin(g.theta * m + g.phi))[:, None] * mat
        mat = rotation_about(n, "y", params.betas[s]) @ mat
    return mat


def _params_to_vector(params: AnsatzParams) -> np.ndarray:
    return np.concatenate(
        [
            params.betas,
            [g.theta for g in params.gate_params],
            [g.phi for g in params.gate_params],
            [g.chi for g in params.gate_params],
        ]
    )


def _vector_to_params(n_spins: int, vec: np.ndarray) -> AnsatzParams:
    betas, thetas, phis, chis = _vector_to_raw(vec, n_spins)
    gates = []
    for th, ph, ch in zip(thetas, phis, chis):
        if ch < 0:  # absorb the sign into phi, keeping chi >= 0
            ch, ph = -ch, ph + math.pi
        gates.append(GpgParams(float(th), float(ph % (2 * math.pi)), float(ch)))
    return AnsatzParams(n_spins, tuple(float(b) for b in betas), tuple(gates))


def optimize_state_map(
    n_spins: int,
    target: DickeKet,
    restarts: int = 50,
    seed: int = 0,
    maxiter: int | None = None,
) -> tuple[AnsatzParams, float]:
    """Minimize 1 - |<target|K|J,-J>|^2 by seeded Nelder-Mead restarts.

    Deterministic for a given seed; the best restart (earliest index on
    ties) is polished by a second tight simplex run.  No convergence
    guarantee: the achieved infidelity is returned alongside the params.
    """
    if target.n_spins != n_spins:
        raise ValueError(f"target has N={target.n_spins}, expected {n_spins}")
    if restarts < 1:
        raise ValueError("need at least one restart")
    t_amps = target.amplitudes
    n_free = n_spins - 1
    rng = np.random.default_rng(seed)

    def infidelity(vec):
        v = _ansatz_column_raw(n_spins, vec)
        return 1.0 - abs(np.vdot(t_amps, v)) ** 2

    options = {
        "maxiter": maxiter or 6000,
        "xatol": 1e-12,
        "fatol": 1e-14,
        "adaptive": True,
    }
    best_vec, best_val = None, math.inf
    for _ in range(restarts):
        start = np.concatenate(
            [
                rng.uniform(0.0, math.pi, n_free),
                rng.uniform(0.05, 2 * math.pi, n_free),
                rng.uniform(0.0, 2 * math.pi, n_free),
                rng.uniform(0.0, math.pi, n_free),
            ]
        )
        res = scipy.optimize.minimize(
            infidelity, start, method="Nelder-Mead", options=options
        )
        if res.fun < best_val:
            best_vec, best_val = res.x, res.fun
    polish = scipy.optimize.minimize(
        infidelity, best_vec, method="Nelder-Mead", options=options
    )
    if polish.fun < best_val:
        best_vec, best_val = polish.x, polish.fun
    return _vector_to_params(n_spins, best_vec), float(best_val)


def _scaled_schedule_chi(n_spins: int, lam: float) -> float:
    """Per-gate action realizing e^{-i lam |J,-J><J,-J|} with the ell=0 angles."""
    if n_spins % 2 == 0:
        return lam / (n_spins + 1)
    return lam / (2 * (n_spins + 1))


def scaled_phasing_diagonal(n_spins: int, lam: float) -> np.ndarray:
    """e^{-i lam |J,-J><J,-J|} from the ell = 0 schedule with chi rescaled.

    The direct generalization of the pi-phase identity: the product of
    the schedule's gates at chi -> lam/(N+1) (even N; half that for odd
    N), with the known overall schedule phase divided out.
    """
    schedule = gpg.phasing_schedule(n_spins, 0)
    chi_gen = _scaled_schedule_chi(n_spins, lam % (2 * math.pi))
    diag = np.ones(n_spins + 1, dtype=complex)
    for gate in schedule.gates:
        diag *= gpg.gpg_diagonal(n_spins, GpgParams(gate.theta, gate.phi, chi_gen))
    # off-target entries all equal the schedule phase; divide it out
    global_phase = diag[-1] / abs(diag[-1])
    return diag / global_phase


def phaser_diagonal(n_spins: int, lam: float) -> np.ndarray:
    """e^{+i lam |J,-J><J,-J|}, realized as the 2 pi - lam forward phaser."""
    lam = float(lam) % (2 * math.pi)
    if lam == 0.0:
        return np.ones(n_spins + 1, dtype=complex)
    return scaled_phasing_diagonal(n_spins, 2 * math.pi - lam)


@dataclass(frozen=True)
class GateStep:
    """One primitive program step: a gate triple or a collective rotation."""

    kind: str  # "gpg" | "rotation"
    theta: float = 0.0
    phi: float = 0.0
    chi: float = 0.0
    axis: str = "y"
    angle: float = 0.0


def _state_map_program(params: AnsatzParams, invert: bool) -> list[GateStep]:
    """K (or K†) as primitive steps in execution order."""
    steps = [
        GateStep(kind="rotation", axis="y", angle=math.pi / 2.0),
        GateStep(kind="gpg", theta=math.pi / 2.0, phi=0.0, chi=math.pi / 4.0),
        GateStep(kind="rotation", axis="y", angle=-math.pi / 2.0),
    ]
    for s in range(params.n_spins - 2, -1, -1):
        g = params.gate_params[s]
        steps.append(GateStep(kind="gpg", theta=g.theta, phi=g.phi, chi=g.chi))
        steps.append(GateStep(kind="rotation", axis="y", angle=params.betas[s]))
    if invert:
        inverted = []
        for st in reversed(steps):
            if st.kind == "rotation":
                inverted.append(GateStep(kind="rotation", axis=st.axis, angle=-st.angle))
            else:
                inverted.append(
                    GateStep(kind="gpg", theta=st.theta, phi=st.phi + math.pi, chi=st.chi)
                )
        return inverted
    return steps


@dataclass(frozen=True)
class SynthesisResult:
    n_spins: int
    program: tuple[GateStep, ...]
    gate_count: int
    gate_budget: int
    unitary: np.ndarray
    reconstruction_error: float
    factor_infidelities: tuple[float, ...]


def synthesize_unitary(
    n_spins: int,
    eigenphases,
    eigenvectors: np.ndarray,
    restarts: int = 50,
    seed: int = 0,
) -> SynthesisResult:
    """Compile U = sum_k e^{i lambda_k} |v_k><v_k| into the gate set.

    ``eigenvectors`` holds |v_k> in columns; the last eigenphase must be
    0 (the free global phase).  Emits one K-phaser-K† block per nonzero
    eigenphase and reports the reconstruction error
    1 - |tr(U_prog† U_target)/(N+1)|^2 plus each K's infidelity.
    """
    lams = np.asarray(eigenphases, dtype=float)
    vecs = np.asarray(eigenvectors, dtype=complex)
    dim = n_spins + 1
    if lams.shape != (dim,) or vecs.shape != (dim, dim):
        raise ValueError(f"need {dim} eigenphases and a {dim}x{dim} eigenvector matrix")
    if np.max(np.abs(vecs.conj().T @ vecs - np.eye(dim))) > 1e-10:
        raise ValueError("eigenvectors are not orthonormal")
    if abs(lams[-1]) > 1e-12:
        raise ValueError("fix the global phase by setting the last eigenphase to 0")

    target = sum(
        np.exp(1j * lam) * np.outer(vecs[:, k], vecs[:, k].conj())
        for k, lam in enumerate(lams)
    )
    program: list[GateStep] = []
    unitary = np.eye(dim, dtype=complex)
    infidelities = []
    gate_count = 0
    per_map = n_spins // 2 if n_spins % 2 == 0 else n_spins
    for k, lam in enumerate(lams):
        if abs(lam) < 1e-12:
            continue
        target_ket = DickeKet(n_spins, vecs[:, k])
        params, infid = optimize_state_map(
            n_spins, target_ket, restarts=restarts, seed=seed + k
        )
        infidelities.append(infid)
        k_mat = ansatz_unitary(params)
        phaser = phaser_diagonal(n_spins, lam)
        factor = k_mat @ (phaser[:, None] * k_mat.conj().T)
        unitary = factor @ unitary
        program.extend(_state_map_program(params, invert=True))
        chi_gen = _scaled_schedule_chi(n_spins, (2 * math.pi - lam) % (2 * math.pi))
        for gate in gpg.phasing_schedule(n_spins, 0).gates:
            program.append(
                GateStep(kind="gpg", theta=gate.theta, phi=gate.phi, chi=chi_gen)
            )
        program.extend(_state_map_program(params, invert=False))
        gate_count += 2 * n_spins + per_map
    overlap = np.trace(unitary.conj().T @ target) / dim
    return SynthesisResult(
        n_spins=n_spins,
        program=tuple(program),
        gate_count=gate_count,
        gate_budget=int(5 * n_spins**2 / 2),
        unitary=unitary,
        reconstruction_error=max(0.0, 1.0 - abs(overlap) ** 2),
        factor_infidelities=tuple(infidelities),
    )


def program_unitary(n_spins: int, program) -> np.ndarray:
    """Evaluate a gate program (execution order) to a dense matrix."""
    mat = np.eye(n_spins + 1, dtype=complex)
    for st in program:
        if st.kind == "rotation":
            mat = rotation_about(n_spins, st.axis, st.angle) @ mat
        elif st.kind == "gpg":
            mat = gpg.gpg_diagonal(n_spins, GpgParams(st.theta, st.phi, st.chi))[:, None] * mat
        else:
            raise ValueError(f"unknown step kind {st.kind!r}")
    return mat


def program_to_json(n_spins: int, program) -> str:
    steps = []
    for st in program:
        if st.kind == "rotation":
            steps.append({"type": "rotation", "axis": st.axis, "angle": st.angle})
        else:
            steps.append({"type": "gpg", "theta": st.theta, "phi": st.phi, "chi": st.chi})
    return json.dumps({"n_spins": n_spins, "steps": steps}, indent=2)


def program_from_json(text: str) -> tuple[int, tuple[GateStep, ...]]:
    doc = json.loads(text)
    steps = []
    for st in doc["steps"]:
        if st["type"] == "rotation":
            steps.append(GateStep(kind="rotation", axis=st["axis"], angle=st["angle"]))
        else:
            steps.append(
                GateStep(kind="gpg", theta=st["theta"], phi=st["phi"], chi=st["chi"])
            )
    return doc["n_spins"], tuple(steps)
