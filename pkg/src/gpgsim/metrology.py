"""Precision analysis for estimating a collective rotation angle with O = Jz^2.

The estimation variance for a probe state rho and working point eta is

    (d eta)^2 = [ (DJx2)^2 f(eta) + 4<Jx2> - 3<Jy2> - 2<Jz2>(1 + <Jx2>)
                  + 6<Jz Jx2 Jz> ] / (4 (<Jx2> - <Jz2>)^2),

    f(eta) = (DJz2)^2 / ((DJx2)^2 tan^2 eta) + tan^2 eta,

with all moments taken in the probe state.  f is minimized at
tan^2(eta_min) = DJz2/DJx2; for probes sharp in Jz^2 (the ideal |J,0>)
eta_min = 0 and the Cramer-Rao bound 2/(N(N+2)) is saturated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dicke import (
    CollectiveMoments,
    DickeDensity,
    DickeKet,
    build_collective_operators,
    m_values,
    moments,
)

__all__ = [
    "FieldRotation",
    "PrecisionReport",
    "DegenerateEstimatorError",
    "InvalidSignalError",
    "apply_field",
    "precision_sq",
    "crb",
    "estimate_eta_from_jz2",
    "mixed_state_precision",
    "depolarized_model",
    "readout_mean_excitation",
    "classical_average_estimator",
    "sample_jz_outcomes",
]

# var_jz2/var_jx2 below this is treated as an exactly Jz^2-sharp probe in
# the eta -> 0 limit (keeps the analytic limit finite for states that are
# ideal up to numerical-scale admixtures).
_SHARP_PROBE_RATIO = 1e-6


class DegenerateEstimatorError(ValueError):
    """The signal slope vanishes (<Jx^2> = <Jz^2>); eta cannot be estimated."""


class InvalidSignalError(ValueError):
    """A measured <Jz^2> outside the invertible range of the estimator."""


@dataclass(frozen=True)
class FieldRotation:
    """Rotation exp(i eta (Jx sin(delta) + Jy cos(delta))).

    ``field_delta`` is the unknown field direction in the x-y plane; the
    precision of |J,0> probes does not depend on it.
    """

    eta: float
    field_delta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.eta) and math.isfinite(self.field_delta)):
            raise ValueError("eta and field_delta must be finite")


@dataclass(frozen=True)
class PrecisionReport:
    delta_eta_sq: float
    crb: float
    eta_min: float
    f_of_eta: float


def apply_field(state: DickeKet, rot: FieldRotation) -> DickeKet:
    """Rotate the probe by the field unitary."""
    ops = build_collective_operators(state.n_spins)
    generator = ops.jx * math.sin(rot.field_delta) + ops.jy * math.cos(rot.field_delta)
    evals, evecs = np.linalg.eigh(generator)
    amps = (evecs * np.exp(1j * rot.eta * evals)) @ (evecs.conj().T @ state.amplitudes)
    return DickeKet(state.n_spins, amps / np.linalg.norm(amps))


def crb(n_spins: int) -> float:
    """Quantum Cramer-Rao bound 2/(N(N+2)) for the |J,0> probe."""
    if n_spins < 1:
        raise ValueError(f"need at least one spin, got N={n_spins}")
    return 2.0 / (n_spins * (n_spins + 2))


def _n_spins_of(state: DickeKet | DickeDensity) -> int:
    return state.n_spins


def precision_sq(
    state: DickeKet | DickeDensity, eta: float | None = None
) -> PrecisionReport:
    """Squared estimation uncertainty of the probe at working point eta.

    ``eta=None`` requests the analytic eta -> 0 limit: the f term is
    dropped for Jz^2-sharp probes (where its limit vanishes), instead of
    evaluating the divergent 1/tan^2 numerically.  For probes that are
    not sharp the limit diverges; evaluate at ``eta_min`` instead.
    """
    mom = moments(state)
    n = _n_spins_of(state)
    denom = mom.mean_jx2 - mom.mean_jz2
    if abs(denom) < 1e-12:
        raise DegenerateEstimatorError(
            f"<Jx^2> = <Jz^2> = {mom.mean_jx2}; the estimator slope vanishes"
        )
    sharp = mom.var_jz2 <= _SHARP_PROBE_RATIO * max(mom.var_jx2, 1e-300)
    if sharp:
        eta_min = 0.0
    else:
        eta_min = math.atan(math.sqrt(math.sqrt(mom.var_jz2 / mom.var_jx2)))
    if eta is None:
        if not sharp:
            return PrecisionReport(math.inf, crb(n), eta_min, math.inf)
        f_eta = 0.0
    else:
        if eta == 0.0:
            raise DegenerateEstimatorError("f(eta) diverges at eta=0; pass eta=None for the limit")
        t2 = math.tan(eta) ** 2
        f_eta = mom.var_jz2 / (mom.var_jx2 * t2) + t2
    numerator = (
        mom.var_jx2 * f_eta
        + 4.0 * mom.mean_jx2
        - 3.0 * mom.mean_jy2
        - 2.0 * mom.mean_jz2 * (1.0 + mom.mean_jx2)
        + 6.0 * mom.mean_jz_jx2_jz
    )
    return PrecisionReport(
        delta_eta_sq=numerator / (4.0 * denom**2),
        crb=crb(n),
        eta_min=eta_min,
        f_of_eta=f_eta,
    )


def estimate_eta_from_jz2(n_spins: int, mean_jz2: float) -> float:
    """Invert sin^2(eta) = 8 <Jz^2(eta)> / (N(N+2)) for the |J,0> probe."""
    ratio = 8.0 * mean_jz2 / (n_spins * (n_spins + 2))
    if not 0.0 <= ratio <= 1.0 + 1e-12:
        raise InvalidSignalError(
            f"8<Jz^2>/(N(N+2)) = {ratio} is outside [0, 1]; no angle reproduces it"
        )
    return math.asin(math.sqrt(min(ratio, 1.0)))


def depolarized_model(n_spins: int, fidelity: float) -> DickeDensity:
    """rho = a |J,0><J,0| + b*1 with a = (1+1/N)F - 1/N, b = (1-F)/N.

    The unbiased-error model behind the closed-form precision bound; the
    identity is over the (N+1)-dimensional symmetric subspace only.
    """
    if not 0.0 <= fidelity <= 1.0:
        raise ValueError(f"fidelity must lie in [0, 1], got {fidelity}")
    a = (1.0 + 1.0 / n_spins) * fidelity - 1.0 / n_spins
    b = (1.0 - fidelity) / n_spins
    rho = b * np.eye(n_spins + 1, dtype=complex)
    mid = n_spins // 2
    rho[mid, mid] += a
    return DickeDensity(n_spins, rho)


def mixed_state_precision(n_spins: int, fidelity: float) -> float:
    """Closed-form precision bound 2/(N(N+2)) + sqrt((1-F)/10).

    Accurate in the high-fidelity regime 1-F < 1e-2; outside it the bound
    is loose.  ``depolarized_model`` exposes the underlying state for
    direct evaluation through ``precision_sq``.
    """
    if not 0.0 <= fidelity <= 1.0:
        raise ValueError(f"fidelity must lie in [0, 1], got {fidelity}")
    return crb(n_spins) + math.sqrt((1.0 - fidelity) / 10.0)


def readout_mean_excitation(n_bar: float, pulse_area: float, mean_jz2: float) -> float:
    """Mean mode occupation after the readout coupling: n_bar + (g_m tau)^2 <Jz^2>."""
    if n_bar < 0:
        raise ValueError(f"thermal occupation must be non-negative, got {n_bar}")
    return n_bar + pulse_area**2 * mean_jz2


def classical_average_estimator(samples) -> float:
    """Estimate <Jz^2> as the sample average of squared Jz outcomes."""
    outcomes = np.asarray(samples, dtype=float)
    if outcomes.size == 0:
        raise ValueError("need at least one measurement outcome")
    return float(np.mean(outcomes**2))


def sample_jz_outcomes(
    state: DickeKet | DickeDensity, n_samples: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw Jz outcomes M from the state's exact Jz distribution."""
    if isinstance(state, DickeKet):
        probs = np.abs(state.amplitudes) ** 2
    else:
        probs = np.real(np.diag(state.matrix))
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    return rng.choice(m_values(state.n_spins), size=n_samples, p=probs)
