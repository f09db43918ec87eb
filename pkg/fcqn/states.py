# fcqn/states.py
"""State families used by the network: biased time-bin pairs, Werner states,
per-link noise channels and single-photon hybrid (polarization x time-bin) states."""
from __future__ import annotations

import math

import numpy as np

from fcqn.errors import ParameterError, StateError
from fcqn.qcore import (
    HYBRID_LABELS,
    PAULI,
    TIME_BIN_LABELS,
    DensityMatrix,
    PureState,
    as_matrix,
)
from fcqn.schemas import NoiseSpec


THETA_MAX = math.pi / 4
_ANGLE_TOL = 1e-12


def _check_theta(theta: float) -> float:
    if not math.isfinite(theta) or theta < -_ANGLE_TOL or theta > THETA_MAX + _ANGLE_TOL:
        raise ParameterError(f"theta={theta!r} outside [0, pi/4]")
    return min(max(theta, 0.0), THETA_MAX)


def phi_plus(labels: tuple[str, ...] = TIME_BIN_LABELS) -> PureState:
    return PureState(np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2), labels)


def phi_theta(theta: float) -> PureState:
    """cosθ|ee⟩ + sinθ|ll⟩, separable at θ=0 and maximally entangled at θ=π/4."""
    return time_bin_pair(theta)


def time_bin_pair(theta: float, phi_p: float = 0.0) -> PureState:
    """Pair emitted by the biased source with relative pump phase ``phi_p`` on |ll⟩."""
    theta = _check_theta(theta)
    amps = np.zeros(4, dtype=complex)
    amps[0] = math.cos(theta)
    amps[3] = math.sin(theta) * np.exp(1j * phi_p)
    return PureState(amps, TIME_BIN_LABELS)


def theta_from_hwp(alpha_deg: float) -> float:
    """Pump HWP rotation (degrees) to state parameter θ = 2α (radians)."""
    if not 0.0 <= alpha_deg <= 22.5 + 1e-9:
        raise ParameterError(f"HWP angle {alpha_deg} deg outside [0, 22.5]")
    return _check_theta(2.0 * math.radians(alpha_deg))


def werner(F: float, labels: tuple[str, ...] = TIME_BIN_LABELS) -> DensityMatrix:
    if not 0.25 <= F <= 1.0:
        raise ParameterError(f"Werner fidelity {F} outside [0.25, 1]")
    return DensityMatrix(_werner_mix(phi_plus(labels).projector(), F), labels)


def _on_qubit(op: np.ndarray, qubit: int) -> np.ndarray:
    return np.kron(op, PAULI["I"]) if qubit == 0 else np.kron(PAULI["I"], op)


def _dephase(m: np.ndarray, s: float) -> np.ndarray:
    for q in (0, 1):
        z = _on_qubit(PAULI["Z"], q)
        m = (1 - s / 2) * m + (s / 2) * z @ m @ z
    return m


def _depolarize(m: np.ndarray, s: float) -> np.ndarray:
    for q in (0, 1):
        twirl = sum(_on_qubit(PAULI[k], q) @ m @ _on_qubit(PAULI[k], q) for k in "IXYZ") / 4
        m = (1 - s) * m + s * twirl
    return m


def werner_visibility(F: float) -> float:
    """Weight p of the input in pρ + (1 − p)𝕀/4 that takes Φ⁺ to fidelity F."""
    return (4 * F - 1) / 3


def _werner_mix(m: np.ndarray, F: float) -> np.ndarray:
    p = werner_visibility(F)
    return p * m + (1 - p) * np.eye(4) / 4


def apply_noise(rho: DensityMatrix, spec: NoiseSpec | None) -> DensityMatrix:
    """
    Apply one link's noise model.

    dephasing / depolarizing act on each qubit with the given strength
    (0 is the identity map, 1 the full channel). werner is the two-qubit
    depolarizing channel ρ ↦ pρ + (1 − p)𝕀/4 scaled so that Φ⁺ comes out at
    fidelity ``spec.strength``; any other input is mixed with the same p.
    """
    if rho.dim != 4:
        raise StateError(f"apply_noise expects a two-qubit state, got dim {rho.dim}")
    if spec is None:
        return rho
    m = as_matrix(rho).copy()
    if spec.kind == "dephasing":
        m = _dephase(m, spec.strength)
    elif spec.kind == "depolarizing":
        m = _depolarize(m, spec.strength)
    else:
        m = _werner_mix(m, spec.strength)
    return DensityMatrix((m + m.conj().T) / 2, rho.basis_labels)


def hybrid_state(a: complex, b: complex, c: complex, d: complex) -> PureState:
    """Single photon a|He⟩ + b|Ve⟩ + c|Hl⟩ + d|Vl⟩ (time-bin major ordering)."""
    amps = np.array([a, b, c, d], dtype=complex)
    norm = float(np.vdot(amps, amps).real)
    if abs(norm - 1.0) > 1e-10:
        raise StateError(f"hybrid amplitudes have norm^2 {norm:.12f}, expected 1")
    return PureState(amps / math.sqrt(norm), HYBRID_LABELS)


def hybrid_density(time_qubit: np.ndarray, pol_qubit: np.ndarray) -> np.ndarray:
    """Product of a time-bin qubit and a polarization qubit in [He, Ve, Hl, Vl] order."""
    return np.kron(as_matrix(time_qubit), as_matrix(pol_qubit))
