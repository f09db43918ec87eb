# fcqn/services/calibration.py
"""Choose noise parameters that reproduce reported link and θ-scan numbers."""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from fcqn.errors import ParameterError
from fcqn.oracle import trace_distance_entanglement
from fcqn.qcore import DensityMatrix, fidelity_pure
from fcqn.schemas import NoiseSpec
from fcqn.states import apply_noise, phi_plus, time_bin_pair

logger = logging.getLogger(__name__)


def werner_for_mdi_value(i_value: float) -> NoiseSpec:
    """Werner fidelity giving 𝓘 = ¼(½ − F), i.e. F = ½ − 4𝓘."""
    fidelity = 0.5 - 4 * i_value
    if not 0.25 <= fidelity <= 1.0:
        raise ParameterError(f"MDI value {i_value} is outside the Werner family")
    return NoiseSpec(kind="werner", strength=fidelity)


def werner_for_fidelity(fidelity: float) -> NoiseSpec:
    return NoiseSpec(kind="werner", strength=fidelity)


def dephasing_for_fidelity(rho: DensityMatrix, target: float, xtol: float = 1e-12) -> NoiseSpec:
    """Per-qubit dephasing strength taking ``rho`` to Φ⁺ fidelity ``target``."""
    reference = phi_plus(rho.basis_labels)

    def gap(s: float) -> float:
        return fidelity_pure(apply_noise(rho, NoiseSpec(kind="dephasing", strength=s)), reference) - target

    lo, hi = gap(0.0), gap(1.0)
    if abs(lo) <= xtol:
        return NoiseSpec(kind="dephasing", strength=0.0)
    if lo * hi > 0:
        raise ParameterError(f"dephasing cannot reach fidelity {target} from this state")
    strength = brentq(gap, 0.0, 1.0, xtol=xtol)
    return NoiseSpec(kind="dephasing", strength=float(strength))


@dataclass(frozen=True)
class ThetaCalibration:
    theta: float
    visibility: float
    phase: float
    noise: NoiseSpec

    def state(self) -> DensityMatrix:
        return apply_noise(time_bin_pair(self.theta, self.phase).density(), self.noise)


def _white_mix(theta: float, visibility: float) -> DensityMatrix:
    pure = time_bin_pair(theta).density()
    return DensityMatrix(visibility * pure.matrix + (1 - visibility) * np.eye(4) / 4, pure.basis_labels)


def calibrate_theta_point(theta: float, target_bound: float, target_e_tr: float, tol: float = 1e-5) -> ThetaCalibration:
    """
    Fit white-noise visibility and residual pump phase for one θ-scan point.

    E_Tr is blind to the phase, so the visibility is fixed first against
    max(E_target, 16·bound) (E_Tr can never fall below 16 times the bound), then
    the phase lowers the Φ⁺ fidelity until the bound matches.
    """
    pure_value = math.sin(2 * theta) / 2
    goal = min(pure_value, max(target_e_tr, 16 * target_bound))
    if goal <= 0:
        visibility = 1.0
    elif goal >= pure_value - tol:
        visibility = 1.0
    else:
        visibility = brentq(
            lambda p: trace_distance_entanglement(_white_mix(theta, p), tol=tol).distance - goal,
            0.0,
            1.0,
            xtol=tol,
        )

    # bound = (F − ½)/16 with F = p(1 + sin2θ cosφ)/2 + (1 − p)/4
    needed_f = 0.5 + 16 * target_bound
    s2 = math.sin(2 * theta)
    if s2 < 1e-12:
        phase = 0.0
    else:
        cos_phi = ((needed_f - (1 - visibility) / 4) * 2 / visibility - 1) / s2
        phase = math.acos(min(1.0, max(-1.0, cos_phi)))

    noise = NoiseSpec(kind="werner", strength=(3 * visibility + 1) / 4)
    logger.info("theta=%.4f: visibility=%.5f phase=%.4f", theta, visibility, phase)
    return ThetaCalibration(theta, float(visibility), float(phase), noise)
