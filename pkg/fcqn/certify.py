# fcqn/certify.py
"""
Entanglement witness W = 𝕀/2 − |Φ⁺⟩⟨Φ⁺| and its measurement-device-independent form.

W = Σ β_{s,t} τ_sᵀ ⊗ ω_tᵀ over the six trusted inputs {H, V, +, −, L, R};
the MDI value 𝓘 = Σ β_{s,t} P(1,1|τ_s, ω_t) equals ¼Tr[Wρ] and bounds the
trace-distance entanglement from below: E_Tr ≥ −𝓘 / (2·‖Wᵀ‖₁).
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from fcqn.errors import DimensionError, MeasurementError
from fcqn.measure import BASIS_OUTCOMES, BELL_LABELS, CORRELATOR_BASES, bsm_joint_probabilities, correlator_from_counts
from fcqn.qcore import PAULI, DensityMatrix, as_matrix, projector, trace_norm, transpose_computational

logger = logging.getLogger(__name__)

INPUT_LABELS = ("H", "V", "+", "-", "L", "R")
_BETA_ENTRIES = {("H", "V"): 0.5, ("V", "H"): 0.5, ("+", "-"): 0.5, ("-", "+"): 0.5, ("L", "R"): -0.5, ("R", "L"): -0.5}
WITNESS_TRACE_NORM = 2.0


def witness_operator() -> np.ndarray:
    phi = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
    return np.eye(4, dtype=complex) / 2 - np.outer(phi, phi.conj())


def witness_operator_pauli() -> np.ndarray:
    """¼(𝕀⊗𝕀 − σx⊗σx + σy⊗σy − σz⊗σz)."""
    p = PAULI
    return (np.kron(p["I"], p["I"]) - np.kron(p["X"], p["X"]) + np.kron(p["Y"], p["Y"]) - np.kron(p["Z"], p["Z"])) / 4


def _two_qubit(rho) -> np.ndarray:
    m = as_matrix(rho)
    if m.shape != (4, 4):
        raise DimensionError(f"expected a two-qubit state, got shape {m.shape}")
    return m


def witness_expectation(rho: DensityMatrix) -> float:
    return float(np.real(np.trace(witness_operator() @ _two_qubit(rho))))


def witness_from_counts(counts: Mapping[str, int]) -> tuple[float, float]:
    """
    ⟨W⟩ = ¼(1 − ⟨σxσx⟩ + ⟨σyσy⟩ − ⟨σzσz⟩) from the twelve projector-pair counts.

    The standard error propagates the binomial variance (1 − E²)/N of each correlator.
    """
    correlators = {}
    variance = 0.0
    missing = []
    for basis in CORRELATOR_BASES:
        outs = BASIS_OUTCOMES[basis[0]]
        labels = [a + b for a in outs for b in outs]
        missing += [label for label in labels if label not in counts]
        if missing:
            continue
        sub = {label: counts[label] for label in labels}
        e = correlator_from_counts(sub)
        n = sum(sub.values())
        correlators[basis] = e
        variance += (1 - e * e) / n
    if missing:
        raise MeasurementError(f"missing projector settings: {', '.join(missing)}")
    value = (1 - correlators["XX"] + correlators["YY"] - correlators["ZZ"]) / 4
    return float(value), float(math.sqrt(max(variance, 0.0)) / 4)


def correlators_from_counts(counts: Mapping[str, int]) -> dict[str, float]:
    out = {}
    for basis in CORRELATOR_BASES:
        outs = BASIS_OUTCOMES[basis[0]]
        out[basis] = correlator_from_counts({a + b: counts[a + b] for a in outs for b in outs})
    return out


@dataclass(frozen=True, eq=False)
class WitnessDecomposition:
    inputs: tuple[np.ndarray, ...]
    beta: np.ndarray
    labels: tuple[str, ...] = INPUT_LABELS

    def reconstruct(self) -> np.ndarray:
        w = np.zeros((4, 4), dtype=complex)
        for s, tau in enumerate(self.inputs):
            for t, omega in enumerate(self.inputs):
                if self.beta[s, t] != 0:
                    w += self.beta[s, t] * np.kron(transpose_computational(tau), transpose_computational(omega))
        return w

    def terms(self) -> list[tuple[str, str, float]]:
        return [
            (self.labels[s], self.labels[t], float(self.beta[s, t]))
            for s in range(len(self.labels))
            for t in range(len(self.labels))
            if self.beta[s, t] != 0
        ]

    def input(self, label: str) -> np.ndarray:
        return self.inputs[self.labels.index(label)]


def mdi_decomposition() -> WitnessDecomposition:
    beta = np.zeros((6, 6))
    for (s, t), value in _BETA_ENTRIES.items():
        beta[INPUT_LABELS.index(s), INPUT_LABELS.index(t)] = value
    beta.flags.writeable = False
    inputs = tuple(projector(label) for label in INPUT_LABELS)
    return WitnessDecomposition(inputs, beta)


def mdi_probability(rho: DensityMatrix, tau, omega) -> float:
    """P(1,1|τ,ω) = ¼Tr[(τᵀ⊗ωᵀ)ρ]."""
    m = _two_qubit(rho)
    t, w = as_matrix(tau), as_matrix(omega)
    if t.shape != (2, 2) or w.shape != (2, 2):
        raise DimensionError("trusted inputs must be qubit states")
    return float(np.real(np.trace(np.kron(t.T, w.T) @ m))) / 4


def mdi_lower_bound(i_value: float) -> float:
    """max(0, −𝓘 / (2‖Wᵀ‖₁)); nonnegative 𝓘 carries no information."""
    return max(0.0, -i_value / (2 * WITNESS_TRACE_NORM))


@dataclass(frozen=True)
class MdiResult:
    I_value: float
    per_term_probs: dict[str, float]
    lower_bound: float
    std_err: float
    shots: int | None = None
    per_term_err: dict[str, float] = field(default_factory=dict)

    def significance(self) -> float:
        """Number of standard errors by which 𝓘 lies below zero."""
        if self.std_err == 0:
            return math.inf if self.I_value < 0 else 0.0
        return -self.I_value / self.std_err


def mdi_witness(rho: DensityMatrix) -> MdiResult:
    deco = mdi_decomposition()
    probs = {}
    value = 0.0
    for s, t, beta in deco.terms():
        p = mdi_probability(rho, deco.input(s), deco.input(t))
        probs[s + t] = p
        value += beta * p
    return MdiResult(value, probs, mdi_lower_bound(value), 0.0)


def _noisy_input(label: str, infidelity: float) -> np.ndarray:
    return (1 - infidelity) * projector(label) + infidelity * np.eye(2) / 2


def mdi_witness_from_bsm(
    rho: DensityMatrix,
    shots: int,
    seed: int,
    input_infidelity: float = 0.0,
    phi_u: float = math.pi,
    workers: int = 1,
) -> MdiResult:
    """
    Sampled MDI witness: for each of the six terms, encode τ_s and ω_t on the
    photons' polarization, run the hybrid BSM on each photon and count joint
    Φ⁺⊗Φ⁺ successes out of ``shots`` trials.
    """
    if shots <= 0:
        raise MeasurementError("shots must be positive")
    deco = mdi_decomposition()
    terms = deco.terms()
    seeds = np.random.SeedSequence(seed).spawn(len(terms))
    success = BELL_LABELS.index("phi+")

    def run_term(args):
        (s, t, _), child = args
        table = bsm_joint_probabilities(
            rho, _noisy_input(s, input_infidelity), _noisy_input(t, input_infidelity), phi_u
        )
        counts = np.random.default_rng(child).multinomial(shots, table.ravel()).reshape(4, 4)
        return counts[success, success] / shots

    with ThreadPoolExecutor(max_workers=workers) as pool:
        freqs = list(pool.map(run_term, zip(terms, seeds)))

    probs, errs = {}, {}
    value, variance = 0.0, 0.0
    for (s, t, beta), p in zip(terms, freqs):
        probs[s + t] = float(p)
        err = math.sqrt(p * (1 - p) / shots)
        errs[s + t] = err
        value += beta * p
        variance += (beta * err) ** 2
    result = MdiResult(value, probs, mdi_lower_bound(value), math.sqrt(variance), shots, errs)
    logger.debug("MDI witness %.5f +/- %.5f (%d shots/term)", result.I_value, result.std_err, shots)
    return result


def witness_trace_norm() -> float:
    return trace_norm(transpose_computational(witness_operator()))
