# fcqn/measure.py
"""
Measurement apparatus.

Wave plates use the Jones convention HWP(α) = [[cos2α, sin2α], [sin2α, −cos2α]]
in the (H, V) basis, so a plate at α rotates linear polarization by 2α.

Each user's UMZI sends a time-bin photon (prepared diagonal) through a PBS:
V takes the short arm and leaves as H, H takes the long arm, picks up the
interferometer phase φ and leaves as V. An input |e⟩ therefore exits in the
early bin as H and in the middle bin as e^{iφ}V; an input |l⟩ exits in the
middle bin as H and in the late bin as e^{iφ}V. Bins are 640 ps apart.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import ndimage

from fcqn.errors import DimensionError, MeasurementError, ParameterError, StateError
from fcqn.oracle import TOMOGRAPHY_LABELS, TomographyInput
from fcqn.qcore import (
    HYBRID_LABELS,
    POLARIZATION_LABELS,
    TIME_BIN_LABELS,
    DensityMatrix,
    PureState,
    as_matrix,
    ket,
)
from fcqn.schemas import AttackSpec, InterferometerPhases, ProjSetting


BIN_SPACING_NS = 0.64
OUTPUT_BINS = ("e", "m", "l")
BIN_TIMES_NS = {name: k * BIN_SPACING_NS for k, name in enumerate(OUTPUT_BINS)}

BASIS_OUTCOMES = {"Z": ("H", "V"), "X": ("+", "-"), "Y": ("L", "R")}
BASIS_OF = {label: basis for basis, outcomes in BASIS_OUTCOMES.items() for label in outcomes}
EIGENVALUE = {"H": 1, "V": -1, "+": 1, "-": -1, "L": 1, "R": -1}
CORRELATOR_BASES = ("XX", "YY", "ZZ")

BELL_LABELS = ("phi+", "phi-", "psi+", "psi-")
# (HWP1, HWP2) in degrees -> Bell state heralded by an H photon in the middle bin
WAVEPLATE_SETTINGS = {
    (0.0, 22.5): "phi+",
    (45.0, 22.5): "psi-",
    (0.0, 67.5): "phi-",
    (45.0, 67.5): "psi+",
}


# ---------- UMZI conversion ----------

def _umzi_isometry(phi: float) -> np.ndarray:
    """6x2 map from {e, l} to (output bin, polarization), row index 2*bin + pol."""
    s = 1 / math.sqrt(2)
    iso = np.zeros((6, 2), dtype=complex)
    iso[0, 0] = s                       # e -> early, H
    iso[3, 0] = s * np.exp(1j * phi)    # e -> middle, V
    iso[2, 1] = s                       # l -> middle, H
    iso[5, 1] = s * np.exp(1j * phi)    # l -> late, V
    return iso


def umzi_kraus(phi: float) -> np.ndarray:
    """Middle-bin block of the UMZI map: (H, V) <- (e, l)."""
    return _umzi_isometry(phi)[2:4, :]


def _check_time_bin(rho: DensityMatrix | np.ndarray) -> np.ndarray:
    m = as_matrix(rho)
    if m.shape != (4, 4):
        raise DimensionError(f"expected a two-photon time-bin state, got shape {m.shape}")
    if isinstance(rho, DensityMatrix) and rho.basis_labels not in (TIME_BIN_LABELS, ("0", "1", "2", "3")):
        raise StateError(f"state is on basis {rho.basis_labels}, expected {TIME_BIN_LABELS}")
    return m


def umzi_convert(
    timebin_rho: DensityMatrix, phases: InterferometerPhases | None = None
) -> tuple[DensityMatrix, float]:
    """Polarization state heralded by a middle-middle coincidence, and its probability."""
    m = _check_time_bin(timebin_rho)
    phases = phases or InterferometerPhases()
    kraus = np.kron(umzi_kraus(phases.phi_u), umzi_kraus(phases.phi_v))
    out = kraus @ m @ kraus.conj().T
    prob = float(np.trace(out).real)
    if prob < 1e-12:
        raise MeasurementError("no middle-bin coincidences: postselection probability vanishes")
    out = out / prob
    return DensityMatrix((out + out.conj().T) / 2, POLARIZATION_LABELS), prob


def bin_distribution(
    timebin_rho: DensityMatrix,
    phases: InterferometerPhases | None = None,
    analyzer: tuple[str, str] | None = None,
) -> np.ndarray:
    """
    3x3 array of coincidence probabilities over output bins (e, m, l) for (u, v).

    Without an analyzer polarization is summed over; with one, each photon is
    projected onto the named polarization state and the middle-middle entry
    shows the two-photon interference.
    """
    m = _check_time_bin(timebin_rho)
    phases = phases or InterferometerPhases()
    full = np.kron(_umzi_isometry(phases.phi_u), _umzi_isometry(phases.phi_v))
    out = full @ m @ full.conj().T
    # index (bin_u, pol_u, bin_v, pol_v)
    diag = np.real(np.diagonal(out)).reshape(3, 2, 3, 2)
    if analyzer is None:
        return diag.sum(axis=(1, 3))
    proj_u, proj_v = ket(analyzer[0]), ket(analyzer[1])
    probs = np.zeros((3, 3))
    t = out.reshape(3, 2, 3, 2, 3, 2, 3, 2)
    for bu in range(3):
        for bv in range(3):
            block = t[bu, :, bv, :, bu, :, bv, :].reshape(4, 4)
            vec = np.kron(proj_u, proj_v)
            probs[bu, bv] = float(np.real(vec.conj() @ block @ vec))
    return probs


@dataclass(frozen=True, eq=False)
class CoincidenceMap:
    delays_u: np.ndarray
    delays_v: np.ndarray
    counts: np.ndarray

    def peaks(self, rel_threshold: float = 1e-6) -> list[tuple[float, float, float]]:
        """Connected above-threshold regions as (delay_u, delay_v, height)."""
        if self.counts.max() <= 0:
            return []
        mask = self.counts > rel_threshold * self.counts.max()
        labels, n = ndimage.label(mask)
        found = []
        for k in range(1, n + 1):
            iu, iv = ndimage.center_of_mass(mask, labels, k)
            height = float(ndimage.maximum(self.counts, labels, k))
            du = float(np.interp(iu, np.arange(self.delays_u.size), self.delays_u))
            dv = float(np.interp(iv, np.arange(self.delays_v.size), self.delays_v))
            found.append((du, dv, height))
        return sorted(found)

    def diagonal_peaks(self, rel_threshold: float = 1e-6, tol: float = 0.1) -> list[tuple[float, float, float]]:
        return [p for p in self.peaks(rel_threshold) if abs(p[0] - p[1]) <= tol]


def delay_scan(
    timebin_rho: DensityMatrix,
    delays_u: Sequence[float],
    delays_v: Sequence[float],
    phases: InterferometerPhases | None = None,
    window: float = 0.2,
    analyzer: tuple[str, str] | None = None,
) -> CoincidenceMap:
    """Coincidence probability vs detector delays (ns) with a rectangular window per detector."""
    if window >= BIN_SPACING_NS:
        raise ParameterError(f"window {window} ns does not resolve the {BIN_SPACING_NS} ns bin spacing")
    probs = bin_distribution(timebin_rho, phases, analyzer)
    du = np.asarray(delays_u, dtype=float)
    dv = np.asarray(delays_v, dtype=float)
    times = np.array([BIN_TIMES_NS[b] for b in OUTPUT_BINS])
    in_u = (np.abs(du[:, None] - times[None, :]) <= window / 2).astype(float)
    in_v = (np.abs(dv[:, None] - times[None, :]) <= window / 2).astype(float)
    counts = in_u @ probs @ in_v.T
    return CoincidenceMap(du, dv, counts)


# ---------- polarization analysis ----------

def born_probabilities(pol_rho: DensityMatrix, basis_u: str, basis_v: str) -> tuple[tuple[str, ...], np.ndarray]:
    """Outcome-pair labels and their Born probabilities for the local bases holding the given labels."""
    m = as_matrix(pol_rho)
    if m.shape != (4, 4):
        raise DimensionError(f"expected a two-qubit polarization state, got shape {m.shape}")
    try:
        outs_u = BASIS_OUTCOMES[BASIS_OF[basis_u]]
        outs_v = BASIS_OUTCOMES[BASIS_OF[basis_v]]
    except KeyError as exc:
        raise ParameterError(f"unknown basis label {exc.args[0]!r}") from None
    labels, probs = [], []
    for a in outs_u:
        for b in outs_v:
            vec = ket(a + b)
            labels.append(a + b)
            probs.append(float(np.real(vec.conj() @ m @ vec)))
    probs = np.clip(np.array(probs), 0.0, None)
    return tuple(labels), probs / probs.sum()


def _surviving_fraction(attack: AttackSpec, window: float) -> float:
    if attack.delay >= window:
        return 0.0
    return (window - attack.delay) / window


def projective_counts(pol_rho: DensityMatrix, setting: ProjSetting, seed: int) -> dict[str, int]:
    """
    Multinomial coincidence counts over the four outcome pairs of one basis setting.

    Outcome pairs listed in the attack are shifted out of the window after
    sampling, so the remaining outcomes are bit-identical to an unattacked run.
    """
    labels, probs = born_probabilities(pol_rho, setting.basis_u, setting.basis_v)
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(setting.shots, probs)
    result = {label: int(c) for label, c in zip(labels, counts)}
    if setting.attack is not None:
        keep = _surviving_fraction(setting.attack, setting.window)
        thin_rng = np.random.default_rng([seed, 1])
        for label in labels:
            if (label[0], label[1]) in setting.attack.attacked_settings:
                result[label] = int(thin_rng.binomial(result[label], keep)) if keep > 0 else 0
    return result


def _ordered(counts: Mapping[str, int] | Sequence[int]) -> np.ndarray:
    if isinstance(counts, Mapping):
        keys = list(counts)
        if len(keys) != 4:
            raise MeasurementError(f"correlator needs four outcome pairs, got {keys}")
        first = BASIS_OUTCOMES[BASIS_OF[keys[0][0]]]
        second = BASIS_OUTCOMES[BASIS_OF[keys[0][1]]]
        try:
            return np.array([counts[a + b] for a in first for b in second], dtype=float)
        except KeyError as exc:
            raise MeasurementError(f"missing outcome pair {exc.args[0]}") from None
    arr = np.asarray(counts, dtype=float)
    if arr.shape != (4,):
        raise MeasurementError(f"correlator needs four counts, got shape {arr.shape}")
    return arr


def correlator_from_counts(counts: Mapping[str, int] | Sequence[int]) -> float:
    """(C₊₊ − C₊₋ − C₋₊ + C₋₋)/ΣC, counts ordered (++, +−, −+, −−) or keyed by outcome pair."""
    c = _ordered(counts)
    total = c.sum()
    if total <= 0:
        raise MeasurementError("no coincidences recorded for this setting")
    return float((c[0] - c[1] - c[2] + c[3]) / total)


def correlation_counts(
    pol_rho: DensityMatrix,
    shots: int,
    seed: int,
    attack: AttackSpec | None = None,
    window: float = 1.0,
) -> dict[str, int]:
    """Counts for the twelve projector pairs of the XX, YY and ZZ settings."""
    seeds = np.random.SeedSequence(seed).spawn(len(CORRELATOR_BASES))
    merged: dict[str, int] = {}
    for basis, child in zip(CORRELATOR_BASES, seeds):
        label = BASIS_OUTCOMES[basis[0]][0]
        setting = ProjSetting(basis_u=label, basis_v=label, shots=shots, window=window, attack=attack)
        merged.update(projective_counts(pol_rho, setting, int(child.generate_state(1)[0])))
    return merged


def tomography_counts(
    pol_rho: DensityMatrix,
    shots: int,
    seed: int,
    attack: AttackSpec | None = None,
    window: float = 1.0,
) -> TomographyInput:
    """Counts for all nine basis pairs (36 projector pairs), ``shots`` per basis pair."""
    table = np.zeros((6, 6))
    bases = list(BASIS_OUTCOMES)
    seeds = np.random.SeedSequence(seed).spawn(len(bases) ** 2)
    pairs = [(bu, bv) for bu in bases for bv in bases]
    for (bu, bv), child in zip(pairs, seeds):
        setting = ProjSetting(
            basis_u=BASIS_OUTCOMES[bu][0],
            basis_v=BASIS_OUTCOMES[bv][0],
            shots=shots,
            window=window,
            attack=attack,
        )
        for label, n in projective_counts(pol_rho, setting, int(child.generate_state(1)[0])).items():
            table[TOMOGRAPHY_LABELS.index(label[0]), TOMOGRAPHY_LABELS.index(label[1])] = n
    return TomographyInput(table)


# ---------- hybrid Bell-state measurement ----------

def bell_projectors() -> dict[str, np.ndarray]:
    """Hybrid Bell projectors on [He, Ve, Hl, Vl]: Φ± = He ± Vl, Ψ± = Ve ± Hl."""
    s = 1 / math.sqrt(2)
    vecs = {
        "phi+": np.array([s, 0, 0, s], dtype=complex),
        "phi-": np.array([s, 0, 0, -s], dtype=complex),
        "psi+": np.array([0, s, s, 0], dtype=complex),
        "psi-": np.array([0, s, -s, 0], dtype=complex),
    }
    return {k: np.outer(v, v.conj()) for k, v in vecs.items()}


def _check_hybrid(chi: PureState) -> np.ndarray:
    if chi.basis_labels != HYBRID_LABELS:
        raise StateError(f"state is on basis {chi.basis_labels}, expected {HYBRID_LABELS}")
    return chi.amplitudes


def bsm_probabilities(chi: PureState) -> tuple[float, float, float, float]:
    """(P_Φ⁺, P_Φ⁻, P_Ψ⁺, P_Ψ⁻) = (|a+d|², |a−d|², |b+c|², |b−c|²)/2."""
    a, b, c, d = _check_hybrid(chi)
    return (
        float(abs(a + d) ** 2 / 2),
        float(abs(a - d) ** 2 / 2),
        float(abs(b + c) ** 2 / 2),
        float(abs(b - c) ** 2 / 2),
    )


def hwp(angle_deg: float) -> np.ndarray:
    t = math.radians(2 * angle_deg)
    return np.array([[math.cos(t), math.sin(t)], [math.sin(t), -math.cos(t)]], dtype=complex)


def _hybrid_umzi(phi: float) -> np.ndarray:
    """6x4 map from [He, Ve, Hl, Vl] to (output bin, polarization) for an already-polarized photon."""
    u = np.zeros((6, 4), dtype=complex)
    u[0, 1] = 1.0                  # Ve -> early, H
    u[2, 3] = 1.0                  # Vl -> middle, H
    u[3, 0] = np.exp(1j * phi)     # He -> middle, V
    u[5, 2] = np.exp(1j * phi)     # Hl -> late, V
    return u


def _setting_key(hwp1: float, hwp2: float) -> tuple[float, float]:
    for key in WAVEPLATE_SETTINGS:
        if math.isclose(hwp1, key[0], abs_tol=1e-9) and math.isclose(hwp2, key[1], abs_tol=1e-9):
            return key
    raise ParameterError(f"unsupported wave-plate setting HWP1={hwp1}, HWP2={hwp2}")


def hm_functional(hwp1: float, hwp2: float, phi_u: float = math.pi) -> np.ndarray:
    """Row vector h with ⟨Hm|output⟩ = h·χ for the HWP1 -> UMZI -> HWP2 chain."""
    _setting_key(hwp1, hwp2)
    first = np.kron(np.eye(2), hwp(hwp1))
    middle = _hybrid_umzi(phi_u)[2:4, :] @ first
    return (hwp(hwp2) @ middle)[0]


def bsm_waveplate_model(chi: PureState, hwp1: float, hwp2: float, phi_u: float = math.pi) -> float:
    """Probability of an H photon in the middle bin for one wave-plate setting."""
    amps = _check_hybrid(chi)
    return float(abs(hm_functional(hwp1, hwp2, phi_u) @ amps) ** 2)


def waveplate_bsm_povm(phi_u: float = math.pi) -> dict[str, np.ndarray]:
    """Hybrid POVM realised by the four wave-plate settings, keyed by Bell label."""
    povm = {}
    for (h1, h2), label in WAVEPLATE_SETTINGS.items():
        h = hm_functional(h1, h2, phi_u)
        povm[label] = np.outer(h.conj(), h)
    return {label: povm[label] for label in BELL_LABELS}


def effective_bsm_povm(pol_input: np.ndarray, phi_u: float = math.pi) -> dict[str, np.ndarray]:
    """
    Time-bin POVM seen by the network qubit when the photon's polarization
    carries the trusted input: M_x = Tr_pol[(𝕀 ⊗ τ) Π_x].
    """
    tau = as_matrix(pol_input)
    if tau.shape != (2, 2):
        raise DimensionError(f"trusted input must be a qubit state, got shape {tau.shape}")
    lift = np.kron(np.eye(2), tau)
    out = {}
    for label, pi in waveplate_bsm_povm(phi_u).items():
        m = np.einsum("ajbj->ab", (lift @ pi).reshape(2, 2, 2, 2))
        out[label] = (m + m.conj().T) / 2
    return out


def bsm_joint_probabilities(
    timebin_rho: DensityMatrix | np.ndarray,
    tau: np.ndarray,
    omega: np.ndarray,
    phi_u: float = math.pi,
) -> np.ndarray:
    """4x4 table of P(x_u, y_v) over Bell outcomes (order BELL_LABELS) for one input pair."""
    m = as_matrix(timebin_rho)
    if m.shape != (4, 4):
        raise DimensionError(f"expected a two-qubit state, got shape {m.shape}")
    povm_u = effective_bsm_povm(tau, phi_u)
    povm_v = effective_bsm_povm(omega, phi_u)
    table = np.zeros((4, 4))
    for i, x in enumerate(BELL_LABELS):
        for k, y in enumerate(BELL_LABELS):
            table[i, k] = float(np.real(np.trace(np.kron(povm_u[x], povm_v[y]) @ m)))
    table = np.clip(table, 0.0, None)
    return table / table.sum()
