# fcqn/qcore.py
"""
Small-dimension complex linear algebra shared by every module.

Conventions used throughout the package:

* qubit u precedes qubit v in every tensor product (left operand is major);
* the computational basis maps e -> 0, l -> 1 (time bin) and H -> 0, V -> 1
  (polarization);
* randomness is always drawn from a ``numpy.random.Generator`` handed in by
  the caller.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import numpy.typing as npt

from fcqn.errors import DimensionError, StateError

ComplexMatrix = npt.NDArray[np.complex128]

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = -1e-9

TIME_BIN_LABELS = ("ee", "el", "le", "ll")
POLARIZATION_LABELS = ("HH", "HV", "VH", "VV")
HYBRID_LABELS = ("He", "Ve", "Hl", "Vl")
QUBIT_TIME_LABELS = ("e", "l")
QUBIT_POL_LABELS = ("H", "V")

_S = 1 / np.sqrt(2)

# Single-qubit kets addressed by their polarization (or time-bin) label
KETS: dict[str, ComplexMatrix] = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "+": np.array([_S, _S], dtype=complex),
    "-": np.array([_S, -_S], dtype=complex),
    "L": np.array([_S, 1j * _S], dtype=complex),
    "R": np.array([_S, -1j * _S], dtype=complex),
    "e": np.array([1, 0], dtype=complex),
    "l": np.array([0, 1], dtype=complex),
}

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": IDENTITY_2, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}


def _frozen(array: npt.ArrayLike) -> ComplexMatrix:
    out = np.array(array, dtype=complex)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: ComplexMatrix
    basis_labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        amps = _frozen(self.amplitudes).reshape(-1)
        amps.flags.writeable = False
        if not np.all(np.isfinite(amps)):
            raise StateError("amplitudes must be finite")
        labels = tuple(self.basis_labels) or tuple(str(i) for i in range(amps.size))
        if len(labels) != amps.size:
            raise StateError(f"{len(labels)} basis labels for a {amps.size}-dim state")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise StateError(f"state is not normalized (norm^2 = {norm:.3e})")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "basis_labels", labels)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> ComplexMatrix:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.projector(), self.basis_labels)

    def amplitude(self, label: str) -> complex:
        return complex(self.amplitudes[self.basis_labels.index(label)])


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: ComplexMatrix
    basis_labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise StateError("density matrix entries must be finite")
        labels = tuple(self.basis_labels) or tuple(str(i) for i in range(m.shape[0]))
        if len(labels) != m.shape[0]:
            raise StateError(f"{len(labels)} basis labels for a {m.shape[0]}-dim state")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise StateError("density matrix is not Hermitian")
        trace = np.trace(m).real
        if abs(trace - 1.0) > TRACE_TOL:
            raise StateError(f"density matrix trace is {trace:.12f}, expected 1")
        min_eig = float(np.linalg.eigvalsh((m + m.conj().T) / 2).min())
        if min_eig < POSITIVITY_TOL:
            raise StateError(f"density matrix has negative eigenvalue {min_eig:.3e}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "basis_labels", labels)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_matrix(
        cls, matrix: npt.ArrayLike, basis_labels: Sequence[str] = (), repair: bool = False
    ) -> "DensityMatrix":
        """Build a state, optionally projecting onto the PSD trace-one set first."""
        m = np.asarray(matrix, dtype=complex)
        if repair:
            m = project_to_psd(m)
        return cls(m, tuple(basis_labels))


def as_matrix(value: "DensityMatrix | npt.ArrayLike") -> ComplexMatrix:
    if isinstance(value, DensityMatrix):
        return value.matrix
    if isinstance(value, PureState):
        return value.projector()
    return np.asarray(value, dtype=complex)


def ket(labels: str) -> ComplexMatrix:
    """Product ket for a label string, e.g. ``ket("H+")`` or ``ket("ee")``."""
    out = np.array([1], dtype=complex)
    for label in labels:
        try:
            out = np.kron(out, KETS[label])
        except KeyError:
            raise StateError(f"unknown single-qubit label {label!r}") from None
    return out


def projector(labels: str) -> ComplexMatrix:
    k = ket(labels)
    return np.outer(k, k.conj())


def tensor(a: npt.ArrayLike, b: npt.ArrayLike) -> ComplexMatrix:
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.ndim != b.ndim or a.ndim not in (1, 2):
        raise DimensionError("tensor expects two vectors or two matrices")
    return np.kron(a, b)


def _subsystem_index(keep: int | str) -> int:
    if keep in (0, "u"):
        return 0
    if keep in (1, "v"):
        return 1
    raise DimensionError(f"unknown subsystem {keep!r}; use 'u'/0 or 'v'/1")


def partial_trace(rho: DensityMatrix | npt.ArrayLike, keep: int | str) -> DensityMatrix:
    """Reduce a 2x2 bipartite state to subsystem ``keep``."""
    m = as_matrix(rho)
    if m.shape != (4, 4):
        raise DimensionError(f"partial_trace expects a 2x2 bipartite state, got {m.shape}")
    t = m.reshape(2, 2, 2, 2)
    if _subsystem_index(keep) == 0:
        reduced = np.einsum("ajbj->ab", t)
    else:
        reduced = np.einsum("jajb->ab", t)
    labels = QUBIT_POL_LABELS
    if isinstance(rho, DensityMatrix) and rho.basis_labels == TIME_BIN_LABELS:
        labels = QUBIT_TIME_LABELS
    return DensityMatrix((reduced + reduced.conj().T) / 2, labels)


def partial_transpose(matrix: DensityMatrix | npt.ArrayLike, system: int | str = 1) -> ComplexMatrix:
    m = as_matrix(matrix)
    if m.shape != (4, 4):
        raise DimensionError(f"partial_transpose expects a 4x4 operator, got {m.shape}")
    t = m.reshape(2, 2, 2, 2)
    if _subsystem_index(system) == 0:
        return t.transpose(2, 1, 0, 3).reshape(4, 4)
    return t.transpose(0, 3, 2, 1).reshape(4, 4)


def trace_norm(a: DensityMatrix | npt.ArrayLike) -> float:
    m = as_matrix(a)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"trace_norm expects a square matrix, got shape {m.shape}")
    return float(np.linalg.svd(m, compute_uv=False).sum())


def fidelity_pure(rho: DensityMatrix | npt.ArrayLike, psi: PureState | npt.ArrayLike) -> float:
    """<psi|rho|psi> for a pure reference state."""
    m = as_matrix(rho)
    vec = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=complex)
    if m.shape != (vec.size, vec.size):
        raise DimensionError(f"state of dim {m.shape[0]} vs reference of dim {vec.size}")
    value = np.vdot(vec, m @ vec)
    return float(value.real)


def transpose_computational(a: npt.ArrayLike) -> ComplexMatrix:
    m = as_matrix(a)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"transpose expects a square matrix, got shape {m.shape}")
    return m.T.copy()


def project_to_psd(matrix: npt.ArrayLike) -> ComplexMatrix:
    """Closest trace-one PSD matrix: Hermitian part, eigenvalues clipped at 0."""
    m = np.asarray(matrix, dtype=complex)
    m = (m + m.conj().T) / 2
    vals, vecs = np.linalg.eigh(m)
    vals = np.clip(vals, 0.0, None)
    if vals.sum() <= 0:
        raise StateError("matrix has no positive part to project onto")
    out = (vecs * (vals / vals.sum())) @ vecs.conj().T
    return (out + out.conj().T) / 2


def min_partial_transpose_eigenvalue(rho: DensityMatrix | npt.ArrayLike) -> float:
    return float(np.linalg.eigvalsh(partial_transpose(rho)).min())


def random_pure_state(rng: np.random.Generator, dim: int = 4) -> ComplexMatrix:
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return vec / np.linalg.norm(vec)


def random_density_matrix(
    rng: np.random.Generator, dim: int = 4, rank: int | None = None, labels: Sequence[str] = ()
) -> DensityMatrix:
    """Ginibre-distributed mixed state (full rank unless ``rank`` is given)."""
    k = rank or dim
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    m = g @ g.conj().T
    m = m / np.trace(m).real
    return DensityMatrix((m + m.conj().T) / 2, tuple(labels))


def random_product_state(rng: np.random.Generator) -> ComplexMatrix:
    return np.kron(random_pure_state(rng, 2), random_pure_state(rng, 2))


def random_separable_state(
    rng: np.random.Generator, n_terms: int = 4, labels: Sequence[str] = ()
) -> DensityMatrix:
    """Random convex mixture of pure product states."""
    weights = rng.dirichlet(np.ones(n_terms))
    m = np.zeros((4, 4), dtype=complex)
    for w in weights:
        k = random_product_state(rng)
        m += w * np.outer(k, k.conj())
    m = m / np.trace(m).real
    return DensityMatrix((m + m.conj().T) / 2, tuple(labels))


def random_hermitian(rng: np.random.Generator, dim: int) -> ComplexMatrix:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2
