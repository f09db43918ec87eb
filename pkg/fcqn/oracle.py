# fcqn/oracle.py
"""
Numerical ground truth for the certification layer.

* ``trace_distance_entanglement``: E_Tr(ρ) = min_σ ½‖ρ − σ‖₁ over PPT states,
  posed as a semidefinite program (PPT = separable for two qubits) and solved
  twice with different conic solvers.
* ``closest_separable_product_mixture``: the same minimum over explicit
  mixtures of pure product states, found by multi-start quasi-Newton search.
* ``mle_tomography``: maximum-likelihood state from 36-setting counts.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import cvxpy as cp
import numpy as np
from scipy.optimize import minimize
from scipy.special import softmax

from fcqn import settings
from fcqn.errors import ConvergenceError, DimensionError, MeasurementError, ParameterError
from fcqn.qcore import (
    KETS,
    PAULI,
    POLARIZATION_LABELS,
    DensityMatrix,
    as_matrix,
    min_partial_transpose_eigenvalue,
    project_to_psd,
    trace_norm,
)
from fcqn.states import apply_noise, time_bin_pair

logger = logging.getLogger(__name__)

TOMOGRAPHY_LABELS = ("H", "V", "+", "-", "L", "R")
PPT_TOL = 1e-7
ITERATION_CAP = 100_000


@dataclass(frozen=True, eq=False)
class SeparableApprox:
    sigma_opt: DensityMatrix
    distance: float
    method: Literal["ppt_convex", "product_mixture"]
    iterations: int
    converged: bool
    check_distance: float | None = None
    weights: tuple[float, ...] = field(default=())
    components: tuple[tuple[np.ndarray, np.ndarray], ...] = field(default=())


def _check_state(rho) -> np.ndarray:
    m = as_matrix(rho)
    if m.shape != (4, 4):
        raise DimensionError(f"oracle works on two-qubit states, got shape {m.shape}")
    return m


# ---------- PPT semidefinite program ----------

def _ppt_problem(rho: np.ndarray) -> tuple[cp.Problem, cp.Variable]:
    sigma = cp.Variable((4, 4), hermitian=True)
    sigma_pt = cp.Variable((4, 4), hermitian=True)
    pos = cp.Variable((4, 4), hermitian=True)
    neg = cp.Variable((4, 4), hermitian=True)
    constraints = [
        sigma >> 0,
        cp.real(cp.trace(sigma)) == 1,
        sigma_pt == cp.partial_transpose(sigma, dims=[2, 2], axis=1),
        sigma_pt >> 0,
        sigma + pos - neg == rho,
        pos >> 0,
        neg >> 0,
    ]
    objective = cp.Minimize(0.5 * cp.real(cp.trace(pos + neg)))
    return cp.Problem(objective, constraints), sigma


def _solve_ppt(rho: np.ndarray, solver: str, tol: float) -> tuple[np.ndarray | None, str, int]:
    problem, sigma = _ppt_problem(rho)
    if solver not in cp.installed_solvers():
        logger.warning("solver %s not installed, falling back to SCS", solver)
        solver = cp.SCS
    options = {}
    if solver == cp.SCS:
        options = {"eps_abs": tol * 1e-2, "eps_rel": tol * 1e-2, "max_iters": ITERATION_CAP}
    try:
        problem.solve(solver=solver, **options)
    except cp.SolverError as exc:
        logger.warning("%s failed: %s", solver, exc)
        return None, "solver_error", 0
    stats = problem.solver_stats
    iterations = int(stats.num_iters or 0) if stats is not None else 0
    if sigma.value is None:
        return None, problem.status, iterations
    return np.asarray(sigma.value), problem.status, iterations


def _repair_ppt(sigma: np.ndarray) -> np.ndarray:
    """Mix in the least 𝕀/4 that lifts the partial transpose to λ_min ≥ 0."""
    lam = min_partial_transpose_eigenvalue(sigma)
    if lam >= -PPT_TOL:
        return sigma
    eps = -lam / (0.25 - lam)
    logger.debug("PT eigenvalue %.2e, mixing %.2e of white noise into sigma", lam, eps)
    return (1 - eps) * sigma + eps * np.eye(4) / 4


def trace_distance_entanglement(
    rho: DensityMatrix,
    tol: float = 1e-5,
    solver: str | None = None,
    check_solver: str | None = None,
) -> SeparableApprox:
    """
    Minimal trace distance from ρ to the PPT set.

    The primary solve is repeated with ``check_solver``; ``converged`` is set
    when both report an optimum and their distances agree within ``tol``.
    A failed solve is flagged, not raised: the best available σ is returned.
    """
    if tol < 1e-6:
        raise ParameterError(f"tol={tol} below the supported 1e-6")
    m = _check_state(rho)
    solver = solver or settings.SOLVER
    check_solver = check_solver or settings.CHECK_SOLVER

    sigma, status, iterations = _solve_ppt(m, solver, tol)
    check, check_status, check_iters = _solve_ppt(m, check_solver, tol)
    if sigma is None:
        sigma, status = check, check_status
    if sigma is None:
        logger.error("PPT program failed with both solvers (%s, %s)", status, check_status)
        sigma = np.eye(4, dtype=complex) / 4

    sigma = _repair_ppt(project_to_psd(sigma))
    distance = trace_norm(m - sigma) / 2
    check_distance = None if check is None else trace_norm(m - project_to_psd(check)) / 2
    optimal = status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) and check_status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE)
    converged = bool(optimal and check_distance is not None and abs(distance - check_distance) <= tol)
    if not converged:
        logger.warning("PPT distance not certified: %s=%s, %s=%s", solver, status, check_solver, check_status)
    return SeparableApprox(
        sigma_opt=DensityMatrix(sigma, getattr(rho, "basis_labels", ())),
        distance=float(max(distance, 0.0)),
        method="ppt_convex",
        iterations=int(iterations + check_iters),
        converged=converged,
        check_distance=None if check_distance is None else float(check_distance),
    )


# ---------- explicit product-state mixtures ----------

# (smoothing μ, iteration cap) per L-BFGS stage
SCREEN_STAGES = ((1e-2, 300),)
REFINE_STAGES = ((1e-3, 400), (1e-4, 400), (1e-6, 200))
REFINED_STARTS = 8


def _local_kets(t: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Bloch-angle qubits with their t and phi derivatives, stacked as (3, n, 2)."""
    c, s = np.cos(t / 2), np.sin(t / 2)
    e = np.exp(1j * phi)
    return np.array([
        np.stack([c + 0j, e * s], axis=1),
        np.stack([-s / 2 + 0j, e * c / 2], axis=1),
        np.stack([np.zeros_like(c) + 0j, 1j * e * s], axis=1),
    ])


def _kron_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a[:, :, None] * b[:, None, :]).reshape(-1, 4)


def _unpack(x: np.ndarray, n_terms: int):
    logits = x[:n_terms]
    angles = x[n_terms:].reshape(n_terms, 4)
    return softmax(logits), angles


def _mixture(weights: np.ndarray, angles: np.ndarray):
    a = _local_kets(angles[:, 0], angles[:, 1])
    b = _local_kets(angles[:, 2], angles[:, 3])
    psi = _kron_rows(a[0], b[0])
    sigma = np.einsum("k,ki,kj->ij", weights, psi, psi.conj())
    return sigma, a, b, psi


def _smoothed_objective(x: np.ndarray, rho: np.ndarray, n_terms: int, mu: float) -> tuple[float, np.ndarray]:
    """½Σ√(λ²+μ²) over eigenvalues of ρ − σ, with its analytic gradient."""
    weights, angles = _unpack(x, n_terms)
    sigma, a, b, psi = _mixture(weights, angles)
    lam, vecs = np.linalg.eigh(rho - sigma)
    root = np.sqrt(lam * lam + mu * mu)
    value = 0.5 * root.sum()
    g = 0.5 * (vecs * (lam / root)) @ vecs.conj().T

    g_psi = psi @ g.T
    grad_w = -np.einsum("ki,ki->k", psi.conj(), g_psi).real
    d_psi = np.stack(
        [_kron_rows(a[1], b[0]), _kron_rows(a[2], b[0]), _kron_rows(a[0], b[1]), _kron_rows(a[0], b[2])],
        axis=1,
    )
    grad_angles = -2 * weights[:, None] * np.einsum("kci,ki->kc", d_psi.conj(), g_psi).real
    grad_logits = weights * (grad_w - weights @ grad_w)
    return float(value), np.concatenate([grad_logits, grad_angles.ravel()])


def _random_start(rng: np.random.Generator, n_terms: int) -> np.ndarray:
    logits = rng.normal(scale=0.5, size=n_terms)
    angles = np.column_stack([
        np.arccos(rng.uniform(-1, 1, n_terms)),
        rng.uniform(0, 2 * np.pi, n_terms),
        np.arccos(rng.uniform(-1, 1, n_terms)),
        rng.uniform(0, 2 * np.pi, n_terms),
    ])
    return np.concatenate([logits, angles.ravel()])


def _descend(rho: np.ndarray, x: np.ndarray, n_terms: int, stages) -> tuple[np.ndarray, int, bool]:
    iterations = 0
    success = False
    for mu, maxiter in stages:
        res = minimize(
            _smoothed_objective,
            x,
            args=(rho, n_terms, mu),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": maxiter, "ftol": 1e-13, "gtol": 1e-9},
        )
        x = res.x
        iterations += int(res.nit)
        success = bool(res.success)
    return x, iterations, success


def _mixture_distance(rho: np.ndarray, x: np.ndarray, n_terms: int) -> float:
    sigma = _mixture(*_unpack(x, n_terms))[0]
    return trace_norm(rho - sigma) / 2


def closest_separable_product_mixture(
    rho: DensityMatrix,
    n_terms: int = 16,
    restarts: int = 32,
    seed: int = 0,
    workers: int = 1,
) -> SeparableApprox:
    """
    Best mixture Σ p_k α_k⊗β_k of ``n_terms`` pure product states over
    ``restarts`` random starts. Every start gets a coarse smoothed descent;
    the ``REFINED_STARTS`` closest are then refined at decreasing smoothing.
    The decomposition certifies separability, so the distance is an upper
    bound on E_Tr.
    """
    if n_terms < 1 or restarts < 1:
        raise ParameterError("n_terms and restarts must be >= 1")
    m = _check_state(rho)
    children = np.random.SeedSequence(seed).spawn(restarts)
    starts = [_random_start(np.random.default_rng(c), n_terms) for c in children]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        screened = list(pool.map(lambda x0: _descend(m, x0, n_terms, SCREEN_STAGES), starts))
        ranked = sorted(screened, key=lambda r: _mixture_distance(m, r[0], n_terms))[:REFINED_STARTS]
        refined = list(pool.map(lambda r: _descend(m, r[0], n_terms, REFINE_STAGES), ranked))

    x, _, success = min(refined, key=lambda r: _mixture_distance(m, r[0], n_terms))
    distance = _mixture_distance(m, x, n_terms)
    weights, angles = _unpack(x, n_terms)
    sigma, a, b, _ = _mixture(weights, angles)
    sigma = (sigma + sigma.conj().T) / 2
    sigma = sigma / np.trace(sigma).real
    logger.debug("product mixture: %d terms, %d restarts, distance %.6f", n_terms, restarts, distance)
    return SeparableApprox(
        sigma_opt=DensityMatrix(sigma, getattr(rho, "basis_labels", ())),
        distance=float(distance),
        method="product_mixture",
        iterations=sum(r[1] for r in screened) + sum(r[1] for r in refined),
        converged=success,
        weights=tuple(float(w) for w in weights),
        components=tuple((a[0][k].copy(), b[0][k].copy()) for k in range(n_terms)),
    )


def e_tr_theta_curve(
    thetas: Sequence[float],
    noise=None,
    phases: Sequence[float] | None = None,
    tol: float = 1e-5,
) -> list[float]:
    """
    E_Tr of |Φ(θ)⟩ for each θ, optionally noised. ``noise`` is one NoiseSpec for
    every point or a sequence with one entry per θ; ``phases`` sets the
    residual phase on |ll⟩ per point.
    """
    noises = list(noise) if isinstance(noise, (list, tuple)) else [noise] * len(thetas)
    phis = list(phases) if phases is not None else [0.0] * len(thetas)
    if len(noises) != len(thetas) or len(phis) != len(thetas):
        raise ParameterError("noise and phases need one entry per theta")
    values = []
    for theta, spec, phi in zip(thetas, noises, phis):
        rho = apply_noise(time_bin_pair(theta, phi).density(), spec)
        values.append(trace_distance_entanglement(rho, tol=tol).distance)
    return values


# ---------- maximum-likelihood tomography ----------

@dataclass(frozen=True, eq=False)
class TomographyInput:
    """Counts indexed [s, t] over the projector labels H, V, +, −, L, R for u and v."""

    counts: np.ndarray
    total_shots: int | None = None

    def __post_init__(self):
        c = np.array(self.counts, dtype=float)
        if c.shape != (6, 6):
            raise DimensionError(f"tomography counts must be 6x6, got {c.shape}")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise MeasurementError("tomography counts must be finite and nonnegative")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)
        if self.total_shots is None:
            object.__setattr__(self, "total_shots", int(round(c.sum())))

    @classmethod
    def from_mapping(cls, counts: Mapping[str, float]) -> "TomographyInput":
        table = np.zeros((6, 6))
        for label, n in counts.items():
            table[TOMOGRAPHY_LABELS.index(label[0]), TOMOGRAPHY_LABELS.index(label[1])] = n
        return cls(table)

    @classmethod
    def from_state(cls, rho: DensityMatrix, shots: float = 1.0) -> "TomographyInput":
        """Expected (noise-free) counts of ``rho`` with ``shots`` trials per basis pair."""
        m = _check_state(rho)
        table = np.zeros((6, 6))
        for i, s in enumerate(TOMOGRAPHY_LABELS):
            for k, t in enumerate(TOMOGRAPHY_LABELS):
                vec = np.kron(KETS[s], KETS[t])
                table[i, k] = max(float(np.real(vec.conj() @ m @ vec)), 0.0) * shots
        return cls(table)

    def frequency(self, s: str, t: str) -> float:
        """Relative frequency of outcome (s, t) within its basis pair."""
        i, k = TOMOGRAPHY_LABELS.index(s), TOMOGRAPHY_LABELS.index(t)
        bi, bk = (i // 2) * 2, (k // 2) * 2
        block = self.counts[bi:bi + 2, bk:bk + 2].sum()
        return float(self.counts[i, k] / block) if block > 0 else 0.0


def _projectors() -> np.ndarray:
    out = np.empty((36, 4, 4), dtype=complex)
    for i, s in enumerate(TOMOGRAPHY_LABELS):
        for k, t in enumerate(TOMOGRAPHY_LABELS):
            vec = np.kron(KETS[s], KETS[t])
            out[6 * i + k] = np.outer(vec, vec.conj())
    return out


_PAULI_OF = {"Z": PAULI["Z"], "X": PAULI["X"], "Y": PAULI["Y"], "I": PAULI["I"]}
_BASIS_INDEX = {"Z": 0, "X": 2, "Y": 4}


def linear_inversion(data: TomographyInput) -> np.ndarray:
    """ρ = ¼ Σ S_ij σ_i⊗σ_j with Stokes parameters averaged over every basis pair that fixes them."""
    rho = np.zeros((4, 4), dtype=complex)
    for a in "IXYZ":
        for b in "IXYZ":
            estimates = []
            for bu in ("Z", "X", "Y") if a == "I" else (a,):
                for bv in ("Z", "X", "Y") if b == "I" else (b,):
                    i, k = _BASIS_INDEX[bu], _BASIS_INDEX[bv]
                    block = data.counts[i:i + 2, k:k + 2]
                    total = block.sum()
                    if total <= 0:
                        continue
                    sign_u = np.array([1, 1]) if a == "I" else np.array([1, -1])
                    sign_v = np.array([1, 1]) if b == "I" else np.array([1, -1])
                    estimates.append(float(sign_u @ block @ sign_v) / total)
            if estimates:
                rho += np.mean(estimates) * np.kron(_PAULI_OF[a], _PAULI_OF[b]) / 4
    return rho


def _to_params(t: np.ndarray) -> np.ndarray:
    rows, cols = np.tril_indices(4)
    values = t[rows, cols]
    off = rows != cols
    return np.concatenate([values.real, values[off].imag])


def _from_params(x: np.ndarray) -> np.ndarray:
    rows, cols = np.tril_indices(4)
    off = rows != cols
    t = np.zeros((4, 4), dtype=complex)
    t[rows, cols] = x[: rows.size]
    t[rows[off], cols[off]] += 1j * x[rows.size:]
    return t


def _neg_log_likelihood(x: np.ndarray, freqs: np.ndarray, povm: np.ndarray) -> tuple[float, np.ndarray]:
    t = _from_params(x)
    m = t @ t.conj().T
    norm = float(np.trace(m).real)
    probs = np.maximum(np.einsum("kij,ji->k", povm, m).real, 1e-300)
    active = freqs > 0
    value = -float(freqs[active] @ np.log(probs[active])) + math.log(norm)
    weight = np.zeros_like(freqs)
    weight[active] = freqs[active] / probs[active]
    grad_m = -np.einsum("k,kij->ij", weight, povm) + np.eye(4) / norm
    g = grad_m @ t
    rows, cols = np.tril_indices(4)
    off = rows != cols
    grad = np.concatenate([2 * g[rows, cols].real, 2 * g[rows[off], cols[off]].imag])
    return value, grad


def mle_tomography(data: TomographyInput) -> DensityMatrix:
    """
    Maximum-likelihood two-qubit state, ρ = T T†/Tr(T T†) with T lower triangular,
    started from the PSD-projected linear-inversion estimate.
    """
    if data.counts.sum() <= 0:
        raise MeasurementError("tomography data holds no counts")
    freqs = data.counts.ravel() / data.counts.sum()
    povm = _projectors()

    start = project_to_psd(linear_inversion(data))
    start = (1 - 1e-9) * start + 1e-9 * np.eye(4) / 4
    try:
        t0 = np.linalg.cholesky(start)
    except np.linalg.LinAlgError:
        t0 = np.linalg.cholesky(0.99 * start + 0.01 * np.eye(4) / 4)

    res = minimize(
        _neg_log_likelihood,
        _to_params(t0),
        args=(freqs, povm),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": 10_000, "ftol": 1e-15, "gtol": 1e-11},
    )
    if not np.all(np.isfinite(res.x)):
        raise ConvergenceError(f"MLE diverged: {res.message}")
    t = _from_params(res.x)
    m = t @ t.conj().T
    rho = m / np.trace(m).real
    logger.debug("MLE: %d iterations, -logL=%.12f, %s", res.nit, res.fun, res.message)
    return DensityMatrix((rho + rho.conj().T) / 2, POLARIZATION_LABELS)
