"""Dense density-matrix check of the measurement-feedback construction.

Continuous measurement of every site spin ``S^z_j`` fed back as a field
``Gamma * sum_j J_ij I_j(t) / sqrt(eta)`` on site ``i`` yields the averaged
master equation

    drho/dt = -i Gamma [H, rho] + alpha sum_i D[S^-_i] rho + sum_i kappa_i D[S^z_i] rho
    kappa_i = Gamma^2 / (eta gamma) * sum_{j != i} J_ij^2 + gamma

with ``H = sum_{i != j} J_ij S^z_i S^z_j``.  Everything here is dense and
meant for a few thousand basis states at most.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

MAX_DIM = 4096


@dataclass(frozen=True)
class FeedbackParams:
    Gamma: float = 0.0
    eta: float = 1.0
    gamma_meas: float = 0.0
    alpha: float = 1.0

    def __post_init__(self):
        if min(self.Gamma, self.gamma_meas, self.alpha) < 0:
            raise ValueError("rates must be non-negative")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if self.Gamma > 0 and self.gamma_meas == 0:
            raise ValueError("feedback noise diverges when Gamma > 0 and gamma_meas = 0")


@dataclass(frozen=True)
class SiteOperators:
    N: int
    M: int
    Sz: np.ndarray  # (M, d, d)
    Sminus: np.ndarray  # (M, d, d)

    @property
    def dim(self) -> int:
        return self.Sz.shape[-1]

    @property
    def Splus(self) -> np.ndarray:
        return np.conj(np.swapaxes(self.Sminus, -1, -2))


def build_site_operators(N: int, M: int) -> SiteOperators:
    """``S^z|k> = (2k - N)|k>`` and ``S^-|k> = sqrt(k (N - k + 1))|k-1>`` on each site.

    Basis ordering follows ``StateIndexer`` (site 0 is the fastest digit).
    """
    d = (N + 1) ** M
    if d > MAX_DIM:
        raise ValueError(f"Hilbert space dimension {d} exceeds {MAX_DIM}")
    k = np.arange(N + 1)
    sz1 = np.diag(2.0 * k - N)
    sm1 = np.diag(np.sqrt(k[1:] * (N - k[1:] + 1.0)), 1)
    Sz = np.empty((M, d, d))
    Sm = np.empty((M, d, d))
    for i in range(M):
        # kron puts the last factor fastest, so site 0 goes last
        left, right = np.eye((N + 1) ** (M - 1 - i)), np.eye((N + 1) ** i)
        Sz[i] = np.kron(np.kron(left, sz1), right)
        Sm[i] = np.kron(np.kron(left, sm1), right)
    return SiteOperators(N, M, Sz, Sm)


def _check_J(J, M=None):
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1] or (M is not None and J.shape[0] != M):
        raise ValueError(f"J has shape {J.shape}")
    if not np.allclose(J, J.T, rtol=0, atol=0):
        raise ValueError("J must be symmetric")
    if np.any(np.diag(J) != 0):
        raise ValueError("J must have zero diagonal")
    return J


def ising_hamiltonian(ops: SiteOperators, J) -> np.ndarray:
    """Ordered-pair sum ``sum_{i != j} J_ij S^z_i S^z_j`` (diagonal in the occupation basis)."""
    J = _check_J(J, ops.M)
    z = np.array([np.diag(s) for s in ops.Sz])  # (M, d)
    return np.diag(np.einsum("id,ij,jd->d", z, J, z))


def dissipator(C, rho):
    CdC = C.conj().T @ C
    return C @ rho @ C.conj().T - 0.5 * (CdC @ rho + rho @ CdC)


def feedback_term(ops: SiteOperators, J, rho, Gamma: float = 1.0):
    """``-i sum_{i, j != i} [Gamma J_ij S^z_i, S^z_j rho + rho S^z_j]`` evaluated term by term."""
    J = np.asarray(J, dtype=float)
    out = np.zeros_like(rho, dtype=complex)
    for i in range(ops.M):
        for j in range(ops.M):
            if i == j or J[i, j] == 0:
                continue
            A = Gamma * J[i, j] * ops.Sz[i]
            B = ops.Sz[j] @ rho + rho @ ops.Sz[j]
            out += -1j * (A @ B - B @ A)
    return out


def feedback_generator_residual(J, rho, ops: SiteOperators | None = None, Gamma: float = 1.0) -> float:
    """Max-abs difference between the feedback term and ``-i Gamma [H, rho]``."""
    J = _check_J(J)
    rho = np.asarray(rho, dtype=complex)
    if ops is None:
        M = J.shape[0]
        N = round(rho.shape[0] ** (1.0 / M)) - 1
        ops = build_site_operators(N, M)
    if rho.shape != (ops.dim, ops.dim):
        raise ValueError(f"rho has shape {rho.shape}, expected {(ops.dim, ops.dim)}")
    H = ising_hamiltonian(ops, J)
    diff = feedback_term(ops, J, rho, Gamma) - (-1j * Gamma * (H @ rho - rho @ H))
    return float(np.abs(diff).max()) if diff.size else 0.0


def dephasing_rates(J, params: FeedbackParams) -> np.ndarray:
    J = np.asarray(J, dtype=float)
    if params.Gamma == 0:
        return np.full(J.shape[0], params.gamma_meas)
    return params.Gamma**2 / (params.eta * params.gamma_meas) * (J**2).sum(axis=1) + params.gamma_meas


class LindbladModel:
    """Precomputed operators for repeated right-hand-side evaluations."""

    def __init__(self, ops: SiteOperators, params: FeedbackParams, J):
        self.ops, self.params = ops, params
        self.J = _check_J(J, ops.M)
        self.H = ising_hamiltonian(ops, self.J)
        self.kappa = dephasing_rates(self.J, params)
        self._jumps = []  # (rate, C, C^dag C)
        for i in range(ops.M):
            for rate, C in ((params.alpha, ops.Sminus[i]), (self.kappa[i], ops.Sz[i])):
                if rate:
                    self._jumps.append((rate, C, C.T @ C))

    def rhs(self, rho):
        G = self.params.Gamma
        out = -1j * G * (self.H @ rho - rho @ self.H) if G else np.zeros_like(rho, dtype=complex)
        for rate, C, CdC in self._jumps:
            out = out + rate * (C @ rho @ C.T - 0.5 * (CdC @ rho + rho @ CdC))
        return out


def lindblad_rhs(ops: SiteOperators, params: FeedbackParams, J, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (ops.dim, ops.dim):
        raise ValueError(f"rho has shape {rho.shape}, expected {(ops.dim, ops.dim)}")
    return LindbladModel(ops, params, J).rhs(rho)


class DensityMatrixViolation(RuntimeError):
    pass


def check_density_matrix(rho, trace_tol=1e-9, herm_tol=1e-12, eig_tol=1e-8):
    """Raise DensityMatrixViolation unless ``rho`` is a valid state within the given slack."""
    herm = np.abs(rho - rho.conj().T).max()
    if herm > herm_tol:
        raise DensityMatrixViolation(f"hermiticity defect {herm:.3g}")
    tr = abs(np.trace(rho) - 1)
    if tr > trace_tol:
        raise DensityMatrixViolation(f"trace defect {tr:.3g}")
    ev = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if ev.min() < -eig_tol:
        raise DensityMatrixViolation(f"negative eigenvalue {ev.min():.3g}")


@dataclass
class DensityTrajectory:
    t: np.ndarray
    rho: np.ndarray  # (len(t), d, d)


def evolve_density_matrix(ops: SiteOperators, params: FeedbackParams, J, rho0, t_eval,
                          rtol: float = 1e-10, atol: float = 1e-13,
                          herm_tol: float = 1e-10) -> DensityTrajectory:
    """Adaptive RK45 integration of the feedback master equation.

    Each output is checked for trace, Hermiticity and positivity.
    """
    model = LindbladModel(ops, params, J)
    rho0 = np.asarray(rho0, dtype=complex)
    check_density_matrix(rho0, herm_tol=herm_tol)
    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=float))
    d = ops.dim
    if t_eval[-1] == 0:
        return DensityTrajectory(t_eval, np.repeat(rho0[None], len(t_eval), axis=0))
    sol = solve_ivp(lambda t, y: model.rhs(y.reshape(d, d)).ravel(), (0.0, t_eval[-1]),
                    rho0.ravel(), t_eval=t_eval, rtol=rtol, atol=atol)
    if sol.status != 0:
        raise RuntimeError(f"integration failed: {sol.message}")
    rhos = sol.y.T.reshape(-1, d, d)
    for r in rhos:
        check_density_matrix(r, herm_tol=herm_tol)
    return DensityTrajectory(sol.t, rhos)


def diagonal_populations(rho) -> np.ndarray:
    """Occupation-state probabilities, indexed like ``StateIndexer``."""
    p = np.real(np.diag(rho)).copy()
    if p.min() < -1e-9 or abs(p.sum() - 1) > 1e-9:
        raise DensityMatrixViolation("diagonal is not a probability vector")
    return p


def offdiagonal_mass(rho) -> float:
    return float(np.abs(rho - np.diag(np.diag(rho))).sum())


def diagonal_generator(ops: SiteOperators, params: FeedbackParams, J) -> np.ndarray:
    """Matrix ``G`` with ``diag(L(diag(p))) = G p``, built column by column."""
    model = LindbladModel(ops, params, J)
    d = ops.dim
    G = np.empty((d, d))
    for b in range(d):
        proj = np.zeros((d, d), dtype=complex)
        proj[b, b] = 1.0
        G[:, b] = np.real(np.diag(model.rhs(proj)))
    return G


def classical_zero_temperature_generator(N: int, M: int, alpha: float, gap: float = 1.0) -> np.ndarray:
    """Classical single-step generator at zero temperature for non-interacting sites
    with a positive field, with the thermal factor ``1 + g = 2`` divided out.

    Every lowering move ``k_i -> k_i - 1`` is then downhill with rate
    ``alpha * k_i (N - k_i + 1)``.
    """
    from .master import generator
    from .model import ProblemInstance
    from .rates import DynamicsParams

    inst = ProblemInstance(np.zeros((M, M)), gap / (2 * N), N)
    Q = generator(inst, DynamicsParams(alpha, 1.0, np.inf, 1))
    return 0.5 * Q.toarray()

