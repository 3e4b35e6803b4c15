"""Master equation for the full distribution over occupation states."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp
from scipy.linalg import eigh

from .model import (MAX_STATES, ProblemInstance, StateSpaceTooLarge, enumerate_states,
                    log_weights, success_mask)
from .rates import DynamicsParams, _log_weight


class StateIndexer:
    """Mixed-radix bijection ``k <-> sum_i k_i (N+1)**i``."""

    def __init__(self, N: int, M: int):
        self.N, self.M = int(N), int(M)
        self.base = self.N + 1
        self.strides = self.base ** np.arange(self.M, dtype=np.int64)
        self.size = self.base**self.M

    def encode(self, k) -> int | np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        if np.any(k < 0) or np.any(k > self.N):
            raise ValueError("occupation out of range")
        return k @ self.strides if k.ndim > 1 else int(k @ self.strides)

    def decode(self, index) -> np.ndarray:
        index = np.asarray(index, dtype=np.int64)
        if np.any(index < 0) or np.any(index >= self.size):
            raise ValueError("index out of range")
        return (index[..., None] // self.strides) % self.base

    def all_states(self) -> np.ndarray:
        return self.decode(np.arange(self.size))


@numba.njit(cache=True)
def _transitions(states, J, lam, N, beta, log_alpha, log_xi, dmax, strides):
    n, M = states.shape
    count = 0
    for s in range(n):
        for i in range(M):
            ki = states[s, i]
            count += min(N - ki, dmax) + min(ki, dmax)
    src = np.empty(count, np.int64)
    dst = np.empty(count, np.int64)
    logw = np.empty(count)
    c = 0
    for s in range(n):
        for i in range(M):
            h = lam * N
            for j in range(M):
                h += J[i, j] * (2 * states[s, j] - N)
            ki = states[s, i]
            for dk in range(-min(ki, dmax), min(N - ki, dmax) + 1):
                if dk == 0:
                    continue
                src[c] = s
                dst[c] = s + dk * strides[i]
                logw[c] = _log_weight(h, ki, dk, N, beta, log_alpha, log_xi)
                c += 1
    return src, dst, logw


def transition_list(instance: ProblemInstance, params: DynamicsParams,
                    max_states: int = MAX_STATES):
    """Flat ``(source, target, log_rate)`` arrays for every transition of the chain."""
    if instance.n_states > max_states:
        raise StateSpaceTooLarge(f"{instance.n_states} states exceeds the limit of {max_states}")
    idx = StateIndexer(instance.N, instance.M)
    return _transitions(idx.all_states(), np.ascontiguousarray(instance.J), instance.lam,
                        instance.N, float(params.beta), math.log(params.alpha),
                        math.log(params.xi), params.dk_max(instance.N), idx.strides)


def generator(instance: ProblemInstance, params: DynamicsParams,
              max_states: int = MAX_STATES) -> sparse.csr_matrix:
    """Sparse generator ``Q`` with ``dp/dt = Q p``; columns sum to zero."""
    src, dst, logw = transition_list(instance, params, max_states)
    n = instance.n_states
    w = np.exp(logw)
    out = np.bincount(src, weights=w, minlength=n)
    Q = sparse.coo_matrix((np.concatenate([w, -out]),
                           (np.concatenate([dst, np.arange(n)]), np.concatenate([src, np.arange(n)]))),
                          shape=(n, n))
    return Q.tocsr()


def master_rhs(instance: ProblemInstance, params: DynamicsParams, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (instance.n_states,):
        raise ValueError(f"p has shape {p.shape}, expected ({instance.n_states},)")
    return generator(instance, params) @ p


def initial_distribution(instance: ProblemInstance, mode="half") -> np.ndarray:
    """``half``: delta at k_i = N//2; ``uniform``: the T=inf bosonic distribution."""
    n = instance.n_states
    if isinstance(mode, str) and mode == "uniform":
        return np.full(n, 1.0 / n)
    if isinstance(mode, str) and mode == "half":
        p = np.zeros(n)
        p[StateIndexer(instance.N, instance.M).encode(np.full(instance.M, instance.N // 2))] = 1.0
        return p
    if isinstance(mode, str):
        raise ValueError(f"unknown initial mode {mode!r}")
    p = np.asarray(mode, dtype=float)
    if p.shape != (n,) or abs(p.sum() - 1) > 1e-9 or p.min() < -1e-9:
        raise ValueError("explicit initial distribution must be a probability vector")
    return p


@dataclass
class DistributionTrajectory:
    t: np.ndarray
    p: np.ndarray  # shape (len(t), n_states)

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i):
        return self.t[i], self.p[i]


class NegativeProbability(RuntimeError):
    pass


def evolve_distribution(instance: ProblemInstance, params: DynamicsParams, p0, t_eval,
                        rtol: float = 1e-8, atol: float = 1e-12,
                        method: str = "RK45") -> DistributionTrajectory:
    """Integrate the master equation from ``p0``, reporting at times ``t_eval``.

    ``t_eval`` must start at 0 and be non-decreasing.  ``p0`` is a probability
    vector or one of ``"half"`` / ``"uniform"``.  The default is adaptive
    Dormand-Prince RK45; ``method="spectral"`` propagates exactly through the
    symmetrised generator, which is the only practical route when the slowest
    relaxation is many decades slower than the fastest rate.
    """
    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=float))
    if t_eval[0] != 0 or np.any(np.diff(t_eval) < 0):
        raise ValueError("t_eval must start at 0 and be non-decreasing")
    p0 = initial_distribution(instance, p0)
    t_end = t_eval[-1]
    if t_end == 0:
        return DistributionTrajectory(t_eval, np.tile(p0, (len(t_eval), 1)))
    if method == "spectral":
        return _evolve_spectral(instance, params, p0, t_eval)
    Q = generator(instance, params)
    extra = {"jac": Q} if method in ("BDF", "Radau", "LSODA") else {}
    sol = solve_ivp(lambda t, p: Q @ p, (0.0, t_end), p0, method=method, t_eval=t_eval,
                    rtol=rtol, atol=atol, **extra)
    if sol.status != 0:
        raise RuntimeError(f"integration failed: {sol.message}")
    P = sol.y.T.copy()
    if P.min() < -1e-9:
        raise NegativeProbability(f"probability {P.min():.3g} below -1e-9")
    P /= P.sum(axis=1, keepdims=True)
    return DistributionTrajectory(sol.t, P)


def _evolve_spectral(instance, params, p0, t_eval):
    # Detailed balance makes pi^{-1/2} Q pi^{1/2} symmetric, so the propagator
    # follows from one dense eigh.  Needs finite beta and a modest dynamic range in pi.
    if math.isinf(params.beta):
        raise ValueError("spectral propagation needs finite beta")
    if instance.n_states > 8192:
        raise StateSpaceTooLarge("spectral propagation is dense; limit is 8192 states")
    half_log_pi = 0.5 * log_weights(instance, params.beta)
    half_log_pi -= half_log_pi.max()
    if -half_log_pi.min() > 300:
        raise ValueError("Boltzmann weights span too many decades for spectral propagation")
    Q = generator(instance, params).toarray()
    S = Q * np.exp(half_log_pi[None, :] - half_log_pi[:, None])
    lam, V = eigh(0.5 * (S + S.T))
    lam = np.minimum(lam, 0.0)
    y = V.T @ (p0 * np.exp(-half_log_pi))
    P = (V @ (np.exp(np.outer(lam, t_eval)) * y[:, None])).T * np.exp(half_log_pi)
    if P.min() < -1e-9:
        raise NegativeProbability(f"probability {P.min():.3g} below -1e-9")
    P = np.clip(P, 0.0, None)
    P /= P.sum(axis=1, keepdims=True)
    return DistributionTrajectory(t_eval, P)


def l1_distance(P, p_eq) -> np.ndarray:
    return np.abs(np.asarray(P) - p_eq).sum(axis=-1)


def first_crossing(t, y, level: float) -> float:
    """First time ``y`` drops to ``level``, linearly interpolated between grid points."""
    t, y = np.asarray(t, float), np.asarray(y, float)
    below = np.flatnonzero(y <= level)
    if below.size == 0:
        raise RuntimeError(f"level {level} not reached by t={t[-1]}")
    j = below[0]
    if j == 0:
        return float(t[0])
    t0, t1, y0, y1 = t[j - 1], t[j], y[j - 1], y[j]
    return float(t0 + (y0 - level) / (y0 - y1) * (t1 - t0))


def equilibration_time_ode(trajectory: DistributionTrajectory, p_eq, tol: float = 0.02) -> float:
    """First time the L1 distance to ``p_eq`` falls to ``tol``."""
    return first_crossing(trajectory.t, l1_distance(trajectory.p, p_eq), tol)


def error_curve(instance: ProblemInstance, trajectory: DistributionTrajectory, signs=None) -> np.ndarray:
    """Readout error probability at each time of ``trajectory``."""
    mask = success_mask(instance, enumerate_states(instance), signs)
    return np.clip(1.0 - trajectory.p[:, mask].sum(axis=1), 0.0, 1.0)


def equilibration_time_error(t, eps, eps_target: float, rel_band: float = 0.05,
                             persistence: int = 3) -> float:
    """First grid time from which ``eps <= (1 + rel_band) eps_target`` holds for
    ``persistence`` consecutive points.

    The same estimator is used for sampled (KMC) and exact error curves.
    """
    ok = np.asarray(eps) <= (1 + rel_band) * eps_target
    run = 0
    for j, flag in enumerate(ok):
        run = run + 1 if flag else 0
        if run == persistence:
            return float(np.asarray(t)[j - persistence + 1])
    raise RuntimeError("error band not reached within the output grid")


def rate_equation_two_level(n1_0: float, n2_0: float, alpha: float, t):
    """Low-temperature two-level rate equation ``dn1/dt = -dn2/dt = alpha (n1 + 1) n2``.

    Logistic closed form with ``N = n1 + n2`` conserved.
    """
    t = np.asarray(t, dtype=float)
    N = n1_0 + n2_0
    if n2_0 == 0:
        return np.full_like(t, float(n1_0)), np.zeros_like(t)
    # dn2/dt = -alpha (N + 1 - n2) n2
    a = alpha * (N + 1)
    n2 = (N + 1) * n2_0 / (n2_0 + (N + 1 - n2_0) * np.exp(a * t))
    return N - n2, n2
