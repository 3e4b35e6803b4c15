"""Problem instances, energies and exact equilibrium statistics.

Each of the ``M`` sites holds ``N`` bosons that are either spin up or spin
down.  A microstate is the vector ``k`` of up-spin counts, and the site spin
is ``S_i = 2 k_i - N``.  The energy is

    E(k) = sum_{i<j} J_ij S_i S_j + lam * N * sum_i S_i

Bosons are indistinguishable, so each ``k`` is a single microstate.  The
distinguishable-particle comparison weights ``k`` by ``prod_i C(N, k_i)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.special import gammaln, logsumexp

MAX_STATES = 10**7

Kind = Literal["bosonic", "distinguishable"]


class StateSpaceTooLarge(ValueError):
    pass


class DegenerateGroundState(ValueError):
    """Ground-state sign pattern is not unique, so the error probability is undefined."""


@dataclass(frozen=True)
class ProblemInstance:
    J: np.ndarray
    lam: float
    N: int
    M: int = field(init=False)

    def __post_init__(self):
        J = np.array(self.J, dtype=float, copy=True)
        if J.ndim == 0 or J.size == 0:
            J = J.reshape(0, 0) if J.size == 0 else J.reshape(1, 1)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise ValueError(f"J must be a square matrix, got shape {J.shape}")
        if not np.array_equal(J, J.T):
            raise ValueError("J must be symmetric")
        if np.any(np.diag(J) != 0):
            raise ValueError("J must have zero diagonal")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be an integer >= 1, got {self.N}")
        if J.shape[0] < 1:
            raise ValueError("need at least one site")
        J.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "M", J.shape[0])

    @property
    def n_states(self) -> int:
        return (self.N + 1) ** self.M

    @classmethod
    def two_site(cls, J: float, lam: float, N: int) -> "ProblemInstance":
        """The ferromagnetic pair ``H = -J S_1 S_2 - lam N (S_1 + S_2)``."""
        return cls(np.array([[0.0, -J], [-J, 0.0]]), -lam, N)

    @classmethod
    def complete_graph(cls, M: int, coupling: float, lam: float, N: int) -> "ProblemInstance":
        J = np.full((M, M), float(coupling))
        np.fill_diagonal(J, 0.0)
        return cls(J, lam, N)


def fig2_instance(N: int) -> ProblemInstance:
    """Two-site instance with J=10, lambda=0.5 (stored as J_12=-10, lam=-0.5)."""
    return ProblemInstance.two_site(10.0, 0.5, N)


def fig3b_instance(N: int) -> ProblemInstance:
    """Four sites, all pairs J_ij=-10, lam=-1: global minimum all up, local minimum all down."""
    return ProblemInstance.complete_graph(4, -10.0, -1.0, N)


def two_level_instance(N: int, gap: float) -> ProblemInstance:
    """Single site where moving one boson to the upper level costs ``gap``."""
    if gap <= 0:
        raise ValueError("gap must be positive")
    if N < 1:
        raise ValueError("N must be >= 1")
    return ProblemInstance(np.zeros((1, 1)), gap / (2 * N), N)


def _check_state(instance: ProblemInstance, k) -> np.ndarray:
    k = np.asarray(k)
    if k.shape != (instance.M,):
        raise ValueError(f"state has shape {k.shape}, instance has M={instance.M}")
    if np.any(k < 0) or np.any(k > instance.N):
        raise ValueError(f"occupations must lie in [0, {instance.N}]")
    return k


def spins(instance: ProblemInstance, k) -> np.ndarray:
    return 2 * np.asarray(k) - instance.N


def energy(instance: ProblemInstance, k) -> float:
    k = _check_state(instance, k)
    S = 2.0 * k - instance.N
    return float(0.5 * S @ instance.J @ S + instance.lam * instance.N * S.sum())


def local_field(instance: ProblemInstance, k, i: int) -> float:
    """Field ``h_i`` with ``E(k + d e_i) - E(k) = 2 d h_i``."""
    k = _check_state(instance, k)
    if not 0 <= i < instance.M:
        raise IndexError(f"site {i} out of range for M={instance.M}")
    S = 2.0 * k - instance.N
    return float(instance.lam * instance.N + instance.J[i] @ S)


def enumerate_states(instance: ProblemInstance, max_states: int = MAX_STATES) -> np.ndarray:
    """All occupation vectors, row ``idx`` decoding the mixed-radix index ``idx``.

    Site 0 is the fastest-varying digit.
    """
    n = instance.n_states
    if n > max_states:
        raise StateSpaceTooLarge(f"{n} states exceeds the limit of {max_states}")
    idx = np.arange(n)
    base = instance.N + 1
    return np.stack([(idx // base**i) % base for i in range(instance.M)], axis=1)


def all_energies(instance: ProblemInstance, states: np.ndarray | None = None) -> np.ndarray:
    if states is None:
        states = enumerate_states(instance)
    S = 2.0 * states - instance.N
    pair = 0.5 * np.einsum("si,ij,sj->s", S, instance.J, S)
    return pair + instance.lam * instance.N * S.sum(axis=1)


def log_weights(instance: ProblemInstance, beta: float, kind: Kind = "bosonic",
                states: np.ndarray | None = None) -> np.ndarray:
    """Unnormalised log Boltzmann weights over the enumerated states."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if kind not in ("bosonic", "distinguishable"):
        raise ValueError(f"unknown statistics kind {kind!r}")
    if states is None:
        states = enumerate_states(instance)
    E = all_energies(instance, states)
    # shift by E_min so that beta -> inf stays finite
    logw = -beta * (E - E.min()) if beta > 0 else np.zeros_like(E)
    if kind == "distinguishable":
        N = instance.N
        logw = logw + (gammaln(N + 1) - gammaln(states + 1) - gammaln(N - states + 1)).sum(axis=1)
    return logw


def boltzmann(instance: ProblemInstance, beta: float, kind: Kind = "bosonic") -> np.ndarray:
    logw = log_weights(instance, beta, kind)
    return np.exp(logw - logsumexp(logw))


def ground_search(instance: ProblemInstance, max_states: int = MAX_STATES):
    """Exhaustive search.  Returns ``(minimisers, E_min)`` with minimisers as a 2-D array."""
    states = enumerate_states(instance, max_states)
    E = all_energies(instance, states)
    E_min = E.min()
    tol = 1e-9 * max(1.0, abs(E_min))
    return states[E <= E_min + tol], float(E_min)


def ground_sign_pattern(instance: ProblemInstance) -> np.ndarray:
    """Sign of every site spin in the ground state.

    Raises DegenerateGroundState if the minimisers disagree on a sign or a
    ground-state site spin is zero.
    """
    minimisers, _ = ground_search(instance)
    signs = np.sign(2 * minimisers - instance.N)
    if np.any(signs == 0) or np.any(signs != signs[0]):
        raise DegenerateGroundState("ground-state sign pattern is not unique")
    return signs[0].astype(int)


def success_mask(instance: ProblemInstance, states: np.ndarray, signs=None) -> np.ndarray:
    """States whose every site spin has the ground-state sign; zero spin counts as failure.

    ``signs`` defaults to the unique ground-state pattern.  A 2-D array lists
    several acceptable patterns (one per row).
    """
    if signs is None:
        signs = ground_sign_pattern(instance)
    state_signs = np.sign(2 * np.asarray(states) - instance.N)
    signs = np.atleast_2d(signs)
    ok = np.zeros(state_signs.shape[:-1], dtype=bool)
    for row in signs:
        ok |= np.all(state_signs == row, axis=-1)
    return ok


@dataclass(frozen=True)
class EquilibriumStats:
    Z: float
    log_Z: float
    mean_energy: float
    mean_spin: np.ndarray
    error_probability: float
    statistics_kind: str


def equilibrium_stats(instance: ProblemInstance, beta: float, kind: Kind = "bosonic",
                      max_states: int = MAX_STATES) -> EquilibriumStats:
    """Exact enumeration of Z, <E>, <S_i> and the error probability.

    ``Z`` is reported in absolute terms (may overflow to inf at huge beta);
    everything else is computed from weights shifted by the minimum energy.
    The error probability is NaN when the ground-state sign pattern is
    degenerate.
    """
    states = enumerate_states(instance, max_states)
    E = all_energies(instance, states)
    logw = log_weights(instance, beta, kind, states)
    log_z_shifted = logsumexp(logw)
    p = np.exp(logw - log_z_shifted)
    log_Z = float(log_z_shifted - beta * E.min())
    try:
        eps = float(max(0.0, 1.0 - p[success_mask(instance, states)].sum()))
    except DegenerateGroundState:
        eps = float("nan")
    with np.errstate(over="ignore"):
        Z = float(np.exp(log_Z))
    return EquilibriumStats(
        Z=Z,
        log_Z=log_Z,
        mean_energy=float(p @ E),
        mean_spin=p @ (2.0 * states - instance.N),
        error_probability=eps,
        statistics_kind=kind,
    )


def error_probability(instance: ProblemInstance, beta: float, kind: Kind = "bosonic",
                      signs=None) -> float:
    """Probability that a sign readout of every site misses the ground-state pattern."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    states = enumerate_states(instance)
    mask = success_mask(instance, states, signs)
    logw = log_weights(instance, beta, kind, states)
    return float(min(1.0, max(0.0, -np.expm1(logsumexp(logw[mask]) - logsumexp(logw)))))


def beta_for_error(instance: ProblemInstance, target: float, kind: Kind = "bosonic",
                   tol: float = 1e-6, beta_max: float = 1e6, signs=None) -> float:
    """Inverse temperature at which the equilibrium error probability equals ``target``.

    Bisection on a bracket ``[0, beta_hi]`` whose upper end doubles until the
    error drops below the target.
    """
    if signs is None:
        signs = ground_sign_pattern(instance)
    states = enumerate_states(instance)
    mask = success_mask(instance, states, signs)
    dE = all_energies(instance, states)
    dE -= dE.min()
    log_deg = log_weights(instance, 0.0, kind, states)

    def eps(beta):
        logw = log_deg - beta * dE
        return float(min(1.0, max(0.0, -np.expm1(logsumexp(logw[mask]) - logsumexp(logw)))))

    eps0 = eps(0.0)
    if abs(target - eps0) <= 1e-12:
        return 0.0
    if not 0.0 < target < eps0:
        raise ValueError(f"target error {target} not in (0, {eps0})")
    scale = max(np.abs(instance.J).max(), abs(instance.lam)) * instance.N**2
    hi = 1.0 / max(scale, 1e-300)
    lo, eps_lo = 0.0, eps0
    eps_hi = eps(hi)
    while eps_hi >= target:
        if eps_hi > eps_lo + 1e-12:
            raise ValueError("error probability is not decreasing in beta")
        lo, eps_lo = hi, eps_hi
        hi *= 2.0
        if hi > beta_max:
            raise ValueError(f"target error {target} unreachable below beta={beta_max}")
        eps_hi = eps(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        eps_mid = eps(mid)
        if not eps_hi - 1e-12 <= eps_mid <= eps_lo + 1e-12:
            raise ValueError("error probability is not monotone on the bracket")
        if eps_mid > target:
            lo, eps_lo = mid, eps_mid
        else:
            hi, eps_hi = mid, eps_mid
        if hi - lo <= 1e-13 * hi:
            break
    beta = 0.5 * (lo + hi)
    if abs(eps(beta) - target) > tol:
        raise ValueError(f"bisection did not reach |eps - {target}| <= {tol}")
    return beta
