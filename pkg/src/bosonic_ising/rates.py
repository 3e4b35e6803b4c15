"""Bosonic Glauber transition weights, evaluated in the log domain.

The weight for moving ``dk`` bosons on site ``i`` from spin down to spin up
(``dk < 0`` moves them back) is

    w = (1 + g) * alpha * xi**(|dk|-1) / ((|dk|-1)!)**2 * F(k_i, dk)

with the thermal factor ``g = tanh(-dk * beta * h_i)`` and the final-state
stimulation factor ``F``.  Forward and reverse weights differ only through
``g``, which gives detailed balance with respect to ``exp(-beta E(k))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np

from .model import ProblemInstance, _check_state, local_field

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class DynamicsParams:
    alpha: float = 1.0
    xi: float = 0.001
    beta: float = 0.0
    delta_k_max: int | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0 < self.xi <= 1:
            raise ValueError("xi must lie in (0, 1]")
        if not self.beta >= 0:
            raise ValueError("beta must be non-negative")
        if self.delta_k_max is not None and self.delta_k_max < 1:
            raise ValueError("delta_k_max must be >= 1")

    def dk_max(self, N: int) -> int:
        if self.delta_k_max is None:
            return N
        if self.delta_k_max > N:
            raise ValueError(f"delta_k_max={self.delta_k_max} exceeds N={N}")
        return self.delta_k_max

    def with_beta(self, beta: float) -> "DynamicsParams":
        return DynamicsParams(self.alpha, self.xi, beta, self.delta_k_max)


class TransitionWeight(NamedTuple):
    site: int
    delta_k: int
    log_rate: float


@numba.njit(cache=True)
def _log_one_plus_gamma(x):
    # log(1 + tanh(-x)) = log 2 - log(1 + exp(2x)), x = dk * beta * h
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return -math.inf if x > 0 else LOG2
    if x > 0:
        return LOG2 - 2.0 * x - math.log1p(math.exp(-2.0 * x))
    return LOG2 - math.log1p(math.exp(2.0 * x))


@numba.njit(cache=True)
def _log_stim(N, k, dk):
    # written in terms of the lower occupation so that F(k, d) == F(k + d, -d) bitwise
    d = abs(dk)
    lo = k if dk > 0 else k - d
    return (math.lgamma(lo + d + 1.0) - math.lgamma(lo + 1.0)) + (
        math.lgamma(N - lo + 1.0) - math.lgamma(N - lo - d + 1.0))


@numba.njit(cache=True)
def _log_weight(h, k, dk, N, beta, log_alpha, log_xi):
    d = abs(dk)
    if beta == 0.0:
        x = 0.0
    elif math.isinf(beta):
        s = dk * h
        x = math.inf if s > 0 else (-math.inf if s < 0 else 0.0)
    else:
        x = dk * beta * h
    return (_log_one_plus_gamma(x) + log_alpha + (d - 1) * log_xi
            - 2.0 * math.lgamma(d) + _log_stim(N, k, dk))


def glauber_gamma(instance: ProblemInstance, k, i: int, delta_k: int, beta: float) -> float:
    return math.tanh(-delta_k * beta * local_field(instance, k, i)) if beta else 0.0


def log_stimulation_factor(N: int, k: int, delta_k: int) -> float:
    if delta_k == 0 or not 0 <= k <= N or not 0 <= k + delta_k <= N:
        raise ValueError(f"invalid transition k={k} -> {k + delta_k} with N={N}")
    return float(_log_stim(N, k, delta_k))


def transition_log_weight(instance: ProblemInstance, params: DynamicsParams, k, i: int,
                          delta_k: int) -> float:
    k = _check_state(instance, k)
    N = instance.N
    if delta_k == 0 or not 0 <= k[i] + delta_k <= N:
        raise ValueError(f"invalid transition on site {i}: k={k[i]}, delta_k={delta_k}")
    if abs(delta_k) > params.dk_max(N):
        raise ValueError(f"|delta_k|={abs(delta_k)} exceeds delta_k_max")
    h = local_field(instance, k, i)
    return float(_log_weight(h, int(k[i]), int(delta_k), N, float(params.beta),
                             math.log(params.alpha), math.log(params.xi)))


def rate_table(instance: ProblemInstance, params: DynamicsParams, k) -> list[TransitionWeight]:
    """Every allowed single-site transition out of ``k`` with its log rate."""
    k = _check_state(instance, k)
    N, dmax = instance.N, params.dk_max(instance.N)
    log_alpha, log_xi = math.log(params.alpha), math.log(params.xi)
    out = []
    for i in range(instance.M):
        h = local_field(instance, k, i)
        ki = int(k[i])
        for dk in range(-min(ki, dmax), min(N - ki, dmax) + 1):
            if dk:
                out.append(TransitionWeight(i, dk, float(
                    _log_weight(h, ki, dk, N, float(params.beta), log_alpha, log_xi))))
    return out
