"""Gillespie sampling of the bosonic transition rates.

Trajectories run under a piecewise-constant temperature.  When a waiting
time overshoots the end of a temperature slice the clock is moved to the
boundary and the waiting time is redrawn, which is exact for
piecewise-constant rates because the exponential law is memoryless.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .model import (ProblemInstance, _check_state, all_energies, beta_for_error, ground_search,
                    ground_sign_pattern, success_mask)
from .rates import DynamicsParams, _log_one_plus_gamma, _log_stim

DEFAULT_SEED = 20100501


@dataclass(frozen=True)
class AnnealingSchedule:
    kind: str = "constant"
    T0: float = math.inf
    tau0: float | None = None
    t_end: float = 1.0
    n_slices: int = 400

    def __post_init__(self):
        if self.kind not in ("constant", "exponential"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not self.T0 > 0:
            raise ValueError("T0 must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.kind == "exponential" and not (self.tau0 and self.tau0 > 0):
            raise ValueError("exponential schedule needs tau0 > 0")
        if self.n_slices < 1:
            raise ValueError("n_slices must be >= 1")

    @classmethod
    def constant(cls, beta: float, t_end: float) -> "AnnealingSchedule":
        return cls("constant", math.inf if beta == 0 else 1.0 / beta, None, t_end, 1)

    @classmethod
    def exponential(cls, T0: float, tau0: float, t_end: float | None = None,
                    n_slices: int = 400) -> "AnnealingSchedule":
        return cls("exponential", T0, tau0, 4 * tau0 if t_end is None else t_end, n_slices)

    def temperature(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full_like(t, self.T0)
        return self.T0 * np.exp(-t / self.tau0)

    def slices(self):
        """Slice edges and the inverse temperature on each slice (evaluated at its midpoint)."""
        if self.kind == "constant":
            return np.array([0.0, self.t_end]), np.array([1.0 / self.T0])
        edges = np.linspace(0.0, self.t_end, self.n_slices + 1)
        return edges, 1.0 / self.temperature(0.5 * (edges[1:] + edges[:-1]))


@dataclass
class TrajectoryRecord:
    seed: object
    events: np.ndarray  # structured: time, site, delta_k
    times: np.ndarray
    sampled_states: np.ndarray
    final_state: np.ndarray
    final_energy: float


@dataclass
class EnsembleSummary:
    n_traj: int
    times: np.ndarray
    error_curve: np.ndarray
    error_stderr: np.ndarray
    mean_energy_curve: np.ndarray
    energy_stderr: np.ndarray
    residual_energy: float
    residual_stderr: float
    final_energies: np.ndarray = field(repr=False)
    final_states: np.ndarray = field(repr=False)


EVENT_DTYPE = np.dtype([("time", "f8"), ("site", "i8"), ("delta_k", "i8")])


def _stim_table(N, dmax):
    # table[k, dk + dmax] = ln F(k, dk) or -inf where the move leaves [0, N]
    tab = np.full((N + 1, 2 * dmax + 1), -np.inf)
    for k in range(N + 1):
        for dk in range(-dmax, dmax + 1):
            if dk and 0 <= k + dk <= N:
                tab[k, dk + dmax] = _log_stim(N, k, dk)
    return tab


def _prefactor_table(params, dmax):
    d = np.arange(1, dmax + 1)
    pre = math.log(params.alpha) + (d - 1) * math.log(params.xi) - 2.0 * np.array(
        [math.lgamma(x) for x in d])
    return np.concatenate([pre[::-1], [-np.inf], pre])


@numba.njit(cache=True)
def _fill_log_rates(k, h, N, beta, dmax, stim, pre, out):
    M = k.shape[0]
    for i in range(M):
        for c in range(2 * dmax + 1):
            dk = c - dmax
            ls = stim[k[i], c]
            if dk == 0 or ls == -math.inf:
                out[i, c] = -math.inf
                continue
            if beta == 0.0:
                x = 0.0
            elif math.isinf(beta):
                s = dk * h[i]
                x = math.inf if s > 0 else (-math.inf if s < 0 else 0.0)
            else:
                x = dk * beta * h[i]
            out[i, c] = _log_one_plus_gamma(x) + pre[c] + ls


@numba.njit(cache=True)
def _pick(logr, rng):
    """Draw (flat channel, total rate) from log rates; total 0 means absorbing."""
    m = -math.inf
    flat = logr.ravel()
    for v in flat:
        if v > m:
            m = v
    if m == -math.inf:
        return -1, 0.0
    tot = 0.0
    for v in flat:
        tot += math.exp(v - m)
    u = rng.random() * tot
    acc = 0.0
    last = -1
    for c in range(flat.shape[0]):
        if flat[c] == -math.inf:
            continue
        last = c
        acc += math.exp(flat[c] - m)
        if u < acc:
            return c, tot * math.exp(m)
    return last, tot * math.exp(m)


@numba.njit(cache=True, nogil=True)
def _simulate(J, lam, N, dmax, stim, pre, k0, edges, betas, out_times, rng, record, max_events):
    M = k0.shape[0]
    k = k0.copy()
    h = np.empty(M)
    for i in range(M):
        h[i] = lam * N
        for j in range(M):
            h[i] += J[i, j] * (2 * k[j] - N)
    logr = np.empty((M, 2 * dmax + 1))
    n_out = out_times.shape[0]
    samples = np.empty((n_out, M), np.int64)
    ev_t = np.empty(max_events if record else 0)
    ev_i = np.empty(max_events if record else 0, np.int64)
    ev_d = np.empty(max_events if record else 0, np.int64)
    n_ev = 0
    o = 0
    t = edges[0]
    for s in range(betas.shape[0]):
        t_stop = edges[s + 1]
        beta = betas[s]
        _fill_log_rates(k, h, N, beta, dmax, stim, pre, logr)
        while True:
            c, R = _pick(logr, rng)
            t_next = t + rng.exponential() / R if R > 0 else math.inf
            if t_next > t_stop:
                t = t_stop
                break
            while o < n_out and out_times[o] < t_next:
                samples[o] = k
                o += 1
            t = t_next
            i = c // (2 * dmax + 1)
            dk = c % (2 * dmax + 1) - dmax
            k[i] += dk
            for j in range(M):
                h[j] += 2.0 * dk * J[j, i]
            if record:
                if n_ev == max_events:
                    raise RuntimeError("event buffer exhausted")
                ev_t[n_ev] = t
                ev_i[n_ev] = i
                ev_d[n_ev] = dk
            n_ev += 1
            _fill_log_rates(k, h, N, beta, dmax, stim, pre, logr)
    while o < n_out:
        samples[o] = k
        o += 1
    m = n_ev if record else 0
    return samples, k, ev_t[:m], ev_i[:m], ev_d[:m], n_ev


def sample_initial_state(instance: ProblemInstance, mode: str, rng) -> np.ndarray:
    """``half``: every site at N//2; ``uniform``: independent uniform k_i on [0, N]."""
    if mode == "half":
        return np.full(instance.M, instance.N // 2, dtype=np.int64)
    if mode == "uniform":
        return rng.integers(0, instance.N + 1, size=instance.M).astype(np.int64)
    raise ValueError(f"unknown initial mode {mode!r}")


class _Kernel:
    """Precomputed tables shared by every trajectory of one (instance, params)."""

    def __init__(self, instance: ProblemInstance, params: DynamicsParams):
        self.instance = instance
        self.dmax = params.dk_max(instance.N)
        self.stim = _stim_table(instance.N, self.dmax)
        self.pre = _prefactor_table(params, self.dmax)
        self.J = np.ascontiguousarray(instance.J)

    def log_rates(self, k, beta):
        k = np.asarray(k, dtype=np.int64)
        S = 2.0 * k - self.instance.N
        h = self.instance.lam * self.instance.N + self.J @ S
        out = np.empty((self.instance.M, 2 * self.dmax + 1))
        _fill_log_rates(k, h, self.instance.N, float(beta), self.dmax, self.stim, self.pre, out)
        return out

    def run(self, k0, schedule, out_times, rng, record=False, max_events=10**7):
        edges, betas = schedule.slices()
        if schedule.t_end == 0:
            edges, betas = edges[:1], betas[:0]
        return _simulate(self.J, self.instance.lam, self.instance.N, self.dmax, self.stim,
                         self.pre, np.asarray(k0, np.int64), edges, betas,
                         np.asarray(out_times, float), rng, record, max_events)


def kmc_step(instance: ProblemInstance, params: DynamicsParams, state, rng):
    """One Gillespie step at ``params.beta``: ``(dt, (site, delta_k), total_rate)``."""
    state = _check_state(instance, state)
    kern = _Kernel(instance, params)
    logr = kern.log_rates(state, params.beta)
    c, R = _pick(logr, rng)
    if R == 0:
        raise RuntimeError("absorbing state: total rate is zero")
    dt = rng.exponential() / R
    width = 2 * kern.dmax + 1
    return dt, (int(c // width), int(c % width - kern.dmax)), R


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for trajectory ``index``, stable under any execution order."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index,)))


def run_trajectory(instance: ProblemInstance, params: DynamicsParams, schedule: AnnealingSchedule,
                   init="uniform", output_times=None, seed: int = DEFAULT_SEED,
                   record_events: bool = True, max_events: int = 10**7) -> TrajectoryRecord:
    """Simulate one trajectory.

    ``init`` is ``half``, ``uniform``, an explicit state or a callable ``rng -> state``.

    ``params.beta`` is ignored; the schedule sets the temperature.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    k0 = _initial(instance, init, rng)
    out_times = np.array([schedule.t_end] if output_times is None else output_times, float)
    samples, k, ev_t, ev_i, ev_d, _ = _Kernel(instance, params).run(
        k0, schedule, out_times, rng, record_events, max_events)
    events = np.empty(len(ev_t), EVENT_DTYPE)
    events["time"], events["site"], events["delta_k"] = ev_t, ev_i, ev_d
    S = 2.0 * k - instance.N
    E = float(0.5 * S @ instance.J @ S + instance.lam * instance.N * S.sum())
    return TrajectoryRecord(seed, events, out_times, samples, k.copy(), E)


def equilibrium_sampler(instance: ProblemInstance, beta: float):
    """Callable ``rng -> state`` drawing from the bosonic Boltzmann distribution."""
    from .model import boltzmann, enumerate_states

    cdf = np.cumsum(boltzmann(instance, beta))
    states = enumerate_states(instance).astype(np.int64)

    def draw(rng):
        idx = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), len(cdf) - 1)
        return states[idx].copy()

    return draw


def _initial(instance, init, rng):
    if callable(init):
        return init(rng)
    if isinstance(init, str):
        return sample_initial_state(instance, init, rng)
    return _check_state(instance, init).astype(np.int64)


def _run_many(instance, params, schedule, init, times, master_seed, n_traj, threads):
    kern = _Kernel(instance, params)
    samples = np.empty((n_traj, len(times), instance.M), np.int64)

    def one(j):
        rng = trajectory_rng(master_seed, j)
        samples[j] = kern.run(_initial(instance, init, rng), schedule, times, rng)[0]

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(one, range(n_traj)))
    else:
        for j in range(n_traj):
            one(j)
    return samples


def ensemble_statistics(instance: ProblemInstance, params: DynamicsParams,
                        schedule: AnnealingSchedule, n_traj: int, master_seed: int = DEFAULT_SEED,
                        output_times=None, init="uniform", signs=None,
                        threads: int | None = None) -> EnsembleSummary:
    """Readout error and energy statistics over ``n_traj`` independent trajectories.

    Trajectory ``j`` draws from ``trajectory_rng(master_seed, j)`` so the result
    does not depend on ``threads``.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    if signs is None:
        signs = ground_sign_pattern(instance)
    _, E_min = ground_search(instance)
    times = np.linspace(0, schedule.t_end, 11) if output_times is None else np.asarray(output_times, float)
    samples = _run_many(instance, params, schedule, init, times, master_seed, n_traj, threads)
    ok = success_mask(instance, samples, signs)
    eps = 1.0 - ok.mean(axis=0)
    E = all_energies(instance, samples.reshape(-1, instance.M)).reshape(n_traj, len(times))
    ddof = 1 if n_traj > 1 else 0
    e_err = E.std(axis=0, ddof=ddof) / math.sqrt(n_traj)
    return EnsembleSummary(
        n_traj=n_traj,
        times=times,
        error_curve=eps,
        error_stderr=np.sqrt(eps * (1 - eps) / n_traj),
        mean_energy_curve=E.mean(axis=0),
        energy_stderr=e_err,
        residual_energy=float(E[:, -1].mean() - E_min),
        residual_stderr=float(e_err[-1]),
        final_energies=E[:, -1],
        final_states=samples[:, -1],
    )


def equilibration_time_kmc(instance: ProblemInstance, params: DynamicsParams, n_traj: int,
                           t_end: float, n_checkpoints: int = 200, rel_band: float = 0.05,
                           master_seed: int = DEFAULT_SEED, threads: int | None = None,
                           log_grid: bool = True) -> float:
    """Time for the sampled error to settle within ``(1 + rel_band)`` of its equilibrium value.

    Starts from the infinite-temperature (uniform) state at constant
    ``params.beta``; the band must hold for three consecutive checkpoints.
    """
    from .master import equilibration_time_error
    from .model import error_probability

    eps_target = error_probability(instance, params.beta)
    if log_grid:
        times = np.concatenate([[0.0], np.geomspace(t_end * 1e-4, t_end, n_checkpoints - 1)])
    else:
        times = np.linspace(0.0, t_end, n_checkpoints)
    summary = ensemble_statistics(instance, params, AnnealingSchedule.constant(params.beta, t_end),
                                  n_traj, master_seed, times, threads=threads)
    return equilibration_time_error(times, summary.error_curve, eps_target, rel_band)


def anneal_ensemble(instance: ProblemInstance, params: DynamicsParams, tau0: float, n_traj: int,
                    master_seed: int = DEFAULT_SEED, start_error: float = 0.7,
                    n_slices: int = 400, signs=None, output_times=None,
                    threads: int | None = None) -> EnsembleSummary:
    """Exponential anneal from the temperature whose equilibrium error is ``start_error``.

    Initial states are drawn from that equilibrium distribution; the schedule
    runs for ``4 tau0``.
    """
    beta0 = beta_for_error(instance, start_error, signs=signs)
    schedule = AnnealingSchedule.exponential(1.0 / beta0, tau0, n_slices=n_slices)
    init = equilibrium_sampler(instance, beta0)
    return ensemble_statistics(instance, params, schedule, n_traj, master_seed,
                               output_times, init=init, signs=signs, threads=threads)
