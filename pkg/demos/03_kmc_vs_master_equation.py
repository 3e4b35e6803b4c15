"""
Sampling the same dynamics with kinetic Monte Carlo
===================================================

The master equation is exact but enumerates every occupation state.  Gillespie
trajectories use the same rates, so an ensemble estimate of the readout error
should track the exact curve within binomial noise.
"""
import numpy as np

from bosonic_ising import (AnnealingSchedule, DynamicsParams, ensemble_statistics,
                           evolve_distribution, fig2_instance)
from bosonic_ising.master import error_curve

inst = fig2_instance(3)
beta = 1 / 30
params = DynamicsParams(beta=beta)
times = np.linspace(0, 3, 11)
n = 10_000

exact = error_curve(inst, evolve_distribution(inst, params, "uniform", times))
s = ensemble_statistics(inst, params, AnnealingSchedule.constant(beta, 3.0), n, master_seed=5,
                        output_times=times)

print("t      exact eps   KMC eps   z-score")
for t, e, k in zip(times, exact, s.error_curve):
    se = np.sqrt(e * (1 - e) / n)
    print(f"{t:<5.1f}  {e:9.4f}  {k:8.4f}  {(k - e) / se:+7.2f}")
