"""
Equilibration time of a four-site glass
=======================================

Complete graph with J = -10 and a small field that makes all-up the global
minimum and all-down a metastable trap.  At the temperature where the
equilibrium readout error is 0.1, the time to reach that error from a uniform
start drops steeply with N.  Exact spectral propagation, N up to 5 to keep
the demo short (N = 8 takes minutes).
"""
import time

import numpy as np

from bosonic_ising import DynamicsParams, beta_for_error, evolve_distribution, fig3b_instance
from bosonic_ising.master import equilibration_time_error, error_curve

times = np.concatenate([[0.0], np.geomspace(1e-3, 1e10, 1301)])
taus = {}
print("N   kT        tau          seconds")
for N in range(1, 6):
    t0 = time.perf_counter()
    inst = fig3b_instance(N)
    beta = beta_for_error(inst, 0.1)
    traj = evolve_distribution(inst, DynamicsParams(1.0, 0.001, beta), "uniform", times,
                               method="spectral")
    taus[N] = equilibration_time_error(times, error_curve(inst, traj), 0.1)
    print(f"{N:<3} {1 / beta:8.3f}  {taus[N]:11.4g}  {time.perf_counter() - t0:7.2f}")

Ns = np.array(sorted(taus))
local = np.diff(np.log([taus[n] for n in Ns])) / np.diff(np.log(Ns))
print("\nlocal log-log slopes:", np.round(local, 2))
