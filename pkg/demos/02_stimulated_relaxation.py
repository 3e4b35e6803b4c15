"""
Final-state stimulation speeds up relaxation
============================================

A single site with a level splitting of 10 at kT = 10, started with half
the bosons in each level.  The master equation gives the exact relaxation,
and the time to come within L1 = 0.02 of equilibrium shrinks as N grows.
"""
import numpy as np

from bosonic_ising import (DynamicsParams, boltzmann, evolve_distribution, two_level_instance)
from bosonic_ising.master import equilibration_time_ode, rate_equation_two_level

beta = 0.1
t = np.linspace(0, 3, 6001)

print("N     tau(full dk)   tau(dk<=1)")
taus = {}
for N in (1, 8, 16, 32, 64):
    inst = two_level_instance(N, 10.0)
    p_eq = boltzmann(inst, beta)
    row = []
    for dk in (None, 1):
        traj = evolve_distribution(inst, DynamicsParams(1.0, 0.001, beta, dk), "half", t)
        row.append(equilibration_time_ode(traj, p_eq))
    taus[N] = row[0]
    print(f"{N:<5} {row[0]:12.4f}   {row[1]:10.4f}")

Ns = np.array([8, 16, 32, 64])
p = np.polyfit(np.log(Ns), np.log([taus[n] for n in Ns]), 1)[0]
print(f"\nfitted exponent over N=8..64: {p:.3f}")

# cold limit against the rate equation dn2/dt = -alpha (n1 + 1) n2.  At beta -> inf
# every downhill move carries the thermal factor 1 + gamma = 2, hence t / 2.
N = 50
inst = two_level_instance(N, 10.0)
times = np.linspace(0, 0.05, 6)
traj = evolve_distribution(inst, DynamicsParams(1.0, 0.001, 10.0, 1), "half", times)
_, n2 = rate_equation_two_level(N - N // 2, N // 2, 1.0, 2 * times)
print("\nt       <n2> master eq   n2 rate eq")
for ti, a, b in zip(times, traj.p @ np.arange(N + 1), n2):
    print(f"{ti:<6.3f}  {a:14.3f}   {b:10.3f}")
