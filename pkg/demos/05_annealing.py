"""
Annealing with bosons
=====================

Start in equilibrium where the readout error is 0.7, cool exponentially for
four time constants, and measure how far above the ground state the ensemble
ends up.  Energies scale as N^2, so the residual is also shown per N^2.
"""
from bosonic_ising import DynamicsParams, anneal_ensemble, fig2_instance

print("tau0   N   residual     stderr    residual/N^2")
for tau0 in (1.0, 10.0):
    for N in (1, 2, 4):
        s = anneal_ensemble(fig2_instance(N), DynamicsParams(), tau0, n_traj=5000, master_seed=31)
        print(f"{tau0:<5} {N:2}  {s.residual_energy:9.4f}  {s.residual_stderr:8.4f}  "
              f"{s.residual_energy / N**2:10.4f}")
