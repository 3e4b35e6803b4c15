"""
Bosons hold their order to higher temperatures
==============================================

Two coupled sites, each holding N bosons.  At equilibrium the bosonic
ensemble keeps a larger magnetisation than N distinguishable spins at the
same temperature, and the temperature at which order halves grows with N.
"""
import numpy as np
from scipy.optimize import brentq

from bosonic_ising import equilibrium_stats, fig2_instance

J = 10.0

# magnetisation per boson across a temperature grid in units of J N
grid = np.linspace(0.3, 5.0, 8)
print("kT/JN   " + "  ".join(f"{x:5.2f}" for x in grid))
for N in (1, 2, 5, 10):
    inst = fig2_instance(N)
    for kind in ("bosonic", "distinguishable"):
        m = [equilibrium_stats(inst, 1 / (x * J * N), kind).mean_spin[0] / N for x in grid]
        print(f"N={N:<2} {kind[:5]}  " + "  ".join(f"{v:5.2f}" for v in m))


# temperature where <S>/N = 1/2
def half_point(N, kind):
    inst = fig2_instance(N)
    return brentq(lambda x: equilibrium_stats(inst, 1 / (x * J * N), kind).mean_spin[0] / N - 0.5,
                  1e-3, 1e3)


print("\nN    T_half/JN bosonic   distinguishable")
for N in (1, 2, 5, 10, 20, 40):
    print(f"{N:<4} {half_point(N, 'bosonic'):17.3f}   {half_point(N, 'distinguishable'):15.3f}")
