"""Tabulate the collision-frequency profiles and compare with the closed form.

    python scripts/sigma_profiles.py
"""
import math

import numpy as np
from scipy.special import erf

from kdvlab.landau import collision_frequency, sigma_bruteforce, sigma_table


def closed_form(r):
    e, g = erf(r / math.sqrt(2)), math.sqrt(2 / math.pi) * math.exp(-r * r / 2)
    return 2 * e / r**3 - 2 * g / r**2, ((1 - 1 / r**2) * e + g / r) / r


def main():
    tab = sigma_table()
    print(f"table: {len(tab.r)} nodes, refinement error {tab.max_refinement_error:.2e}")
    print(f"{'|v|':>6s} {'lam_par':>12s} {'closed':>12s} {'lam_perp':>12s} {'closed':>12s}")
    for r in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0):
        par, perp = tab(np.array([r]))
        cpar, cperp = closed_form(r)
        print(f"{r:6.1f} {par[0]:12.6e} {cpar:12.6e} {perp[0]:12.6e} {cperp:12.6e}")
    v = np.array([0.7, -0.3, 1.1])
    diff = np.max(np.abs(collision_frequency(v) - sigma_bruteforce(v)))
    print(f"brute-force midpoint rule at v = {v.tolist()}: max entry difference {diff:.2e}")


if __name__ == "__main__":
    main()
