"""Negativity versus distance from a weak-field star (Fig. 1 parameters).

Run:  python demos/fig1_sweep.py [steps]

M/R_o = 0.001, sigma dE = 0.00674, dE R_o = 1, and two proper separations.
Each point costs a few seconds, so the default 20-point grid takes around
two minutes per curve.  The same sweep is available from the command line:

    gravent demos/fig1.cfg
"""

import sys

import numpy as np

from gravent import DetectorConfig, StarConfig, sweep_r1

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 20
d = DetectorConfig(delta_e=1.0, sigma=0.00674)
star = StarConfig(mass=0.001)
r1 = np.linspace(1.1, 10.0, steps)

tables = {lp: sweep_r1(d, star, lp, r1) for lp in (0.0095, 0.01)}

print(f"{'r1/R_o':>7} {'Nprime(0.0095)':>15} {'Nprime(0.01)':>13}")
for k, r in enumerate(r1):
    print(f"{r:7.3f} {tables[0.0095].rows[k].n_prime:15.9f} {tables[0.01].rows[k].n_prime:13.3e}")
print(f"{'flat':>7} {tables[0.0095].flat.n_prime:15.9f} {tables[0.01].flat.n_prime:13.3e}")

# where the shift comes from: clock-rate (tilde) and propagator (delta) parts
print("\nfirst-order parts, lp = 0.0095")
print(f"{'r1/R_o':>7} {'tildeP1':>11} {'deltaP1':>11} {'sum':>11} {'d|X|':>11}")
for row in tables[0.0095].rows[::max(1, steps // 6)]:
    bd = row.breakdown
    dp = bd.tilde_p[0] + bd.delta_p[0]
    print(f"{row.r1:7.3f} {bd.tilde_p[0]:11.3e} {bd.delta_p[0]:11.3e} {dp:11.3e} "
          f"{abs(row.x) - abs(row.x0):11.3e}")

# the lower curve: the flat state is just below threshold (|X0| < P0) and
# the first-order shifts are too small to cross it
row = tables[0.01].rows[0]
print(f"\nlp = 0.01 at r1 = {row.r1}: |X| - P = {abs(row.x) - max(row.p1, row.p2):.3e}, "
      f"P = {row.p0:.3e}")
