"""Clock-rate and propagator corrections cancel in a uniform potential.

Run:  python demos/equivalence_principle.py

A detector deep inside ever larger stars of fixed compactness sees an
ever more uniform potential over the switching time.  A constant hbar00 is
a coordinate rescaling, so the redshift of the detector clock (tilde_p1)
and the change of the propagator (delta_p1) must cancel; what survives
comes from the potential gradient and falls with the star size.
"""

from gravent import DetectorConfig, StarConfig
from gravent.gcorr import delta_p1, tilde_p1

d = DetectorConfig(delta_e=1.0, sigma=1.0)
compactness = 0.001

print(f"{'R_o/sigma':>10} {'tilde':>12} {'delta':>12} {'|net/tilde|':>12}")
for radius in (5.0, 20.0, 100.0):
    star = StarConfig(compactness * radius, radius)
    t = tilde_p1(1.0, d, star)
    dl = delta_p1(1.0, d, star).value
    print(f"{radius:10.0f} {t:12.4e} {dl:12.4e} {abs((t + dl) / t):12.2e}")
