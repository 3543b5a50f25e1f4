"""
Photon distinguishability: HOM dip and transfer fidelity
=========================================================

A fraction q of photon pairs interferes; the rest behaves classically.
Dip visibility grows linearly in q, and so does the transfer fidelity.
"""

import numpy as np

from hybridqit import hilbert as hb
from hybridqit import photonics as ph

print(" q     c(0)    c(inf)  V")
for q in np.linspace(0, 1, 6):
    c0 = ph.hom_coincidence("zero", q)
    ci = ph.hom_coincidence("infinite", q)
    print(f"{q:.1f}  {c0:.4f}  {ci:.4f}  {ph.visibility(c0, ci):.3f}")

q = ph.REFERENCE_HOM["q"]
print(f"\nat q = {q}: V = {ph.hom_visibility(q):.4f}")

print("\nfidelity at q = 0.826 (classical limit 2/3):")
for name, c in ph.PHI_STATES.items():
    f = hb.fidelity(ph.run_optical_4to2(c, q).rho, ph.ideal_4to2(c))
    print(f"  {name}: {f:.4f}")
for name, c in ph.PSI_STATES.items():
    f = hb.fidelity(ph.run_optical_2to4(*c, q=q).rho, ph.ideal_2to4(*c))
    print(f"  {name}: {f:.4f}")
