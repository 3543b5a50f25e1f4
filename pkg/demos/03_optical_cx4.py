"""
A controlled-X4 gate from two partial polarizing beamsplitters
===============================================================

Photons a1 and a2 hold qubit A (|HH> + |VV> style); photon b holds a
ququart in polarization x path. Post-selecting on coincidences gives the
ideal gate with a fixed success probability.
"""

import numpy as np

from hybridqit import hilbert as hb
from hybridqit import photonics as ph

circ = ph.standard_cx4_circuit()
for el in circ.elements:
    print(f"  {el.kind:5s} on {el.photon:2s} path={el.path} {el.label}")

rng = np.random.default_rng(1)
logical = hb.random_state((2, 4), rng)
res = ph.optical_cx4(ph.encode_logical(logical), "standard", q=1.0)
out = hb.make_state((2, 4), ph.decode_logical(res.vector))
ideal = hb.apply(logical, hb.controlled(hb.gate_x4()), [0, 1])
print("fidelity with abstract CX4:", round(hb.state_fidelity(out, ideal), 12))
print("success probability * 27:", res.success_probability * 27)

# The lossless variant needs a pre-biased control state
reg = ph.prepare_system_a(2 ** -0.5, 2 ** -0.5, prebiased=True) @ ph.prepare_system_b(0.6, 0.8)
res = ph.optical_cx4(reg, "simplified")
print("simplified variant success probability:", res.success_probability)

# The transfer experiments add analyzers and post-selection
res = ph.run_optical_4to2(ph.PHI_STATES["phi5"], q=1.0)
print("4->2 of phi5: fidelity", hb.fidelity(res.rho, ph.ideal_4to2(ph.PHI_STATES["phi5"])),
      "success", res.success_probability)
