"""
Merging, splitting and building multi-qubit gates
==================================================

Merge packs a qubit and a d-level qudit into 2d levels; split undoes it.
Chaining merges, one qudit unitary and splits runs an n-qubit gate.
"""

import numpy as np

from hybridqit import hilbert as hb
from hybridqit import protocols as pr

rng = np.random.default_rng(0)

# Merge (2, 3 -> 6) and back
x = hb.random_state((2, 3), rng)
merged = pr.merge(x, seed=rng).final_state
back = pr.split(merged, seed=rng).final_state
print("merge dims", merged.dims, "-> split dims", back.dims,
      "round-trip fidelity", round(hb.state_fidelity(back, x), 12))

# A Toffoli-type phase gate on three qubits through one 8-level qudit
ccz = np.diag([1, 1, 1, 1, 1, 1, 1, -1]).astype(complex)
gate = pr.synthesize_gate(ccz, 3)
for step in gate.steps:
    print("  ", step)

psi = hb.random_state((2, 2, 2), rng)
out = gate.apply(psi, seed=rng)
print("pipeline vs direct fidelity:", hb.state_fidelity(out.final_state, gate.direct(psi)))

# The "big" convention reads u in the register's own qubit order
u = hb.random_unitary(8, rng)
for conv in pr.CONVENTIONS:
    g = pr.synthesize_gate(u, 3, conv)
    f = hb.state_fidelity(g.apply(psi, seed=rng).final_state, g.direct(psi))
    print(f"{conv:>6}: targets {g.direct_targets()}, fidelity {f:.12f}")
