"""
Moving quantum information between a qubit and a ququart
=========================================================

A ququart carries two qubits' worth of amplitudes. Here we spread one
over a (qubit, ququart) pair and pull it back, checking every
measurement branch against the expected state.
"""

import numpy as np

from hybridqit import hilbert as hb
from hybridqit import protocols as pr

# A ququart with four complex amplitudes
b = hb.make_state((4,), [0.5, 0.5j, -0.5, 0.5])
print("input ququart:", np.round(b.amps, 3))

# 4 -> 2: the amplitudes end up on |00>, |01>, |10>, |11> of (A, B's lower block)
for outcome in (0, 1):
    res = pr.qit_4to2(b, force=outcome)
    f = hb.state_fidelity(res.final_state, pr.target_4to2(b))
    print(f"4->2 branch {outcome}: corrections {res.corrections_applied}, fidelity {f:.12f}")

# Both branches are equally likely whatever the input
print("branch probabilities:", pr.qit_4to2(b, seed=1).outcome_log[0].probabilities)

# 2 -> 4: an entangled (qubit, qubit) state concentrated on one ququart
joint = hb.embed(hb.make_state((2, 2), [1, 0, 0, 1]), 1, 4)
res = pr.qit_2to4(joint, seed=7)
print("2->4 output:", np.round(res.final_state.amps, 3))

# Post-selection keeps only the outcome that needs no correction
res = pr.qit_4to2(b, mode="postselect", seed=3)
print("post-selected success probability:", res.success_probability)
