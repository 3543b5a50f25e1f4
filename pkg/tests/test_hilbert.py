import numpy as np
import pytest

import oracles as orc
from hybridqit import hilbert as hb

s2 = 1 / np.sqrt(2)


def ket(dims, *digits):
    return hb.basis_state(dims, digits)


def test_make_state_basis_and_normalization():
    s = hb.make_state((4,), [1, 0, 0, 0])
    assert s.dims == (4,) and np.allclose(s.amps, [1, 0, 0, 0])
    s = hb.make_state((4,), [1, 1, 1, 1])
    assert np.allclose(s.amps, 0.5)
    s = hb.make_state((2, 4), [0.5, 0.5, 0, 0, 0.5, 0.5, 0, 0])
    assert abs(s.norm - 1) < 1e-12


def test_make_state_rejects_bad_input():
    with pytest.raises(ValueError):
        hb.make_state((2, 2), [1, 0, 0])
    with pytest.raises(ValueError):
        hb.make_state((2,), [0, 0])


def test_amplitudes_are_read_only():
    s = hb.make_state((2,), [1, 0])
    with pytest.raises(ValueError):
        s.amps[0] = 2


def test_tensor_products():
    s = hb.tensor(hb.plus_state(), ket((4,), 0))
    assert s.dims == (2, 4)
    assert np.allclose(s.amps, [s2, 0, 0, 0, s2, 0, 0, 0])
    assert np.allclose(hb.tensor(ket((2,), 0), ket((2,), 0)).amps, [1, 0, 0, 0])
    eps, zeta = 0.6, 0.8
    b = np.array([0.5, 0.5j, -0.5, 0.5])
    s = hb.tensor(hb.make_state((2,), [eps, zeta]), hb.make_state((4,), b))
    assert np.allclose(s.amps, np.concatenate([eps * b, zeta * b]))


def test_gate_actions():
    assert np.allclose(hb.gate_x4().mat @ [0, 1, 0, 0], [0, 0, 0, 1])
    assert np.allclose(hb.gate_z4().mat @ [0, 0, 1, 0], [0, 0, -1, 0])
    assert np.allclose(hb.gate_x13().mat @ [1, 0, 0, 0], [1, 0, 0, 0])
    g = hb.gate_x2d(4).mat
    e1 = np.eye(8)[1]
    assert np.allclose(g @ e1, np.eye(8)[5]) and np.allclose(g @ np.eye(8)[5], e1)
    assert np.allclose(hb.gate_z2d(3).mat, orc.z2d(3))


def test_controlled_gates():
    cx4 = hb.controlled(hb.gate_x4())
    assert cx4.dims == (2, 4)
    assert hb.apply(ket((2, 4), 1, 0), cx4, [0, 1]).equal_up_to_phase(ket((2, 4), 1, 2))
    assert hb.apply(ket((2, 4), 0, 3), cx4, [0, 1]).equal_up_to_phase(ket((2, 4), 0, 3))
    cx = hb.controlled(hb.gate_x())
    assert np.allclose(hb.apply(ket((2, 2), 1, 0), cx, [0, 1]).amps, [0, 0, 0, 1])
    assert np.allclose(cx4.mat, orc.ctrl(orc.x2d(2)))


def test_apply_cx4_on_plus_expansion():
    a, b, c, d = 0.1, 0.7j, -0.5, 0.5
    v = np.array([a, b, c, d]) / np.linalg.norm([a, b, c, d])
    s = hb.tensor(hb.plus_state(), hb.make_state((4,), v))
    out = hb.apply(s, hb.controlled(hb.gate_x4()), [0, 1])
    expected = s2 * np.concatenate([v, [v[2], v[3], v[0], v[1]]])
    assert np.allclose(out.amps, expected)


def test_apply_identity_and_targets():
    s = hb.random_state((2, 4), 1)
    assert np.allclose(hb.apply(s, hb.gate_i(4), [1]).amps, s.amps)
    out = hb.apply(ket((2, 4), 0, 0), hb.gate_x4(), [1])
    assert np.allclose(out.amps, ket((2, 4), 0, 2).amps)
    with pytest.raises(ValueError):
        hb.apply(s, hb.gate_x4(), [0])
    with pytest.raises(ValueError):
        hb.apply(s, hb.controlled(hb.gate_x()), [0, 0])


def test_apply_on_reordered_targets_matches_kron():
    rng = np.random.default_rng(3)
    s = hb.random_state((2, 3, 2), rng)
    u = hb.GateMatrix((2, 2), hb.random_unitary(4, rng))
    out = hb.apply(s, u, [2, 0])
    # reorder to (q2, q0, qutrit), apply u (x) I, reorder back
    t = s.tensor().transpose(2, 0, 1).reshape(4, 3)
    ref = (u.mat @ t).reshape(2, 2, 3).transpose(1, 2, 0).reshape(-1)
    assert np.allclose(out.amps, ref)


def test_measure_basis_examples():
    rec = hb.measure_basis(hb.plus_state(), 0, [[s2, s2], [s2, -s2]], rng_seed=0)
    assert rec.outcome == 0 and abs(rec.probability - 1) < 1e-12
    a, b = 0.6, 0.8j
    rec = hb.measure_basis(hb.make_state((2,), [a, b]), 0, [[1, 0], [0, 1]], force=0)
    assert abs(rec.probability - 0.36) < 1e-12
    assert np.allclose(rec.probabilities, [0.36, 0.64])


def test_measure_a2_on_three_photon_state_is_balanced():
    # (|HH> + |VV>)/sqrt2 on a1 a2, ququart b arbitrary
    b = hb.make_state((4,), [0.5, 0.5, 0.5, -0.5])
    a = hb.make_state((2, 2), [s2, 0, 0, s2])
    s = hb.tensor(a, b)
    rec = hb.measure_basis(s, 1, [[s2, s2], [s2, -s2]], force=0)
    assert np.allclose(rec.probabilities, [0.5, 0.5])


def test_measure_subspace():
    v = np.array([0.5, 0.5j, 0.5, -0.5])
    s = hb.apply(hb.tensor(hb.plus_state(), hb.make_state((4,), v)),
                 hb.controlled(hb.gate_x4()), [0, 1])
    rec = hb.measure_subspace(s, 1, [[0, 1], [2, 3]], force=1)
    assert np.allclose(rec.probabilities, [0.5, 0.5])
    low = hb.make_state((4,), [0.6, 0.8, 0, 0])
    rec = hb.measure_subspace(low, 0, [[0, 1], [2, 3]], rng_seed=5)
    assert rec.outcome == 0 and abs(rec.probability - 1) < 1e-12
    assert np.allclose(rec.post_state.amps, low.amps)
    rec = hb.measure_subspace(ket((4,), 2), 0, [[0, 1], [2, 3]], rng_seed=5)
    assert rec.outcome == 1
    with pytest.raises(ValueError):
        hb.measure_subspace(low, 0, [[0, 1], [2]])


def test_forced_zero_probability_branch_raises():
    with pytest.raises(ValueError):
        hb.measure_basis(ket((2,), 0), 0, [[1, 0], [0, 1]], force=1)


def test_fidelity_examples():
    psi = hb.random_state((4,), 2)
    assert abs(hb.fidelity(hb.DensityMatrix.from_state(psi), psi) - 1) < 1e-12
    assert abs(hb.fidelity(hb.DensityMatrix((4,), np.eye(4) / 4), psi) - 0.25) < 1e-12
    rho = hb.DensityMatrix((2,), np.diag([0.5, 0.5]))
    assert abs(hb.fidelity(rho, hb.plus_state()) - 0.5) < 1e-12


def test_partial_trace_examples():
    a, b = hb.random_state((2,), 1), hb.random_state((3,), 2)
    ab = hb.tensor(a, b)
    assert np.allclose(hb.partial_trace(ab, [0]).mat, np.outer(a.amps, a.amps.conj()))
    assert np.allclose(hb.partial_trace(ab, [1]).mat, np.outer(b.amps, b.amps.conj()))
    bell = hb.make_state((2, 2), [s2, 0, 0, s2])
    assert np.allclose(hb.partial_trace(bell, [1]).mat, np.eye(2) / 2)
    # A traced out of alpha|00> + delta|11> with B a ququart
    s = hb.make_state((2, 4), [s2, 0, 0, 0, 0, s2, 0, 0])
    red = hb.partial_trace(s, [1]).mat
    assert np.allclose(red, np.diag([0.5, 0.5, 0, 0]))


def test_canonical_isomorphism_examples():
    v = hb.random_state((2, 4), 4)
    fused = hb.canonical_isomorphism(v, (0, 1))
    assert fused.dims == (8,)
    assert np.allclose(fused.amps, orc.target_merge(v.amps, 4))
    assert np.allclose(hb.canonical_isomorphism(ket((2, 3), 0, 2), (0, 1)).amps, np.eye(6)[2])
    assert np.allclose(hb.canonical_isomorphism(ket((2, 4), 1, 0), (0, 1)).amps, np.eye(8)[4])
    back = hb.canonical_isomorphism_inverse(fused, 0)
    assert back.dims == (2, 4) and np.allclose(back.amps, v.amps)


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        hb.DensityMatrix((2,), np.diag([1.2, -0.2]))
    with pytest.raises(ValueError):
        hb.DensityMatrix((2,), [[0.5, 0.1], [0.3, 0.5]])
    with pytest.raises(ValueError):
        hb.DensityMatrix((2,), np.eye(2))


def test_embed_restrict_insert():
    s = hb.make_state((2,), [0.6, 0.8])
    e = hb.embed(s, 0, 4)
    assert e.dims == (4,) and np.allclose(e.amps, [0.6, 0.8, 0, 0])
    assert np.allclose(hb.restrict(e, 0, [0, 1]).amps, s.amps)
    with pytest.raises(ValueError):
        hb.restrict(hb.make_state((4,), [0, 0, 1, 0]), 0, [0, 1])
    joined = hb.insert(s, 0, hb.plus_state())
    assert np.allclose(joined.amps, hb.tensor(hb.plus_state(), s).amps)
