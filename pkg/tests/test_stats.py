import numpy as np
import pytest

from hybridqit import hilbert as hb
from hybridqit import photonics as ph
from hybridqit import stats as st


def test_expected_events():
    assert st.ExperimentConfig(0.22, 600).expected_events == pytest.approx(132.0)
    with pytest.raises(ValueError):
        st.ExperimentConfig(0.0, 600)


def test_zero_probability_outcome_never_counts():
    cfg = st.ExperimentConfig(seed=1)
    t = st.sample_counts({("Z",): [1.0, 0.0]}, cfg)
    assert t.counts[0, 1] == 0
    rng = np.random.default_rng(2)
    for _ in range(100):
        assert st.sample_counts({("Z",): [0.3, 0.7, 0.0]}, cfg, rng).counts[0, 2] == 0


def test_count_mean_matches_expectation():
    cfg = st.ExperimentConfig()
    rng = np.random.default_rng(3)
    probs = {("Z", "X"): [0.1, 0.2, 0.3, 0.4]}
    totals = np.array([st.sample_counts(probs, cfg, rng).counts[0] for _ in range(10_000)])
    mean = totals.mean(axis=0)
    expected = 132 * np.array([0.1, 0.2, 0.3, 0.4])
    sigma = np.sqrt(expected / 10_000)
    assert np.all(abs(mean - expected) < 3 * sigma)


def test_sampling_is_seeded():
    probs = {("X",): [0.5, 0.5]}
    a = st.sample_counts(probs, st.ExperimentConfig(seed=9))
    b = st.sample_counts(probs, st.ExperimentConfig(seed=9))
    assert np.array_equal(a.counts, b.counts)
    assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()


def test_sample_counts_validation():
    with pytest.raises(ValueError):
        st.sample_counts({("Z",): [0.5, 0.6]}, st.ExperimentConfig())


def test_infinite_statistics_estimate_is_exact():
    rng = np.random.default_rng(4)
    for n in (1, 2, 3):
        psi = hb.random_state((2,) * n, rng)
        plan = st.fidelity_plan(psi)
        probs = st.plan_probabilities(hb.DensityMatrix.from_state(psi), plan)
        assert st.fidelity_from_probabilities(probs, plan) == pytest.approx(1.0, abs=1e-12)
        # counts proportional to probabilities -> estimate 1, std 0 up to rounding
        table = st.CountTable(plan.settings, np.array([probs[s] for s in plan.settings]) * 1e12,
                              np.zeros((len(plan.settings), 2 ** n)), st.ExperimentConfig())
        est = st.fidelity_from_counts(table, psi, plan)
        assert est.value == pytest.approx(1.0, abs=1e-9)


def test_plan_matches_true_fidelity_for_mixed_states():
    rng = np.random.default_rng(5)
    for _ in range(10):
        psi = hb.random_state((2, 2), rng)
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        m = a @ a.conj().T
        rho = hb.DensityMatrix((2, 2), m / np.trace(m))
        plan = st.fidelity_plan(psi)
        f = st.fidelity_from_probabilities(st.plan_probabilities(rho, plan), plan)
        assert f == pytest.approx(hb.fidelity(rho, psi), abs=1e-12)


def test_minimal_plans_for_the_four_state_inputs():
    plans = {k: st.fidelity_plan(ph.ideal_4to2(c)).settings for k, c in ph.PHI_STATES.items()}
    assert plans["phi1"] == (("Z", "X"),)
    assert plans["phi3"] == (("X", "X"),)
    assert len(plans["phi4"]) == 3 and len(plans["phi5"]) == 3


def test_phi1_estimate_within_three_sigma_of_one():
    res = ph.run_optical_4to2(ph.PHI_STATES["phi1"], 1.0)
    target = ph.ideal_4to2(ph.PHI_STATES["phi1"])
    est = st.simulate_fidelity(res.rho, target, st.ExperimentConfig(seed=6))
    assert abs(est.value - 1.0) <= 3 * est.std_dev + 1e-12


def test_missing_setting_raises():
    psi = ph.ideal_4to2(ph.PHI_STATES["phi4"])
    table = st.sample_counts({("Z", "Z"): [0.5, 0, 0, 0.5]}, st.ExperimentConfig(seed=1))
    with pytest.raises(ValueError):
        st.fidelity_from_counts(table, psi)


def test_estimator_tracks_true_fidelity_across_noise():
    """Averaged estimates follow the model fidelity with unit slope."""
    rng = np.random.default_rng(7)
    c = ph.PHI_STATES["phi2"]
    target = ph.ideal_4to2(c)
    qs = np.linspace(0.2, 1.0, 5)
    truth, est = [], []
    for q in qs:
        rho = ph.run_optical_4to2(c, q).rho
        truth.append(hb.fidelity(rho, target))
        est.append(np.mean([st.simulate_fidelity(rho, target, st.ExperimentConfig(), rng).value
                            for _ in range(400)]))
    slope = np.polyfit(truth, est, 1)[0]
    assert abs(slope - 1) < 0.1


def test_tomography_exact_and_mixed():
    psi = hb.make_state((4,), ph.PHI_STATES["phi2"])
    sets = st.tomography_settings()
    assert sum(len(v) for v in sets.values()) == 36
    rho = st.tomography_from_probabilities(st.tomography_probabilities(psi, sets), sets)
    assert hb.fidelity(rho, psi) == pytest.approx(1.0, abs=1e-10)
    mixed = hb.DensityMatrix((4,), np.eye(4) / 4)
    rho = st.tomography_from_probabilities(st.tomography_probabilities(mixed, sets), sets)
    assert np.allclose(rho.mat, np.eye(4) / 4, atol=1e-10)


def test_tomography_mixed_within_statistical_error():
    sets = st.tomography_settings()
    probs = st.tomography_probabilities(hb.DensityMatrix((4,), np.eye(4) / 4), sets)
    rho = st.tomography_ququart(st.sample_counts(probs, st.ExperimentConfig(seed=3)), sets)
    assert np.abs(rho.mat - np.eye(4) / 4).max() < 0.1


def test_tomography_phi5_calibration():
    psi = hb.make_state((4,), ph.PHI_STATES["phi5"])
    sets = st.tomography_settings()
    probs = st.tomography_probabilities(psi, sets)
    rng = np.random.default_rng(8)
    fids = [hb.fidelity(st.tomography_ququart(st.sample_counts(probs, st.ExperimentConfig(), rng),
                                              sets), psi) for _ in range(500)]
    assert np.mean(np.array(fids) > 0.95) >= 0.95


def test_physical_projection_output_is_a_state():
    rng = np.random.default_rng(10)
    for _ in range(50):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        m = a + a.conj().T
        m = m / np.trace(m).real if abs(np.trace(m)) > 0.1 else m + np.eye(4)
        p = st.physical_projection(m)
        assert np.linalg.eigvalsh(p).min() > -1e-12
        assert np.trace(p).real == pytest.approx(1.0)


def test_classical_bound_examples():
    ests4 = [st.FidelityEstimate(*ph.REFERENCE_FIDELITIES[k]) for k in ph.PHI_STATES]
    rep = st.classical_bound_check(ests4)
    assert round(rep.mean, 4) == 0.7897 and round(rep.mean_std, 4) == 0.0109
    ests5 = [st.FidelityEstimate(*ph.REFERENCE_FIDELITIES[k]) for k in ph.PSI_STATES]
    rep = st.classical_bound_check(ests5)
    assert round(rep.mean, 4) == 0.8151 and round(rep.mean_std, 4) == 0.0074
    assert rep.all_above
    rep = st.classical_bound_check([st.FidelityEstimate(2 / 3, 0.01)])
    assert rep.margins == (0.0,) and not rep.all_above
    with pytest.raises(ValueError):
        st.classical_bound_check([])
