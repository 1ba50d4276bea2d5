import numpy as np
import pytest

from vclone import cloner
from vclone.cloner import QubitState, measurement_path_outcome
from vclone.sampler import (
    NoiseConfig,
    estimate_outcome,
    sample_counts,
    sampled_evaluator,
)


def test_degenerate_distribution():
    counts = sample_counts([1.0], 100, rng=0)
    assert counts.tolist() == [100]


def test_zero_probability_pattern_never_counted():
    rng = np.random.default_rng(1)
    for _ in range(20):
        counts = sample_counts([0.5, 0.0, 0.3], 1000, rng)
        assert counts[1] == 0


def test_counts_conservation():
    rng = np.random.default_rng(2)
    probs = [0.2, 0.1, 0.3]  # 0.4 rejected
    for _ in range(50):
        counts = sample_counts(probs, 500, rng)
        assert counts.sum() <= 500


def test_multinomial_statistics():
    probs = np.array([0.25, 0.25, 0.25, 0.25])
    n = 100_000
    totals = np.zeros(4)
    n_seeds = 100
    for seed in range(n_seeds):
        totals += sample_counts(probs, n, rng=seed)
    means = totals / n_seeds
    tol = 3 * np.sqrt(n * 0.25 * 0.75 / n_seeds)
    assert np.all(np.abs(means - n * probs) < tol)


def test_seed_determinism():
    a = sample_counts([0.3, 0.3, 0.2], 1000, rng=42)
    b = sample_counts([0.3, 0.3, 0.2], 1000, rng=42)
    assert np.array_equal(a, b)


def test_invalid_probability_vector_rejected():
    with pytest.raises(ValueError):
        sample_counts([0.7, 0.7], 100, rng=0)
    with pytest.raises(ValueError):
        sample_counts([-0.1, 0.5], 100, rng=0)


# ----------------------------------------------------------------- estimator

def test_all_counts_in_success_rails():
    est = estimate_outcome([60, 0, 0, 0], shots=100)
    assert est.f1 == 1.0 and est.f2 == 1.0
    assert est.p_post == pytest.approx(0.6)
    assert est.valid


def test_zero_coincidences_flagged_invalid():
    est = estimate_outcome([0, 0, 0, 0], shots=100)
    assert not est.valid
    assert est.f1 == est.f2 == est.p_post == 0.0


def test_estimator_fractions():
    est = estimate_outcome([10, 20, 30, 40], shots=200)
    assert est.f1 == pytest.approx(0.3)
    assert est.f2 == pytest.approx(0.4)
    assert est.p_post == pytest.approx(0.5)
    assert est.n_coincidences == 100
    assert est.f1_err == pytest.approx(np.sqrt(0.3 * 0.7 / 100))


def test_exact_mode_passthrough():
    rng = np.random.default_rng(3)
    params = rng.uniform(0, 2 * np.pi, 12)
    psi = QubitState.equatorial(1.0)
    evaluate = sampled_evaluator(NoiseConfig(shots=None))
    out = evaluate(params, psi)
    _, exact = cloner.run_cloner(params, psi)
    assert out.f1 == pytest.approx(exact.f1, abs=1e-10)
    assert out.f2 == pytest.approx(exact.f2, abs=1e-10)
    assert out.p_post == pytest.approx(exact.p_post, abs=1e-10)


def test_estimator_unbiased():
    # 200 seeded repetitions at N = 1e4 on a fixed circuit; the mean
    # estimate must sit within 3 standard errors of the exact value.
    rng = np.random.default_rng(4)
    params = rng.uniform(0, 2 * np.pi, 12)
    psi = QubitState.equatorial(0.7)
    exact = measurement_path_outcome(params, psi)
    reps = 200
    f1s, f2s = [], []
    for seed in range(reps):
        evaluate = sampled_evaluator(NoiseConfig(shots=10_000, seed=seed))
        out = evaluate(params, psi)
        f1s.append(out.f1)
        f2s.append(out.f2)
    for values, truth in ((f1s, exact.f1), (f2s, exact.f2)):
        mean = np.mean(values)
        sem = np.std(values, ddof=1) / np.sqrt(reps)
        assert abs(mean - truth) < 3 * sem + 1e-12


def test_large_n_consistency():
    # N = 1e6: estimates concentrate tightly around the exact fidelities.
    rng = np.random.default_rng(5)
    params = rng.uniform(0, 2 * np.pi, 12)
    psi = QubitState.equatorial(2.0)
    exact = measurement_path_outcome(params, psi)
    misses = 0
    trials = 50
    for seed in range(trials):
        evaluate = sampled_evaluator(NoiseConfig(shots=1_000_000, seed=seed))
        out = evaluate(params, psi)
        if abs(out.f1 - exact.f1) >= 0.005 or abs(out.f2 - exact.f2) >= 0.005:
            misses += 1
    assert misses == 0


def test_sampled_evaluator_deterministic_stream():
    rng = np.random.default_rng(6)
    params = rng.uniform(0, 2 * np.pi, 12)
    psi = QubitState.equatorial(0.2)

    def collect():
        evaluate = sampled_evaluator(NoiseConfig(shots=2000, seed=11))
        return [(evaluate(params, psi).f1, evaluate(params, psi).f2) for _ in range(3)]

    assert collect() == collect()


def test_noise_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(shots=0)
    NoiseConfig(shots=None)  # exact mode allowed
