import numpy as np
import pytest
from scipy.integrate import quad

from tdm.oracle.montecarlo import (
    EnsembleSample,
    InsufficientSamplesError,
    empirical_cumulants,
    mc_grid,
    partition_cumulant,
    power_traces,
    sample_ensemble,
    sample_spectrum,
    set_partitions,
)
from tdm.oracle.quadrature import mp_density

A_EDGE, B_EDGE = 3 - 2 * 2**0.5, 3 + 2 * 2**0.5


@pytest.fixture(scope="module")
def beta2_small():
    return sample_ensemble(100, 2, 2000, seed=11)


def test_same_seed_same_eigenvalues():
    x = sample_spectrum(50, 1, seed=3, stream=4)
    y = sample_spectrum(50, 1, seed=3, stream=4)
    z = sample_spectrum(50, 1, seed=3, stream=5)
    assert np.array_equal(x.eigenvalues, y.eigenvalues)
    assert not np.array_equal(x.eigenvalues, z.eigenvalues)


def test_thread_count_does_not_change_results():
    one = sample_ensemble(30, 4, 40, seed=5, threads=1)
    four = sample_ensemble(30, 4, 40, seed=5, threads=4)
    assert all(np.array_equal(a.eigenvalues, b.eigenvalues) for a, b in zip(one, four))


def test_sampler_validation():
    with pytest.raises(ValueError):
        sample_spectrum(10, 3, seed=0)
    with pytest.raises(ValueError):
        sample_spectrum(1, 2, seed=0)
    with pytest.raises(ValueError):
        EnsembleSample(2, 2, 0, 0, np.array([1.0, -1.0]))


def test_histogram_matches_density():
    lam = np.concatenate([s.eigenvalues for s in sample_ensemble(400, 2, 20, seed=7)])
    edges = np.linspace(A_EDGE + 0.1, B_EDGE - 0.1, 41)
    hist, _ = np.histogram(lam, bins=edges)
    hist = hist / lam.size / np.diff(edges)
    avg = np.array([quad(lambda t: float(mp_density(t)), lo, hi)[0] / (hi - lo) for lo, hi in zip(edges[:-1], edges[1:])])
    assert np.max(np.abs(hist - avg)) < 0.02


def test_mean_T1(beta2_small):
    est, se = empirical_cumulants(beta2_small, (1,))
    assert abs(est - 1) < 5 * se


def test_constant_statistic_cumulants():
    data = np.ones((200, 1))
    assert partition_cumulant(data) == 1.0
    assert partition_cumulant(np.ones((200, 2))) == 0.0


def test_partition_cumulant_matches_covariance():
    rng = np.random.default_rng(0)
    data = rng.normal(size=(500, 2))
    expect = np.mean(data[:, 0] * data[:, 1]) - data[:, 0].mean() * data[:, 1].mean()
    assert partition_cumulant(data) == pytest.approx(expect)


def test_set_partitions_bell_numbers():
    assert [sum(1 for _ in set_partitions(range(n))) for n in range(6)] == [1, 1, 2, 5, 15, 52]


def test_power_traces_definition():
    s = EnsembleSample(2, 2, 0, 0, np.array([0.5, 2.0]))
    t = power_traces([s], (1, 2))
    assert t[0].tolist() == [(2 + 0.5) / 2, (4 + 0.25) / 2]


def test_insufficient_samples():
    few = sample_ensemble(10, 2, 10, seed=1)
    with pytest.raises(InsufficientSamplesError):
        empirical_cumulants(few, (1,))


def test_cumulant_order_limits(beta2_small):
    with pytest.raises(ValueError):
        empirical_cumulants(beta2_small, (1, 1, 1, 1))
    with pytest.raises(ValueError):
        empirical_cumulants(beta2_small, (1, 1), v=3)


def test_bootstrap_is_deterministic(beta2_small):
    assert empirical_cumulants(beta2_small, (1, 1)) == empirical_cumulants(beta2_small, (1, 1))


def test_mc_grid():
    assert mc_grid(2, 2) == [(1, 1), (1, 2), (2, 2)]


def test_beta_scaling_across_ensembles():
    est = {}
    for beta in (1, 2, 4):
        est[beta] = empirical_cumulants(sample_ensemble(100, beta, 3000, seed=21), (1, 1))
    scaled = {beta: beta * e for beta, (e, _) in est.items()}
    # beta * N^2 C_2(T_1, T_1) is beta-independent at leading order (= 4)
    for beta, (e, se) in est.items():
        assert abs(scaled[beta] - 4) < 5 * beta * se + 0.1 * 4
