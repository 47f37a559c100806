import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from equiroute.Oracle import (
    NoiseConfig, feasible_set, inject_noise, margin, margin_stats, margins,
    mc_selection_frequencies, mc_standard_errors, oracle_select,
)
from equiroute.Synthetic import SynthConfig, generate_synthetic
from equiroute.Utils import NumericsError
from tests.tables import make_table


def one_row(a, c):
    return make_table([a], [c])


def test_feasible_set_examples():
    table = one_row([0.1, 0.2, 0.3], [1.0, 3.0, 2.0])
    assert feasible_set(table, 0, 2.5).members == (0, 2)
    assert not feasible_set(table, 0, 2.5).clamped
    assert feasible_set(table, 0, 10.0).members == (0, 1, 2)
    clamped = feasible_set(table, 0, 0.5)
    assert clamped.members == (0,) and clamped.clamped


def test_feasible_set_rejects_nonpositive_budget():
    with pytest.raises(ValueError):
        feasible_set(one_row([0.1, 0.2], [1.0, 2.0]), 0, 0.0)


def test_oracle_select_examples():
    assert oracle_select(one_row([0.5, 0.9, 0.9], [1.0, 3.0, 2.0]), 0, 10.0) == 2
    assert oracle_select(one_row([0.5, 0.9, 0.9], [1.0, 3.0, 3.0]), 0, 10.0) == 1
    assert oracle_select(one_row([0.5, 0.9, 0.9], [1.0, 3.0, 3.0]), 0, 1.5) == 0


def brute_force(a, c, C):
    feasible = [j for j in range(len(a)) if c[j] <= C]
    if not feasible:
        feasible = [min(range(len(a)), key=lambda j: (c[j], j))]
    return min(feasible, key=lambda j: (-a[j], c[j], j))


table_rows = st.integers(min_value=2, max_value=8).flatmap(lambda k: st.tuples(
    st.lists(st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]), min_size=k, max_size=k),
    st.lists(st.sampled_from([0.5, 1.0, 2.0, 3.0, 4.0]), min_size=k, max_size=k),
))


@given(table_rows, st.sampled_from([0.25, 0.5, 1.0, 1.5, 2.0, 3.5, 10.0]))
@settings(max_examples=1000, deadline=None)
def test_oracle_matches_exhaustive_lexicographic_search(row, C):
    a, c = row
    table = one_row(a, c)
    chosen = oracle_select(table, 0, C)
    assert chosen == brute_force(a, c, C)
    members = feasible_set(table, 0, C).members
    # optimal and frugal among feasible models
    assert all(a[chosen] >= a[j] for j in members)
    assert not any(a[j] == a[chosen] and c[j] < c[chosen] for j in members)


def test_margin_examples():
    assert margin(one_row([0.8, 0.8, 0.2], [1.0, 1.0, 1.0]), 0, 10.0) == 0.0
    assert margin(one_row([1.0, 0.3], [1.0, 1.0]), 0, 10.0) == pytest.approx(0.7)
    assert margin(one_row([1.0, 0.3], [1.0, 5.0]), 0, 2.0) is None


@given(table_rows, st.sampled_from([1.0, 2.0, 10.0]))
@settings(max_examples=200, deadline=None)
def test_margin_nonnegative_and_zero_iff_tied(row, C):
    a, c = row
    table = one_row(a, c)
    value = margin(table, 0, C)
    members = feasible_set(table, 0, C).members
    if len(members) < 2 or feasible_set(table, 0, C).clamped:
        return
    top = max(a[j] for j in members)
    assert value >= 0
    assert (value == 0) == (sum(a[j] == top for j in members) >= 2)
    assert margins(table, C)[0] == value


def test_margin_stats_counts():
    table = make_table([[0.5, 0.5], [0.3, 0.3], [1.0, 0.3]], np.ones((3, 2)))
    stats = margin_stats(table, 10.0, [0.0, 1.0])
    assert stats.tie_rate == pytest.approx(2 / 3)
    assert stats.cdf_at[0.0] == stats.tie_rate
    assert stats.cdf_at[1.0] == 1.0


def test_margin_stats_cdf_is_monotone():
    table = generate_synthetic(SynthConfig(n_queries=500, tie_fraction=0.5))
    stats = margin_stats(table, np.inf)
    values = [stats.cdf_at[t] for t in sorted(stats.cdf_at)]
    assert values == sorted(values)
    assert np.all(stats.margins >= 0)


def test_margin_stats_errors():
    with pytest.raises(NumericsError, match="no query has"):
        margin_stats(make_table([[1.0, 0.0]], [[1.0, 5.0]]), 2.0)
    with pytest.raises(ValueError):
        margin_stats(make_table([[1.0, 0.0]], [[1.0, 1.0]]), 2.0, [0.1, 0.0])


def test_small_perturbations_never_flip_the_oracle():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a = rng.uniform(size=5)
        c = rng.uniform(1.0, 2.0, size=5)
        table = one_row(a, c)
        delta = margin(table, 0, np.inf)
        noise = rng.uniform(-0.49, 0.49, size=5) * delta
        assert oracle_select(table.with_perf([a + noise]), 0, np.inf) == oracle_select(table, 0, np.inf)


def test_perturbation_above_margin_flips_the_oracle():
    a = np.array([0.9, 0.85, 0.1])
    table = one_row(a, [1.0, 1.0, 1.0])
    assert oracle_select(table, 0, np.inf) == 0
    bumped = a + np.array([0.0, margin(table, 0, np.inf) + 1e-3, 0.0])
    assert oracle_select(table.with_perf([bumped]), 0, np.inf) == 1


def test_zero_noise_is_identity():
    table = generate_synthetic(SynthConfig(n_queries=100))
    assert inject_noise(table, NoiseConfig(sigma=0.0, seed=1)).equals(table)


def test_noise_is_deterministic_and_leaves_costs():
    table = generate_synthetic(SynthConfig(n_queries=100))
    cfg = NoiseConfig(sigma=0.1, seed=5)
    noisy = inject_noise(table, cfg)
    assert noisy.equals(inject_noise(table, cfg))
    assert np.array_equal(noisy.cost, table.cost)
    assert np.array_equal(noisy.embeddings, table.embeddings)
    assert not np.array_equal(noisy.perf, table.perf)


def test_noise_is_unbiased():
    sigma = 0.1
    table = make_table(np.zeros((20000, 5)), np.ones((20000, 5)))
    added = inject_noise(table, NoiseConfig(sigma=sigma, seed=0)).perf
    assert abs(added.mean()) <= 3 * sigma / np.sqrt(added.size)


def test_negative_sigma_rejected():
    with pytest.raises(ValueError):
        NoiseConfig(sigma=-0.1)


def test_mc_dominant_mean_always_wins():
    freq = mc_selection_frequencies([1.0, 0.0, 0.0], 0.01, 100000, 0)
    assert freq[0] == pytest.approx(1.0)
    assert freq.sum() == pytest.approx(1.0)


def test_mc_symmetric_means_are_uniform():
    trials = 100000
    freq = mc_selection_frequencies([0.0, 0.0, 0.0], 1.0, trials, 0)
    stderr = mc_standard_errors(np.full(3, 1 / 3), trials)
    assert np.all(np.abs(freq - 1 / 3) <= 3 * stderr)


def test_mc_frequencies_follow_means():
    freq = mc_selection_frequencies([0.8, 0.79, 0.5], 0.1, 100000, 0)
    assert freq[0] > freq[1] > freq[2]


def test_mc_rejects_bad_input():
    with pytest.raises(ValueError):
        mc_selection_frequencies([], 0.1, 10, 0)
    with pytest.raises(ValueError):
        mc_selection_frequencies([0.1], 0.1, 0, 0)


@pytest.mark.slow
@pytest.mark.parametrize('sigma', [0.05, 0.1, 0.5])
def test_maximum_mean_wins_most_often(sigma):
    trials = 100000
    rng = np.random.default_rng(11)
    for seed in range(50):
        means = rng.uniform(size=5)
        freq = mc_selection_frequencies(means, sigma, trials, seed)
        stderr = mc_standard_errors(freq, trials)
        order = np.argsort(-means, kind='stable')
        for hi, lo in zip(order[:-1], order[1:]):
            assert freq[hi] - freq[lo] >= -3 * np.hypot(stderr[hi], stderr[lo])
