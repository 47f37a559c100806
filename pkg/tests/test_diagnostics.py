import numpy as np
import pytest
from equiroute.BaseRouter import RouterHyper
from equiroute.Diagnostics import (cheapest_model, max_budget, mc_report, noise_sensitivity, strongest_model,
                                   training_set_eval)
from equiroute.Metrics import summarize
from equiroute.MlpRouter import MlpRouter
from equiroute.Oracle import oracle_select
from equiroute.OracleRouter import NoisyOracleRouter, OracleRouter
from equiroute.Synthetic import SynthConfig, generate_synthetic
from tests.tables import make_table

SIGMAS = [0.0, 0.05, 0.1, 0.2, 0.4]


def oracle_trainer(table, split):
    return OracleRouter()


def test_strongest_and_cheapest_follow_mean_cost():
    table = make_table(np.zeros((2, 3)), [[2.0, 1.0, 3.0], [2.0, 1.5, 4.0]])
    assert strongest_model(table) == 2
    assert cheapest_model(table) == 1
    assert max_budget(table) == 4.0


def test_zero_noise_reproduces_the_oracle():
    table = generate_synthetic(SynthConfig(n_queries=300, noise_seed=1))
    C = max_budget(table)
    row = noise_sensitivity(table, [0.0], C, seed=0)[0]
    chosen = np.array([oracle_select(table, n, C) for n in range(table.n_queries)])
    assert row.accuracy == pytest.approx(table.perf[np.arange(300), chosen].mean(), abs=1e-12)
    assert row.strongest_share == np.mean(chosen == strongest_model(table))
    assert row.cheapest_share == np.mean(chosen == cheapest_model(table))


def test_noise_sensitivity_is_deterministic():
    table = generate_synthetic(SynthConfig(n_queries=200, noise_seed=2))
    C = max_budget(table)
    assert noise_sensitivity(table, SIGMAS, C, seed=3) == noise_sensitivity(table, SIGMAS, C, seed=3)
    with pytest.raises(ValueError):
        noise_sensitivity(table, [-0.1], C, seed=3)


def test_noise_sensitivity_matches_noisy_oracle_decisions():
    table = generate_synthetic(SynthConfig(n_queries=200, noise_seed=4))
    C = max_budget(table)
    indices = np.arange(50, 150)
    rows = noise_sensitivity(table, [0.1, 0.4], C, seed=5, indices=indices)
    for row in rows:
        chosen = NoisyOracleRouter(row.sigma, 5).decide(table, indices, C, 'oracle')[0]
        assert row.accuracy == table.perf[indices, chosen].mean()
        assert row.strongest_share == np.mean(chosen == strongest_model(table, indices))


@pytest.mark.slow
def test_noise_pushes_calls_to_the_strongest_model():
    table = generate_synthetic(SynthConfig(n_queries=5000, n_models=6, tie_fraction=0.95))
    rows = noise_sensitivity(table, SIGMAS, max_budget(table), seed=0)
    for before, after in zip(rows, rows[1:]):
        assert after.accuracy <= before.accuracy + 0.02
        assert after.strongest_share >= before.strongest_share - 0.02
    assert rows[-1].strongest_share > rows[0].strongest_share


def test_training_set_eval_matches_a_full_sweep():
    table = generate_synthetic(SynthConfig(n_queries=200, noise_seed=3))
    report = training_set_eval(oracle_trainer, table, 20, 'oracle')
    curve, summary, _ = summarize(OracleRouter(), table, np.arange(200), 20, 'oracle')
    assert report.curve == curve
    assert report.summary == summary
    assert np.allclose(report.call_rates.sum(axis=1), 1.0)


def test_training_set_eval_memorizes_a_small_table():
    rng = np.random.default_rng(4)
    n, k = 20, 3
    perf = rng.uniform(0.0, 0.5, size=(n, k))
    perf[np.arange(n), rng.integers(0, k, size=n)] = 1.0
    table = make_table(perf, np.tile([1.0, 2.0, 3.0], (n, 1)), rng.standard_normal((n, 6)))
    hyper = RouterHyper(hidden=64, l2=0.0, lr=1e-2, epochs=800, batch_size=n)

    def trainer(table, split):
        return MlpRouter.train(table, split, hyper)[0]

    report = training_set_eval(trainer, table, 20, 'oracle')
    _, oracle, _ = summarize(OracleRouter(), table, np.arange(n), 20, 'oracle')
    assert report.summary.nauc >= oracle.nauc - 0.05
    again = training_set_eval(trainer, table, 20, 'oracle')
    assert again.summary == report.summary


def test_mc_report_frequencies_sum_to_one():
    table = make_table([[0.9, 0.1, 0.5], [0.7, 0.3, 0.5]], np.ones((2, 3)))
    freq, stderr = mc_report(table, 0.1, 20000, seed=0)
    assert freq.sum() == pytest.approx(1.0)
    assert freq[0] > freq[2] > freq[1]
    assert np.all(stderr >= 0.0)
