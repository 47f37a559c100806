import logging
from dataclasses import dataclass
import numpy as np
from .Metrics import budget_grid, call_rate_curve, summarize
from .Oracle import mc_selection_frequencies, mc_standard_errors
from .OracleRouter import NoisyOracleRouter
from .RoutingTable import SplitIndices

# Collapse diagnostics: in-sample evaluation, the noisy-oracle experiment and the
# Monte Carlo check that the largest mean wins a noisy argmax most often.


@dataclass(frozen=True)
class NoiseRow:
    sigma: float
    accuracy: float
    strongest_share: float
    cheapest_share: float


@dataclass(frozen=True)
class TrainsetReport:
    curve: object
    summary: object
    collapse: object
    call_rates: np.ndarray
    strongest: int
    cheapest: int


def strongest_model(table, indices = None):
    # the most expensive model on average stands in for the strongest one
    indices = np.arange(table.n_queries) if indices is None else np.asarray(indices)
    return int(np.argmax(table.cost[indices].mean(axis=0)))


def cheapest_model(table, indices = None):
    indices = np.arange(table.n_queries) if indices is None else np.asarray(indices)
    return int(np.argmin(table.cost[indices].mean(axis=0)))


def training_set_eval(trainer, table, n_points = 100, cost_source = 'predicted', workers = 1, seed = 0):
    """
    Train on every query and evaluate on the same queries. `trainer(table, split)` returns a
    ready router; the metric bundle equals summarize() over the full index range.
    """
    split = SplitIndices.full(table.n_queries, seed)
    logging.info(f"Training-set evaluation on all {table.n_queries} queries")
    router = trainer(table, split)
    curve, summary, collapse = summarize(router, table, split.train, n_points, cost_source, workers)
    rates = call_rate_curve(curve)
    strongest, cheapest = strongest_model(table), cheapest_model(table)
    logging.info(f"Training-set {router.kind}: strongest share at max budget {rates[-1, strongest]:.4f}, cheapest {rates[-1, cheapest]:.4f}")
    return TrainsetReport(curve=curve, summary=summary, collapse=collapse, call_rates=rates, strongest=strongest, cheapest=cheapest)


def noise_sensitivity(table, sigmas, C, seed, indices = None):
    """
    Noisy-oracle routing at budget C for each sigma: argmax of perf + sigma * eps among feasible
    models, cost ties broken on true costs. One eps draw is shared by every sigma.
    """
    indices = np.arange(table.n_queries) if indices is None else np.asarray(indices, dtype=np.int64)
    perf = table.perf[indices]
    rows = np.arange(indices.size)
    strongest, cheapest = strongest_model(table, indices), cheapest_model(table, indices)

    out = []
    for sigma in sigmas:
        chosen = NoisyOracleRouter(sigma, seed).decide(table, indices, C, 'oracle')[0]
        row = NoiseRow(
            sigma=float(sigma),
            accuracy=float(np.mean(perf[rows, chosen])),
            strongest_share=float(np.mean(chosen == strongest)),
            cheapest_share=float(np.mean(chosen == cheapest)),
        )
        logging.info(f"noise sigma={row.sigma}: accuracy={row.accuracy:.4f} strongest={row.strongest_share:.4f} cheapest={row.cheapest_share:.4f}")
        out.append(row)
    return out


def mc_report(table, sigma, trials, seed, indices = None):
    # selection frequencies of a noisy argmax over the pool-mean performance vector
    indices = np.arange(table.n_queries) if indices is None else np.asarray(indices, dtype=np.int64)
    means = table.perf[indices].mean(axis=0)
    freq = mc_selection_frequencies(means, sigma, trials, seed)
    return freq, mc_standard_errors(freq, trials)


def max_budget(table, indices = None):
    indices = np.arange(table.n_queries) if indices is None else np.asarray(indices, dtype=np.int64)
    return float(budget_grid(table, indices, 2)[-1])
