import logging
from dataclasses import dataclass
import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from .Utils import NumericsError, gaussian, make_rng

# Ground-truth routing rule over a RoutingTable and the diagnostics built on it.
# Every argmax/argmin tie resolves to the lowest model index.

DEFAULT_MARGIN_THRESHOLDS = (0.0, 1e-3, 1e-2, 5e-2)


@dataclass(frozen=True)
class FeasibleSet:
    query_index: int
    budget: float
    members: tuple
    clamped: bool


@dataclass(frozen=True)
class MarginStats:
    margins: np.ndarray
    tie_rate: float
    cdf_at: dict


class NoiseConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    sigma: float = Field(default=0.0, ge=0.0)
    seed: int = 0


def feasible_mask(costs, budget):
    # rows of `costs` that fit nothing keep only their cheapest model
    costs = np.atleast_2d(costs)
    mask = costs <= budget
    empty = ~mask.any(axis=1)
    if empty.any():
        mask[empty, np.argmin(costs[empty], axis=1)] = True
    return mask, empty


def select(scores, costs, mask):
    # lexicographic (-score, cost, index) among the masked entries of every row
    scores = np.where(mask, scores, -np.inf)
    best = mask & (scores == scores.max(axis=1, keepdims=True))
    masked_cost = np.where(best, costs, np.inf)
    cheapest = best & (masked_cost == masked_cost.min(axis=1, keepdims=True))
    return np.argmax(cheapest, axis=1)


def feasible_set(table, n, C):
    if C <= 0:
        raise ValueError(f"budget must be positive, got {C}")
    mask, empty = feasible_mask(table.cost[n], C)
    if empty[0]:
        logging.debug(f"feasible set of query {n} empty at C={C}, clamped to cheapest model")
    return FeasibleSet(query_index=int(n), budget=float(C), members=tuple(int(j) for j in np.flatnonzero(mask[0])), clamped=bool(empty[0]))


def oracle_select(table, n, C):
    mask, _ = feasible_mask(table.cost[n], C)
    return int(select(table.perf[n][None, :], table.cost[n][None, :], mask)[0])


def margin(table, n, C):
    members = feasible_set(table, n, C).members
    if len(members) < 2:
        return None
    top = np.sort(table.perf[n, list(members)])[::-1]
    return float(top[0] - top[1])


def margins(table, C):
    # vectorized margin over all queries, NaN where fewer than two models are feasible
    mask = table.cost <= C
    values = np.where(mask, table.perf, -np.inf)
    top = -np.sort(-values, axis=1)
    with np.errstate(invalid="ignore"):
        out = top[:, 0] - top[:, 1]
    return np.where(mask.sum(axis=1) >= 2, out, np.nan)


def margin_stats(table, C, thresholds = DEFAULT_MARGIN_THRESHOLDS):
    thresholds = [float(t) for t in thresholds]
    if thresholds != sorted(thresholds):
        raise ValueError("margin thresholds must be sorted ascending")
    values = margins(table, C)
    defined = values[~np.isnan(values)]
    if defined.size == 0:
        raise NumericsError("no query has ≥2 feasible models")
    cdf_at = {eps: float(np.mean(defined <= eps)) for eps in thresholds}
    tie_rate = float(np.mean(defined == 0.0))
    logging.info(f"Margin stats at C={C}: {defined.size} queries, tie rate {tie_rate:.4f}")
    return MarginStats(margins=defined, tie_rate=tie_rate, cdf_at=cdf_at)


def noise_draws(shape, seed):
    return gaussian(seed, shape)


def inject_noise(table, cfg):
    # one standard-normal draw per (query, model) scaled by sigma, so sweeps over sigma share draws
    noise = cfg.sigma * noise_draws(table.perf.shape, cfg.seed)
    return table.with_perf(table.perf + noise)


def mc_selection_frequencies(a, sigma, trials, seed):
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        raise ValueError("mc_selection_frequencies needs at least one model")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    rng = make_rng(seed)
    counts = np.zeros(a.size, dtype=np.int64)
    chunk = 20000
    done = 0
    while done < trials:
        size = min(chunk, trials - done)
        noisy = a[None, :] + sigma * rng.standard_normal((size, a.size))
        counts += np.bincount(np.argmax(noisy, axis=1), minlength=a.size)
        done += size
    return counts / trials


def mc_standard_errors(frequencies, trials):
    frequencies = np.asarray(frequencies, dtype=np.float64)
    return np.sqrt(frequencies * (1.0 - frequencies) / trials)
