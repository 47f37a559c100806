import logging
import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from .RoutingTable import ModelInfo, RoutingTable
from .Utils import make_rng

# Synthetic routing tables with a controllable share of exact top ties.
#
# Every query belongs to a capability band b in 0..K-1 and carries a latent difficulty u inside
# that band, centred on (b + 0.5) / K and spread over band_width of the band. Model j can solve
# the query when j >= b; the cheapest capable model is the query's natural answer. Below
# band_width = 1 neighbouring bands leave a gap in u. A tied query scores 1.0 on every capable
# model (at least two of them), a non-tied query scores 1.0 on the cheapest capable model only and
# leaves stronger models slightly below by a margin drawn around margin_scale. Models below the
# capability line score 0.0.
#
# Costs are unit_price_j * tokens_n with unit prices on a geometric grid from 1 to cost_spread,
# so every row is strictly increasing in the model index and the ratio of mean costs between the
# most and least expensive model is exactly cost_spread. Difficulty and token count are planted
# in the embedding through a random rotation, so both are linear functions of the embedding.

BASE_UNIT_PRICE = 1e-6
MIN_TOKENS = 100.0
MAX_TOKENS = 1000.0


class SynthConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_queries: int = Field(default=2000, gt=0)
    n_models: int = Field(default=6, ge=2)
    embed_dim: int = Field(default=16, gt=0)
    tie_fraction: float = Field(default=0.949, ge=0.0, le=1.0)
    margin_scale: float = Field(default=0.1, gt=0.0)
    band_width: float = Field(default=0.5, gt=0.0, le=1.0)
    cost_spread: float = Field(default=100.0, gt=1.0)
    noise_seed: int = 0


def unit_prices(cfg):
    exponents = np.arange(cfg.n_models) / (cfg.n_models - 1)
    return BASE_UNIT_PRICE * cfg.cost_spread ** exponents


def _rotation(rng, dim):
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r)) # sign fix keeps the factorization unique


def generate_synthetic(cfg):
    n, k, d = cfg.n_queries, cfg.n_models, cfg.embed_dim
    rng = make_rng(cfg.noise_seed)

    band = rng.integers(0, k, size=n)
    difficulty = (band + 0.5 + cfg.band_width * (rng.uniform(0.0, 1.0, size=n) - 0.5)) / k
    tokens = rng.uniform(MIN_TOKENS, MAX_TOKENS, size=n)
    tied = rng.uniform(0.0, 1.0, size=n) < cfg.tie_fraction
    near_miss = 1.0 - cfg.margin_scale * (0.5 + rng.uniform(0.0, 1.0, size=(n, k)))

    capable_from = band
    tie_from = np.minimum(capable_from, k - 2)

    index = np.arange(k)[None, :]
    perf = np.zeros((n, k))
    tied_rows = tied[:, None] & (index >= tie_from[:, None])
    perf[tied_rows] = 1.0
    single = ~tied
    perf[single[:, None] & (index == capable_from[:, None])] = 1.0
    above = single[:, None] & (index > capable_from[:, None])
    perf[above] = near_miss[above]

    prices = unit_prices(cfg)
    cost = tokens[:, None] * prices[None, :]

    latent = np.column_stack([
        2.0 * difficulty - 1.0,
        (tokens - (MIN_TOKENS + MAX_TOKENS) / 2) / ((MAX_TOKENS - MIN_TOKENS) / 2),
        rng.standard_normal((n, max(d - 2, 0))),
    ])[:, :d]
    embeddings = latent @ _rotation(rng, d).T

    models = [ModelInfo(model_id=j, name=f"model-{j}", unit_price=float(prices[j])) for j in range(k)]
    query_ids = [f"q{i:06d}" for i in range(n)]
    logging.info(f"Generated synthetic table: N={n} K={k} d_q={d} planted ties={int(tied.sum())}")
    return RoutingTable(models=models, query_ids=query_ids, embeddings=embeddings, perf=perf, cost=cost)
