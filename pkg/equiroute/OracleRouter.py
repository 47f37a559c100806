from .BaseRouter import BaseRouter
from .Oracle import noise_draws

# Routers that read the ground-truth performance table. With oracle costs OracleRouter reproduces
# oracle_select exactly; NoisyOracleRouter scores a + σ·ε with one fixed ε per (query, model).


class OracleRouter(BaseRouter):
    kind = 'oracle'

    def score_queries(self, table, indices):
        return table.perf[indices]


class NoisyOracleRouter(BaseRouter):
    kind = 'noisy_oracle'

    def __init__(self, sigma, seed, cost_predictor = None):
        super().__init__(cost_predictor)
        if sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {sigma}")
        self.sigma = float(sigma)
        self.seed = seed
        self._noise = None

    def score_queries(self, table, indices):
        if self._noise is None or self._noise.shape != table.perf.shape:
            self._noise = noise_draws(table.perf.shape, self.seed)
        return table.perf[indices] + self.sigma * self._noise[indices]
