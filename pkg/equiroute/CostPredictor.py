import logging
import numpy as np
from .BaseRouter import RouterHyper
from .Checkpoint import load_checkpoint, save_checkpoint
from .MlpRouter import fit_regressor, init_regressor, predict_regressor

# Shared per-query cost predictor on costs standardized with the training split's per-model mean
# and std. A least-squares linear map of the embedding carries the bulk of the fit; a two-layer
# MLP with a zero-initialized output layer regresses what the linear map leaves, trained full batch
# for cost_epochs. Predictions are mapped back to cost units and kept strictly positive.

MIN_COST = np.finfo(np.float64).tiny
LINEAR_WEIGHT = 'linear.weight'
LINEAR_BIAS = 'linear.bias'


def fit_linear(X, Y):
    design = np.column_stack([X, np.ones(len(X))])
    coef, _, _, _ = np.linalg.lstsq(design, Y, rcond=None)
    return coef[:-1].T.copy(), coef[-1].copy()


class CostPredictor:
    kind = 'cost'
    prefix = 'cost'

    def __init__(self, hyper, arrays, linear_weight, linear_bias, mean, std, d_q):
        self.hyper = hyper
        self.arrays = arrays
        self.linear_weight = np.asarray(linear_weight, dtype=np.float64)
        self.linear_bias = np.asarray(linear_bias, dtype=np.float64)
        self.mean = np.asarray(mean, dtype=np.float64)
        self.std = np.asarray(std, dtype=np.float64)
        self.d_q = d_q

    @property
    def n_models(self):
        return self.mean.size

    @classmethod
    def train(cls, table, split, hyper):
        train = split.part('train')
        if train.size == 0:
            raise ValueError("cost predictor needs at least one training query")
        train_costs = table.cost[train]
        mean = train_costs.mean(axis=0)
        std = train_costs.std(axis=0)
        degenerate = ~(std > 0)
        if degenerate.any():
            logging.warning(f"cost predictor: constant training costs for models {np.flatnonzero(degenerate).tolist()}, std clamped to 1")
            std = np.where(degenerate, 1.0, std)

        targets = (table.cost - mean) / std
        weight, bias = fit_linear(table.embeddings[train], targets[train])
        residual = targets - (table.embeddings @ weight.T + bias)
        logging.info(f"Training cost predictor: N_train={train.size} K={table.n_models} H={hyper.cost_hidden} linear train mse={float(np.mean(residual[train] ** 2))}")

        arrays = init_regressor(hyper, cls.prefix, table.embed_dim, hyper.cost_hidden, table.n_models)
        arrays[f"{cls.prefix}.1.weight"][:] = 0.0 # starts as the pure linear fit
        schedule = hyper.model_copy(update={'epochs': hyper.cost_epochs, 'batch_size': train.size})
        best, log = fit_regressor(arrays, cls.prefix, table.embeddings, residual, split, schedule, cls.kind)
        return cls(hyper, best, weight, bias, mean, std, table.embed_dim), log

    def predict_standardized(self, X):
        X = np.atleast_2d(X)
        return X @ self.linear_weight.T + self.linear_bias + predict_regressor(self.arrays, self.prefix, X)

    def predict(self, X):
        if len(X) == 0:
            return np.zeros((0, self.n_models))
        return np.maximum(self.predict_standardized(X) * self.std + self.mean, MIN_COST)

    def save(self, path):
        header = {'hyper': self.hyper.model_dump(), 'd_q': self.d_q, 'mean': self.mean.tolist(), 'std': self.std.tolist()}
        save_checkpoint(path, self.kind, header, {**self.arrays, LINEAR_WEIGHT: self.linear_weight, LINEAR_BIAS: self.linear_bias})

    @classmethod
    def load(cls, path):
        kind, header, arrays = load_checkpoint(path)
        if kind != cls.kind:
            raise ValueError(f"{path} holds a '{kind}' checkpoint, not a cost predictor")
        weight, bias = arrays.pop(LINEAR_WEIGHT), arrays.pop(LINEAR_BIAS)
        return cls(RouterHyper(**header['hyper']), arrays, weight, bias, header['mean'], header['std'], header['d_q'])
