import logging
import numpy as np
from .BaseRouter import BaseRouter, RouterHyper, train_loop
from .Checkpoint import load_checkpoint, save_checkpoint
from .NeuralNet import build_stack, init_stack, stack_grads
from .Utils import make_rng

# Two-layer regression MLP d_q -> H -> K with relu hidden, fit by MSE. The MLP baseline regresses
# the performance row and routes on it; the cost predictor reuses the same fit on standardized costs.

ACTIVATIONS = ['relu', 'identity']


def init_regressor(hyper, prefix, d_q, hidden, n_out):
    return init_stack(make_rng(hyper.seed), prefix, [d_q, hidden, n_out], ACTIVATIONS)


def predict_regressor(arrays, prefix, X):
    return build_stack(arrays, prefix, ACTIVATIONS).forward(np.atleast_2d(X))


def fit_regressor(arrays, prefix, X, Y, split, hyper, name):
    """Minibatch MSE fit of Y (N x K) from X (N x d_q) over split.train, selected on split.valid."""

    def batch_objective(current, batch):
        stack = build_stack(current, prefix, ACTIVATIONS)
        out, inputs = stack.forward_cached(X[batch])
        residual = out - Y[batch]
        _, grads = stack.backward(inputs, 2.0 * residual / residual.size)
        return float(np.mean(residual ** 2)), stack_grads(prefix, grads)

    def evaluate(current, idx):
        if len(idx) == 0:
            return None
        return float(np.mean((predict_regressor(current, prefix, X[idx]) - Y[idx]) ** 2))

    return train_loop(arrays, batch_objective, evaluate, split.train, split.valid, hyper, name)


class MlpRouter(BaseRouter):
    kind = 'mlp'
    prefix = 'mlp'

    def __init__(self, hyper, arrays, d_q, n_models, cost_predictor = None):
        super().__init__(cost_predictor)
        self.hyper = hyper
        self.arrays = arrays
        self.d_q = d_q
        self.n_models = n_models

    @classmethod
    def train(cls, table, split, hyper):
        logging.info(f"Training mlp baseline: N_train={len(split.train)} K={table.n_models} H={hyper.hidden}")
        arrays = init_regressor(hyper, cls.prefix, table.embed_dim, hyper.hidden, table.n_models)
        best, log = fit_regressor(arrays, cls.prefix, table.embeddings, table.perf, split, hyper, cls.kind)
        return cls(hyper, best, table.embed_dim, table.n_models), log

    def score_queries(self, table, indices):
        return predict_regressor(self.arrays, self.prefix, table.embeddings[indices])

    def save(self, path):
        header = {'hyper': self.hyper.model_dump(), 'd_q': self.d_q, 'n_models': self.n_models}
        save_checkpoint(path, self.kind, header, self.arrays)

    @classmethod
    def load(cls, path):
        kind, header, arrays = load_checkpoint(path)
        if kind != cls.kind:
            raise ValueError(f"{path} holds a '{kind}' checkpoint, not an mlp router")
        return cls(RouterHyper(**header['hyper']), arrays, header['d_q'], header['n_models'])
