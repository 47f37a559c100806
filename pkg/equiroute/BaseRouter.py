import logging
from dataclasses import dataclass, field
import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from .NeuralNet import Adam, copy_params
from .Oracle import feasible_mask, select
from .Utils import ConfigError, NumericsError, make_rng

# Base class shared by every router. Subclasses provide score_queries(table, indices) returning an
# (len(indices), K) matrix of scores where larger is better; the budget rule lives here.
#   route: filter on predicted (or true) costs, clamp empty sets to the cheapest model,
#          then argmax score, ties -> lower cost -> lower index

COST_SOURCES = ('predicted', 'oracle')


class RouterHyper(BaseModel):
    model_config = ConfigDict(frozen=True)

    hidden: int = Field(default=128, gt=0)          # D, trunk width
    model_dim: int = Field(default=64, gt=0)        # d_m, model embedding size
    l2: float = Field(default=1e-4, ge=0.0)         # lambda
    lr: float = Field(default=1e-3, gt=0.0)
    epochs: int = Field(default=30, ge=0)
    batch_size: int = Field(default=2048, gt=0)
    seed: int = 0
    knn_k: int = Field(default=50, gt=0)
    cost_hidden: int = Field(default=128, gt=0)     # H, cost predictor width
    cost_epochs: int = Field(default=200, ge=0)     # full-batch epochs of the cost residual fit


@dataclass(frozen=True)
class RouterDecision:
    query_index: int
    budget: float
    chosen: int
    scores: np.ndarray
    predicted_costs: np.ndarray
    feasible_clamped: bool


@dataclass
class TrainingLog:
    rows: list = field(default_factory=list) # (epoch, train_loss, valid_loss)
    best_epoch: int = 0

    def add(self, epoch, train_loss, valid_loss):
        self.rows.append((epoch, train_loss, valid_loss))


class BaseRouter:
    kind = None

    def __init__(self, cost_predictor = None):
        self.cost_predictor = cost_predictor
        logging.debug(f"Init {self.__class__.__name__}")

    def score_queries(self, table, indices):
        raise NotImplementedError(f"{self.__class__.__name__} cannot be used directly")

    def decision_costs(self, table, indices, cost_source):
        if cost_source not in COST_SOURCES:
            raise ConfigError(f"unknown cost source '{cost_source}'")
        if cost_source == 'oracle':
            return table.cost[indices]
        if self.cost_predictor is None:
            raise ConfigError(f"{self.__class__.__name__} has no cost predictor for cost_source=predicted")
        return self.cost_predictor.predict(table.embeddings[indices])

    def decide(self, table, indices, budget, cost_source):
        indices = np.asarray(indices, dtype=np.int64)
        scores = self.score_queries(table, indices)
        costs = self.decision_costs(table, indices, cost_source)
        mask, clamped = feasible_mask(costs, budget)
        return select(scores, costs, mask), clamped, scores, costs


def route(router, table, n, C, cost_source = 'predicted'):
    chosen, clamped, scores, costs = router.decide(table, [n], C, cost_source)
    return RouterDecision(query_index=int(n), budget=float(C), chosen=int(chosen[0]), scores=scores[0], predicted_costs=costs[0], feasible_clamped=bool(clamped[0]))


def minibatches(indices, batch_size, seed, epoch):
    order = make_rng(seed, stream=epoch + 1).permutation(indices)
    size = min(batch_size, len(order)) # batch auto-reduced to N when N < batch_size
    return [order[i:i + size] for i in range(0, len(order), size)]


def train_loop(params, objective, evaluate, train_idx, valid_idx, hyper, name):
    """
    Minibatch Adam over train_idx with decoupled l2 decay. objective(params, batch) returns
    (loss, grads) and may return grads=None for a batch without supervision; evaluate(params, idx)
    returns the loss on a set of queries or None. Returns the parameters of the best-validation epoch
    (epoch 0 is the initialization) and the per-epoch log.
    """
    train_idx = np.asarray(train_idx, dtype=np.int64)
    valid_idx = np.asarray(valid_idx, dtype=np.int64)
    if train_idx.size == 0:
        raise NumericsError(f"{name}: empty training split")
    optimizer = Adam(lr=hyper.lr, weight_decay=hyper.l2)
    log = TrainingLog()

    def record(epoch):
        train_loss = evaluate(params, train_idx)
        valid_loss = evaluate(params, valid_idx) if valid_idx.size > 0 else None
        if train_loss is not None and not np.isfinite(train_loss):
            raise NumericsError(f"{name}: non-finite training loss at epoch {epoch}")
        log.add(epoch, train_loss, valid_loss)
        logging.info(f"{name} epoch {epoch}/{hyper.epochs} train_loss={train_loss} valid_loss={valid_loss}")
        return valid_loss if valid_loss is not None else train_loss

    if valid_idx.size == 0:
        logging.warning(f"{name}: empty validation split, selecting on training loss")

    best_loss = record(0)
    best = copy_params(params)
    for epoch in range(1, hyper.epochs + 1):
        for batch in minibatches(train_idx, hyper.batch_size, hyper.seed, epoch):
            loss, grads = objective(params, batch)
            if grads is None:
                continue
            if not np.isfinite(loss):
                raise NumericsError(f"{name}: non-finite batch loss at epoch {epoch}")
            optimizer.step(params, grads)
        current = record(epoch)
        if current is not None and (best_loss is None or current < best_loss):
            best_loss = current
            best = copy_params(params)
            log.best_epoch = epoch

    logging.info(f"{name}: best epoch {log.best_epoch} with selection loss {best_loss}")
    return best, log
