import logging
import numpy as np
from .BaseRouter import BaseRouter
from .Checkpoint import load_checkpoint, save_checkpoint

# k-nearest-neighbour baseline: estimated performance is the mean perf row of the k training
# queries closest in Euclidean distance. Distance ties keep training order. The checkpoint stores
# the training indices and split seed, the vectors themselves come from the table at load time.

CHUNK_ELEMENTS = 1 << 24


class KnnRouter(BaseRouter):
    kind = 'knn'

    def __init__(self, table, train_indices, k = 50, split_seed = None, cost_predictor = None):
        super().__init__(cost_predictor)
        self.train_indices = np.asarray(train_indices, dtype=np.int64)
        if self.train_indices.size == 0:
            raise ValueError("knn router needs at least one training query")
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if k > self.train_indices.size:
            logging.warning(f"knn: k={k} exceeds {self.train_indices.size} training queries, using all of them")
        self.k = min(int(k), self.train_indices.size)
        self.split_seed = split_seed
        self.train_embeddings = table.embeddings[self.train_indices]
        self.train_perf = table.perf[self.train_indices]

    @classmethod
    def train(cls, table, split, hyper):
        logging.info(f"Fitting knn baseline: N_train={len(split.train)} k={hyper.knn_k}")
        return cls(table, split.train, hyper.knn_k, split.seed), None

    def neighbours(self, X):
        X = np.atleast_2d(X)
        rows = max(1, CHUNK_ELEMENTS // (self.train_embeddings.size or 1))
        out = []
        for i in range(0, len(X), rows):
            diff = X[i:i + rows, None, :] - self.train_embeddings[None, :, :]
            dist = np.einsum('bnd,bnd->bn', diff, diff)
            out.append(np.argsort(dist, axis=1, kind='stable')[:, :self.k])
        return np.concatenate(out, axis=0) if out else np.zeros((0, self.k), dtype=np.int64)

    def estimate(self, X):
        return self.train_perf[self.neighbours(X)].mean(axis=1)

    def score_queries(self, table, indices):
        return self.estimate(table.embeddings[indices])

    def save(self, path):
        header = {'k': self.k, 'split_seed': self.split_seed, 'train_indices': self.train_indices.tolist()}
        save_checkpoint(path, self.kind, header, {})

    @classmethod
    def load(cls, path, table):
        kind, header, _ = load_checkpoint(path)
        if kind != cls.kind:
            raise ValueError(f"{path} holds a '{kind}' checkpoint, not a knn router")
        return cls(table, header['train_indices'], header['k'], header['split_seed'])
