import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field
import numpy as np
from .Utils import ConfigError, TableError, make_rng, format_float

# Offline routing table: per-query embeddings plus performance and cost matrices over a model pool.
# Directory layout:
#   models.json   [{"id": 0, "name": "...", "unit_price": 0.1}, ...]
#   queries.jsonl {"query_id": "...", "embedding": [...]} per line
#   perf.csv      N rows x K columns, no header
#   cost.csv      N rows x K columns, no header
#   split.json    {"seed": 42, "train": [...], "valid": [...], "test": [...]}

MODELS_FILE = 'models.json'
QUERIES_FILE = 'queries.jsonl'
PERF_FILE = 'perf.csv'
COST_FILE = 'cost.csv'
SPLIT_FILE = 'split.json'

DEFAULT_RATIO = (3.0, 1.0, 6.0)
DEFAULT_SPLIT_SEED = 42


@dataclass(frozen=True)
class ModelInfo:
    model_id: int
    name: str
    unit_price: float = 0.0


@dataclass(frozen=True, eq=False)
class RoutingTable:
    models: tuple
    query_ids: tuple
    embeddings: np.ndarray
    perf: np.ndarray
    cost: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'models', tuple(self.models))
        object.__setattr__(self, 'query_ids', tuple(str(q) for q in self.query_ids))
        for name in ('embeddings', 'perf', 'cost'):
            array = np.array(getattr(self, name), dtype=np.float64)
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        validate_table(self)

    @property
    def n_queries(self):
        return self.perf.shape[0]

    @property
    def n_models(self):
        return len(self.models)

    @property
    def embed_dim(self):
        return self.embeddings.shape[1]

    def with_perf(self, perf):
        return RoutingTable(models=self.models, query_ids=self.query_ids, embeddings=self.embeddings, perf=perf, cost=self.cost)

    def equals(self, other):
        return (self.models == other.models and self.query_ids == other.query_ids and
                np.array_equal(self.embeddings, other.embeddings) and
                np.array_equal(self.perf, other.perf) and
                np.array_equal(self.cost, other.cost))


def _first_bad(mask):
    n, j = np.argwhere(mask)[0]
    return int(n), int(j)


def validate_table(table):
    k = len(table.models)
    if k < 2:
        raise TableError(f"model pool needs at least 2 models, got {k}")
    for j, model in enumerate(table.models):
        if model.model_id != j:
            raise TableError(f"model ids must be contiguous 0..K-1, found id {model.model_id} at position {j}")
        if model.unit_price < 0 or not math.isfinite(model.unit_price):
            raise TableError(f"invalid unit price for model {j}: {model.unit_price}")
    names = [m.name for m in table.models]
    if len(set(names)) != len(names):
        raise TableError("model names must be unique")

    if table.embeddings.ndim != 2 or table.embeddings.shape[1] < 1:
        raise TableError(f"embeddings must be an N x d_q matrix, got shape {table.embeddings.shape}")
    n = table.embeddings.shape[0]
    if n < 1:
        raise TableError("table has no queries")
    if len(table.query_ids) != n:
        raise TableError(f"dimension mismatch: {len(table.query_ids)} query ids for {n} embeddings")
    for name in ('perf', 'cost'):
        matrix = getattr(table, name)
        if matrix.ndim != 2 or matrix.shape != (n, k):
            raise TableError(f"dimension mismatch: {name} has shape {matrix.shape}, expected ({n},{k})")

    if not np.all(np.isfinite(table.embeddings)):
        row, col = _first_bad(~np.isfinite(table.embeddings))
        raise TableError(f"non-finite embedding value at ({row},{col})")
    if not np.all(np.isfinite(table.perf)):
        row, col = _first_bad(~np.isfinite(table.perf))
        raise TableError(f"non-finite perf at ({row},{col})")
    if not np.all(np.isfinite(table.cost)):
        row, col = _first_bad(~np.isfinite(table.cost))
        raise TableError(f"non-finite cost at ({row},{col})")
    if np.any(table.cost <= 0):
        row, col = _first_bad(table.cost <= 0)
        raise TableError(f"nonpositive cost at ({row},{col})")


def _read_matrix(path, name):
    if not os.path.isfile(path):
        raise TableError(f"missing file {path}")
    rows = []
    with open(path, newline='') as handle:
        for n, row in enumerate(csv.reader(handle)):
            if len(row) == 0:
                continue
            values = []
            for j, cell in enumerate(row):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise TableError(f"unparsable {name} value '{cell}' at ({n},{j})")
            if rows and len(values) != len(rows[0]):
                raise TableError(f"dimension mismatch: {name} row {n} has {len(values)} columns, expected {len(rows[0])}")
            rows.append(values)
    return np.array(rows, dtype=np.float64).reshape(len(rows), len(rows[0]) if rows else 0)


def load_table(path):
    models_path = os.path.join(path, MODELS_FILE)
    queries_path = os.path.join(path, QUERIES_FILE)
    if not os.path.isfile(models_path):
        raise TableError(f"missing file {models_path}")
    if not os.path.isfile(queries_path):
        raise TableError(f"missing file {queries_path}")

    with open(models_path) as handle:
        raw_models = json.load(handle)
    models = [ModelInfo(model_id=int(m['id']), name=str(m['name']), unit_price=float(m.get('unit_price', 0.0))) for m in raw_models]

    query_ids, embeddings = [], []
    with open(queries_path) as handle:
        for n, line in enumerate(handle):
            if not line.strip():
                continue
            record = json.loads(line)
            embedding = [float(x) for x in record['embedding']]
            if embeddings and len(embedding) != len(embeddings[0]):
                raise TableError(f"dimension mismatch: embedding of query {n} has {len(embedding)} values, expected {len(embeddings[0])}")
            query_ids.append(str(record['query_id']))
            embeddings.append(embedding)

    perf = _read_matrix(os.path.join(path, PERF_FILE), 'perf')
    cost = _read_matrix(os.path.join(path, COST_FILE), 'cost')
    table = RoutingTable(models=models, query_ids=query_ids, embeddings=np.array(embeddings, dtype=np.float64).reshape(len(embeddings), -1) if embeddings else np.zeros((0, 1)), perf=perf, cost=cost)
    logging.info(f"Loaded routing table {path}: N={table.n_queries} K={table.n_models} d_q={table.embed_dim}")
    return table


def _write_matrix(path, matrix):
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        for row in matrix:
            writer.writerow([format_float(x) for x in row])


def save_table(table, path):
    validate_table(table)
    try:
        os.makedirs(path, exist_ok=True)
        with open(os.path.join(path, MODELS_FILE), 'w') as handle:
            json.dump([{'id': m.model_id, 'name': m.name, 'unit_price': m.unit_price} for m in table.models], handle, indent=2)
            handle.write('\n')
        with open(os.path.join(path, QUERIES_FILE), 'w') as handle:
            for query_id, embedding in zip(table.query_ids, table.embeddings):
                handle.write(json.dumps({'query_id': query_id, 'embedding': [float(x) for x in embedding]}) + '\n')
        _write_matrix(os.path.join(path, PERF_FILE), table.perf)
        _write_matrix(os.path.join(path, COST_FILE), table.cost)
    except OSError as e:
        raise TableError(f"cannot write table to {path}: {e}")
    logging.info(f"Saved routing table to {path}")


@dataclass(frozen=True)
class SplitIndices:
    train: tuple
    valid: tuple
    test: tuple
    seed: int
    ratio: tuple = field(default=DEFAULT_RATIO)

    @classmethod
    def full(cls, n, seed = DEFAULT_SPLIT_SEED):
        # training-set protocol: every part is the whole table
        everything = tuple(range(n))
        return cls(train=everything, valid=everything, test=everything, seed=seed, ratio=(1.0, 1.0, 1.0))

    def part(self, name):
        return np.array(getattr(self, name), dtype=np.int64)


def make_split(n, ratio = DEFAULT_RATIO, seed = DEFAULT_SPLIT_SEED):
    ratio = tuple(float(r) for r in ratio)
    if len(ratio) != 3:
        raise ConfigError(f"split ratio needs 3 parts, got {len(ratio)}")
    if any(r <= 0 or not math.isfinite(r) for r in ratio):
        raise ConfigError(f"split ratio parts must be positive, got {ratio}")
    if n < len(ratio):
        raise ConfigError(f"cannot split {n} queries into {len(ratio)} parts")

    total = sum(ratio)
    sizes = [math.floor(n * r / total) for r in ratio]
    remainder = n - sum(sizes)
    for i in range(remainder): # earlier parts first: train, valid, test
        sizes[i % len(sizes)] += 1

    permutation = make_rng(seed).permutation(n)
    bounds = np.cumsum([0] + sizes)
    parts = [tuple(sorted(int(i) for i in permutation[bounds[p]:bounds[p + 1]])) for p in range(3)]
    return SplitIndices(train=parts[0], valid=parts[1], test=parts[2], seed=int(seed), ratio=ratio)


def save_split(split, path):
    with open(path, 'w') as handle:
        json.dump({'seed': split.seed, 'ratio': list(split.ratio), 'train': list(split.train), 'valid': list(split.valid), 'test': list(split.test)}, handle)
        handle.write('\n')


def load_split(path, n = None):
    if not os.path.isfile(path):
        raise TableError(f"missing file {path}")
    with open(path) as handle:
        raw = json.load(handle)
    split = SplitIndices(train=tuple(raw['train']), valid=tuple(raw['valid']), test=tuple(raw['test']), seed=int(raw['seed']), ratio=tuple(raw.get('ratio', DEFAULT_RATIO)))
    if n is not None:
        covered = sorted(split.train + split.valid + split.test)
        if covered != list(range(n)):
            raise TableError(f"split {path} does not partition 0..{n - 1}")
    return split
