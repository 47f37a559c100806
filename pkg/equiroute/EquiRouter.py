import logging
from dataclasses import dataclass
import numpy as np
from scipy.special import expit
from .BaseRouter import BaseRouter, RouterHyper, train_loop
from .Checkpoint import load_checkpoint, save_checkpoint
from .NeuralNet import build_stack, init_stack, l2_penalty, stack_grads
from .Utils import NumericsError, make_rng

# EquiRouter: one shared query trunk, a learned embedding per model and a scoring head.
#
#   z   = trunk(q)                        d_q -> D -> D, relu
#   γ,β = film(m_j) split in half         d_m -> 2D, linear
#   e_j = proj(m_j)                       d_m -> D, linear
#   z_j = γ ⊙ z + β
#   h_j = [z_j, e_j, z_j ⊙ e_j, |z_j - e_j|]     ([z_j, e_j] without the joint feature)
#   s_j = head(h_j)                       4D -> D -> 1, relu hidden
#
# Scores are trained with a pairwise logistic loss over the ordered pairs of each query (higher
# performance first, cheaper first on equal performance), or with MSE against the performance row
# for the ablation. Model-side tensors do not depend on the query, so scoring a query costs one
# trunk pass plus O(D) per model ahead of the head.

KINDS = ('equirouter', 'equirouter_nojoint', 'mse')
SCORE_CHUNK = 4096


def film_modulate(z, gamma, beta):
    if not (np.shape(z) == np.shape(gamma) == np.shape(beta)):
        raise ValueError(f"dimension mismatch: z {np.shape(z)}, gamma {np.shape(gamma)}, beta {np.shape(beta)}")
    return gamma * z + beta


def joint_feature(z_j, e_j):
    if np.shape(z_j) != np.shape(e_j):
        raise ValueError(f"dimension mismatch: z_j {np.shape(z_j)}, e_j {np.shape(e_j)}")
    return np.concatenate([z_j, e_j, z_j * e_j, np.abs(z_j - e_j)], axis=-1)


@dataclass
class EquiRouterParams:
    hyper: RouterHyper
    arrays: dict
    d_q: int
    n_models: int
    joint: bool = True
    loss: str = 'ranking'

    @property
    def kind(self):
        if self.loss == 'mse':
            return 'mse'
        return 'equirouter' if self.joint else 'equirouter_nojoint'

    @classmethod
    def init(cls, hyper, d_q, n_models, joint = True, loss = 'ranking'):
        D, d_m = hyper.hidden, hyper.model_dim
        rng = make_rng(hyper.seed)
        arrays = {'model_embeddings': rng.normal(0.0, 1.0 / np.sqrt(d_m), size=(n_models, d_m))}
        arrays.update(init_stack(rng, 'trunk', [d_q, D, D], ['relu', 'relu']))
        arrays.update(init_stack(rng, 'film', [d_m, 2 * D], ['identity']))
        arrays.update(init_stack(rng, 'proj', [d_m, D], ['identity']))
        head_in = 4 * D if joint else 2 * D
        arrays.update(init_stack(rng, 'head', [head_in, D, 1], ['relu', 'identity']))
        return cls(hyper=hyper, arrays=arrays, d_q=d_q, n_models=n_models, joint=joint, loss=loss)

    def header(self):
        return {'hyper': self.hyper.model_dump(), 'd_q': self.d_q, 'n_models': self.n_models, 'joint': self.joint, 'loss': self.loss}

    def save(self, path):
        save_checkpoint(path, self.kind, self.header(), self.arrays)

    @classmethod
    def load(cls, path):
        kind, header, arrays = load_checkpoint(path)
        if kind not in KINDS:
            raise ValueError(f"{path} holds a '{kind}' checkpoint, not an EquiRouter")
        return cls(hyper=RouterHyper(**header['hyper']), arrays=arrays, d_q=header['d_q'], n_models=header['n_models'], joint=header['joint'], loss=header['loss'])


def _forward(arrays, X, joint):
    B = X.shape[0]
    trunk = build_stack(arrays, 'trunk', ['relu', 'relu'])
    film = build_stack(arrays, 'film', ['identity'])
    proj = build_stack(arrays, 'proj', ['identity'])
    head = build_stack(arrays, 'head', ['relu', 'identity'])
    M = arrays['model_embeddings']
    K = M.shape[0]

    z, trunk_in = trunk.forward_cached(X)
    D = z.shape[1]
    P, film_in = film.forward_cached(M)
    gamma, beta = P[:, :D], P[:, D:]
    E, proj_in = proj.forward_cached(M)

    Zj = gamma[None, :, :] * z[:, None, :] + beta[None, :, :]
    Eb = np.broadcast_to(E[None, :, :], Zj.shape)
    blocks = [Zj, Eb, Zj * Eb, np.abs(Zj - Eb)] if joint else [Zj, Eb]
    H = np.concatenate(blocks, axis=2).reshape(B * K, -1)
    out, head_in = head.forward_cached(H)
    S = out.reshape(B, K)
    cache = (trunk, film, proj, head, trunk_in, film_in, proj_in, head_in, z, gamma, Zj, Eb)
    return S, cache


def _backward(cache, dS, joint):
    trunk, film, proj, head, trunk_in, film_in, proj_in, head_in, z, gamma, Zj, Eb = cache
    B, K = dS.shape
    D = z.shape[1]

    dH, head_grads = head.backward(head_in, dS.reshape(B * K, 1))
    dH = dH.reshape(B, K, -1)
    dZj = dH[:, :, :D].copy()
    dEb = dH[:, :, D:2 * D].copy()
    if joint:
        dProd = dH[:, :, 2 * D:3 * D]
        dAbs = dH[:, :, 3 * D:]
        sign = np.sign(Zj - Eb)
        dZj += dProd * Eb + dAbs * sign
        dEb += dProd * Zj - dAbs * sign

    dgamma = np.einsum('bkd,bd->kd', dZj, z)
    dbeta = dZj.sum(axis=0)
    dz = np.einsum('bkd,kd->bd', dZj, gamma)
    dE = dEb.sum(axis=0)

    dM_film, film_grads = film.backward(film_in, np.concatenate([dgamma, dbeta], axis=1))
    dM_proj, proj_grads = proj.backward(proj_in, dE)
    _, trunk_grads = trunk.backward(trunk_in, dz)

    grads = {'model_embeddings': dM_film + dM_proj}
    grads.update(stack_grads('trunk', trunk_grads))
    grads.update(stack_grads('film', film_grads))
    grads.update(stack_grads('proj', proj_grads))
    grads.update(stack_grads('head', head_grads))
    return grads


def score_batch(params, X):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != params.d_q:
        raise ValueError(f"shape mismatch: embeddings of dim {X.shape[1]}, router expects {params.d_q}")
    if len(X) == 0:
        return np.zeros((0, params.n_models))
    return np.concatenate([_forward(params.arrays, X[i:i + SCORE_CHUNK], params.joint)[0] for i in range(0, len(X), SCORE_CHUNK)], axis=0)


def score_all(params, q_embed):
    q_embed = np.asarray(q_embed, dtype=np.float64)
    if q_embed.ndim != 1:
        raise ValueError(f"shape mismatch: expected one embedding vector, got shape {q_embed.shape}")
    return score_batch(params, q_embed[None, :])[0]


def scoring_cost(hyper, n_models, d_q, joint = True):
    # multiply-add count for one query; model-side film/proj outputs are query independent
    D = hyper.hidden
    trunk = d_q * D + D * D
    head_in = 4 * D if joint else 2 * D
    per_model = D + (2 * D if joint else 0) + head_in * D + D
    return {'trunk': trunk, 'per_model': per_model, 'total': trunk + n_models * per_model}


def build_pairs(a, c):
    a = np.asarray(a, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if a.shape != c.shape:
        raise ValueError(f"dimension mismatch: perf {a.shape}, cost {c.shape}")
    prefer = pair_matrix(a[None, :], c[None, :])[0]
    return [(int(i), int(j)) for i, j in zip(*np.nonzero(prefer))]


def pair_matrix(A, C):
    # prefer[b, i, j]: model i must outrank model j on query b
    a_i, a_j = A[:, :, None], A[:, None, :]
    return (a_i > a_j) | ((a_i == a_j) & (C[:, :, None] < C[:, None, :]))


def ranking_loss(scores, pairs):
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise NumericsError("non-finite scores in ranking loss")
    if len(pairs) == 0:
        return 0.0
    i, j = np.array(pairs).T
    return float(np.mean(np.logaddexp(0.0, -(scores[i] - scores[j]))))


def _ranking_terms(S, prefer):
    # per-query mean pairwise loss and its gradient wrt S, queries without pairs contribute nothing
    counts = prefer.sum(axis=(1, 2))
    safe = np.where(counts > 0, counts, 1)[:, None, None]
    diff = S[:, :, None] - S[:, None, :]
    per_query = (np.logaddexp(0.0, -diff) * prefer).sum(axis=(1, 2)) / safe[:, 0, 0]
    g = -expit(-diff) * prefer / safe
    dS = g.sum(axis=2) - g.sum(axis=1)
    return per_query, counts > 0, dS


def _mse_terms(S, A):
    per_query = np.mean((S - A) ** 2, axis=1)
    dS = 2.0 * (S - A) / S.shape[1]
    return per_query, np.ones(len(S), dtype=bool), dS


def _terms(params, table, indices, S):
    A = table.perf[indices]
    if params.loss == 'mse':
        return _mse_terms(S, A)
    return _ranking_terms(S, pair_matrix(A, table.cost[indices]))


def batch_objective(params, table, indices, arrays = None):
    """
    Mean loss over the contributing queries of `indices` and its gradient, without the l2 term.
    Returns grads=None when no query in the batch has a pair.
    """
    arrays = params.arrays if arrays is None else arrays
    S, cache = _forward(arrays, table.embeddings[indices], params.joint)
    if not np.all(np.isfinite(S)):
        raise NumericsError("non-finite scores during training")
    per_query, contrib, dS = _terms(params, table, indices, S)
    n_contrib = int(contrib.sum())
    if n_contrib == 0:
        return 0.0, None
    dS = np.where(contrib[:, None], dS, 0.0) / n_contrib
    return float(per_query[contrib].mean()), _backward(cache, dS, params.joint)


def objective(params, table, indices, l2):
    """Full training objective: batch loss plus l2 * ||Θ||²."""
    loss, grads = batch_objective(params, table, indices)
    penalty, penalty_grads = l2_penalty(params.arrays, l2)
    if grads is None:
        return loss + penalty, penalty_grads
    return loss + penalty, {k: grads[k] + penalty_grads[k] for k in grads}


def evaluate_loss(params, table, indices, arrays = None):
    arrays = params.arrays if arrays is None else arrays
    values = []
    for i in range(0, len(indices), SCORE_CHUNK):
        chunk = indices[i:i + SCORE_CHUNK]
        S, _ = _forward(arrays, table.embeddings[chunk], params.joint)
        per_query, contrib, _ = _terms(params, table, chunk, S)
        values.append(per_query[contrib])
    values = np.concatenate(values) if values else np.zeros(0)
    return float(values.mean()) if values.size > 0 else None


def _train(table, split, hyper, joint, loss):
    params = EquiRouterParams.init(hyper, table.embed_dim, table.n_models, joint=joint, loss=loss)
    train_idx = np.asarray(split.train, dtype=np.int64)
    if loss == 'ranking' and train_idx.size > 0:
        prefer = pair_matrix(table.perf[train_idx], table.cost[train_idx])
        if not prefer.any():
            raise NumericsError("no ranking supervision: every training query has an empty pair set")
    logging.info(f"Training {params.kind}: N_train={train_idx.size} K={table.n_models} D={hyper.hidden} d_m={hyper.model_dim}")

    best, log = train_loop(
        params.arrays,
        lambda arrays, batch: batch_objective(params, table, batch, arrays),
        lambda arrays, idx: evaluate_loss(params, table, idx, arrays),
        train_idx, split.valid, hyper, params.kind,
    )
    params.arrays = best
    return params, log


def train_equirouter(table, split, hyper):
    return _train(table, split, hyper, joint=True, loss='ranking')


def train_mse_ablation(table, split, hyper):
    return _train(table, split, hyper, joint=True, loss='mse')


def train_no_joint_ablation(table, split, hyper):
    return _train(table, split, hyper, joint=False, loss='ranking')


class EquiRouter(BaseRouter):
    def __init__(self, params, cost_predictor = None):
        super().__init__(cost_predictor)
        self.params = params
        self.kind = params.kind

    def score_queries(self, table, indices):
        return score_batch(self.params, table.embeddings[indices])

    def save(self, path):
        self.params.save(path)
