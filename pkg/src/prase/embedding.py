"""Translational cross-graph embeddings (TransE per graph plus a linear map).

The reference semantic-embedding module learns TransE vectors for the
relation triples of both graphs and a matrix ``M`` pulling seed pairs
together (``||M e - e'||``).  KG1 vectors are handed out already mapped
through ``M`` so cosine similarity compares the two graphs directly.

Any other embedding model can replace it as long as it offers ``fit``,
``predict`` and an ``embeddings_`` attribute shaped like :class:`EmbeddingSet`.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .kg import KnowledgeGraph

log = logging.getLogger(__name__)

_EPS = 1e-12


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    dim: int = 100
    margin: float = 1.0
    learning_rate: float = 0.01
    epochs: int = 200
    negatives: int = 5
    batch_size: int = 4096
    seed: int = 0
    mutual_nn: bool = False

    def validate(self):
        for name in ("dim", "margin", "learning_rate", "epochs", "negatives", "batch_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"train config {name} must be positive")
        return self


@dataclass
class SeedSet:
    """Presumed-equivalent entity pairs used as supervision."""

    pairs: list = field(default_factory=list)

    def __post_init__(self):
        self.pairs = [(int(a), int(b)) for a, b in self.pairs]
        if len(set(self.pairs)) != len(self.pairs):
            raise ValueError("seed pairs must be unique")

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def as_array(self) -> np.ndarray:
        return np.array(self.pairs, dtype=np.int64).reshape(-1, 2)


@dataclass
class SePredictionSet:
    """Predicted ``(e, e', score)`` mappings, at most one per KG1 entity."""

    mappings: list = field(default_factory=list)

    def __len__(self):
        return len(self.mappings)

    def __iter__(self):
        return iter(self.mappings)


@dataclass
class EmbeddingSet:
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    left_relations: np.ndarray
    right_relations: np.ndarray
    transform: np.ndarray
    left_mask: np.ndarray
    right_mask: np.ndarray

    @property
    def dim(self) -> int:
        return self.left_vectors.shape[1]

    def dump(self, path, kg1: KnowledgeGraph, kg2: KnowledgeGraph):
        """One ``label<TAB>v1,v2,...`` line per embedded entity of either graph."""
        with open(path, "w", encoding="utf-8") as fh:
            for kg, vecs, mask in ((kg1, self.left_vectors, self.left_mask), (kg2, self.right_vectors, self.right_mask)):
                for i in np.flatnonzero(mask):
                    fh.write(kg.label(i) + "\t" + ",".join(f"{x:.6g}" for x in vecs[i]) + "\n")


def similarity(v1, v2) -> float:
    """Cosine similarity clamped below at 0."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    if v1.shape != v2.shape:
        raise ValueError(f"dimension mismatch: {v1.shape} vs {v2.shape}")
    n1, n2 = np.linalg.norm(v1), np.linalg.norm(v2)
    if n1 == 0 or n2 == 0:
        log.warning("similarity of a zero vector taken as 0")
        return 0.0
    return max(0.0, min(1.0, float(v1 @ v2 / (n1 * n2))))


# ---------------------------------------------------------------------------
# loss and gradients


@dataclass
class Params:
    ent1: np.ndarray
    rel1: np.ndarray
    ent2: np.ndarray
    rel2: np.ndarray
    transform: np.ndarray

    def zeros_like(self) -> "Params":
        return Params(*(np.zeros_like(a) for a in self.arrays()))

    def arrays(self):
        return self.ent1, self.rel1, self.ent2, self.rel2, self.transform


def _distance_terms(ent, rel, triples):
    diff = ent[triples[:, 0]] + rel[triples[:, 1]] - ent[triples[:, 2]]
    dist = np.linalg.norm(diff, axis=1)
    return diff, dist


def _scatter_add(target: np.ndarray, idx: np.ndarray, rows: np.ndarray, sign=None) -> None:
    """``target[idx[j]] += sign[j] * rows[j % len(rows)]`` summed over ``j``, via a sparse product.

    ``idx`` may list several index columns back to back, each addressing
    the same ``rows`` block.
    """
    if not len(idx):
        return
    n_rows = len(rows)
    data = np.ones(len(idx)) if sign is None else sign
    cols = np.tile(np.arange(n_rows), len(idx) // n_rows)
    ind = sparse.csr_matrix((data, (idx, cols)), shape=(target.shape[0], n_rows))
    target += ind @ rows


def transe_loss(ent, rel, pos, neg, margin, g_ent=None, g_rel=None) -> float:
    """Margin ranking loss ``sum max(0, margin + d(pos) - d(neg))`` over aligned rows.

    ``pos`` and ``neg`` are ``(n, 3)`` arrays of ``(h, r, t)``; row ``i`` of
    ``neg`` is a corruption of row ``i`` of ``pos``.  Gradients are
    accumulated into ``g_ent``/``g_rel`` when given.
    """
    dp_vec, dp = _distance_terms(ent, rel, pos)
    dn_vec, dn = _distance_terms(ent, rel, neg)
    hinge = margin + dp - dn
    active = hinge > 0
    if g_ent is not None and active.any():
        p, n = pos[active], neg[active]
        up = dp_vec[active]
        up /= np.maximum(dp[active], _EPS)[:, None]
        un = dn_vec[active]
        un /= np.maximum(dn[active], _EPS)[:, None]
        k = len(p)
        pm = np.repeat([1.0, -1.0], k)
        _scatter_add(g_ent, np.concatenate([p[:, 0], p[:, 2]]), up, pm)
        _scatter_add(g_ent, np.concatenate([n[:, 0], n[:, 2]]), un, -pm)
        _scatter_add(g_rel, p[:, 1], up)
        _scatter_add(g_rel, n[:, 1], un, -np.ones(k))
    return float(hinge[active].sum())


def transform_loss(ent1, ent2, transform, seeds, g_ent1=None, g_ent2=None, g_transform=None) -> float:
    """``sum ||M e - e'||`` over seed rows ``(e, e')``."""
    e = ent1[seeds[:, 0]]
    w = e @ transform.T - ent2[seeds[:, 1]]
    dist = np.linalg.norm(w, axis=1)
    if g_ent1 is not None:
        u = w / np.maximum(dist, _EPS)[:, None]
        g_transform += u.T @ e
        _scatter_add(g_ent1, seeds[:, 0], u @ transform)
        _scatter_add(g_ent2, seeds[:, 1], u, -np.ones(len(u)))
    return float(dist.sum())


def loss_and_grad(params: Params, pos1, neg1, pos2, neg2, seeds, margin: float):
    """Combined objective and its gradient for one batch of both graphs."""
    g = params.zeros_like()
    loss = transe_loss(params.ent1, params.rel1, pos1, neg1, margin, g.ent1, g.rel1)
    loss += transe_loss(params.ent2, params.rel2, pos2, neg2, margin, g.ent2, g.rel2)
    loss += transform_loss(params.ent1, params.ent2, params.transform, seeds, g.ent1, g.ent2, g.transform)
    return loss, g


# ---------------------------------------------------------------------------
# training


class _Corruptor:
    """Uniform head-or-tail corruption, dropping corruptions that are true triples."""

    def __init__(self, kg: KnowledgeGraph, rng):
        mask = kg.relation_triple_mask
        self.triples = np.stack([kg.heads[mask], kg.relations[mask], kg.tails[mask]], axis=1)
        self.pool = np.flatnonzero(kg.relation_entity_mask)
        self.n = kg.n_elements
        self.known = np.unique((self.triples[:, 0] * kg.n_relations + self.triples[:, 1]) * self.n + self.triples[:, 2])
        self.n_rel = kg.n_relations
        self.rng = rng

    def sample(self, pos: np.ndarray, k: int):
        pos = np.repeat(pos, k, axis=0)
        neg = pos.copy()
        repl = self.pool[self.rng.integers(0, len(self.pool), len(pos))]
        head = self.rng.random(len(pos)) < 0.5
        neg[head, 0] = repl[head]
        neg[~head, 2] = repl[~head]
        keys = (neg[:, 0] * self.n_rel + neg[:, 1]) * self.n + neg[:, 2]
        idx = np.searchsorted(self.known, keys)
        hit = (idx < len(self.known)) & (self.known[np.minimum(idx, len(self.known) - 1)] == keys)
        return pos[~hit], neg[~hit]


def _init_params(kg1, kg2, dim, rng) -> Params:
    def table(n):
        x = rng.normal(size=(n, dim))
        return x / np.maximum(np.linalg.norm(x, axis=1, keepdims=True), _EPS)

    bound = 6.0 / np.sqrt(dim)
    return Params(
        ent1=table(kg1.n_elements),
        rel1=rng.uniform(-bound, bound, size=(kg1.n_relations, dim)),
        ent2=table(kg2.n_elements),
        rel2=rng.uniform(-bound, bound, size=(kg2.n_relations, dim)),
        transform=np.eye(dim),
    )


def _normalize_rows(a):
    a /= np.maximum(np.linalg.norm(a, axis=1, keepdims=True), _EPS)


def train(kg1: KnowledgeGraph, kg2: KnowledgeGraph, seeds: SeedSet, cfg: TrainConfig | None = None) -> EmbeddingSet:
    """Fit TransE on both graphs and the seed transformation by minibatch SGD.

    Each epoch runs one pass of the triple loss over both graphs and then one
    pass of the transformation loss over the seeds, after which entity vectors
    are renormalized to unit length.
    """
    cfg = (cfg or TrainConfig()).validate()
    if len(seeds) == 0:
        raise TrainingError("no alignment seeds to train on")
    rng = np.random.default_rng(cfg.seed)
    c1, c2 = _Corruptor(kg1, rng), _Corruptor(kg2, rng)
    if not len(c1.triples) or not len(c2.triples):
        raise TrainingError("both graphs need relation triples to train embeddings")
    seed_arr = seeds.as_array()
    params = _init_params(kg1, kg2, cfg.dim, rng)
    lr = cfg.learning_rate
    n1, n2 = len(c1.triples), len(c2.triples)
    n_batches = max(1, int(np.ceil((n1 + n2) / cfg.batch_size)))

    # overflow is caught by the finiteness check below
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.epochs):
            split1 = np.array_split(rng.permutation(n1), n_batches)
            split2 = np.array_split(rng.permutation(n2), n_batches)
            total = 0.0
            for b1, b2 in zip(split1, split2):
                p1, p2 = c1.triples[b1], c2.triples[b2]
                pos1, neg1 = c1.sample(p1, cfg.negatives)
                pos2, neg2 = c2.sample(p2, cfg.negatives)
                g1e, g1r = np.zeros_like(params.ent1), np.zeros_like(params.rel1)
                g2e, g2r = np.zeros_like(params.ent2), np.zeros_like(params.rel2)
                total += transe_loss(params.ent1, params.rel1, pos1, neg1, cfg.margin, g1e, g1r)
                total += transe_loss(params.ent2, params.rel2, pos2, neg2, cfg.margin, g2e, g2r)
                params.ent1 -= lr * g1e
                params.rel1 -= lr * g1r
                params.ent2 -= lr * g2e
                params.rel2 -= lr * g2r

            perm = rng.permutation(len(seed_arr))
            for chunk in np.array_split(perm, max(1, int(np.ceil(len(seed_arr) / cfg.batch_size)))):
                batch = seed_arr[chunk]
                g1e, g2e = np.zeros_like(params.ent1), np.zeros_like(params.ent2)
                gm = np.zeros_like(params.transform)
                total += transform_loss(params.ent1, params.ent2, params.transform, batch, g1e, g2e, gm)
                params.ent1 -= lr * g1e
                params.ent2 -= lr * g2e
                # matrix sees every seed in the batch; average so its step does not scale with batch size
                params.transform -= lr * gm / max(len(batch), 1)

            if not np.isfinite(total) or not all(np.isfinite(a).all() for a in params.arrays()):
                raise TrainingError(f"non-finite loss or parameters at epoch {epoch}")
            _normalize_rows(params.ent1)
            _normalize_rows(params.ent2)
            if epoch % 50 == 0 or epoch == cfg.epochs - 1:
                log.debug("epoch %d loss %.4f", epoch, total)

    return EmbeddingSet(
        left_vectors=params.ent1 @ params.transform.T,
        right_vectors=params.ent2.copy(),
        left_relations=params.rel1,
        right_relations=params.rel2,
        transform=params.transform,
        left_mask=kg1.relation_entity_mask & ~kg1.value_mask,
        right_mask=kg2.relation_entity_mask & ~kg2.value_mask,
    )


def predict(emb: EmbeddingSet, unaligned, mutual_nn: bool = False, block: int = 2048) -> SePredictionSet:
    """Nearest unaligned KG2 entity (by cosine) for each unaligned KG1 entity.

    Entities without a trained vector are skipped.  Scores are cosines
    clamped to ``[0, 1]``.
    """
    left = np.asarray(unaligned.left, dtype=np.int64)
    right = np.asarray(unaligned.right, dtype=np.int64)
    left = left[emb.left_mask[left]]
    right = right[emb.right_mask[right]]
    if not len(left) or not len(right):
        return SePredictionSet([])

    def unit(x):
        return x / np.maximum(np.linalg.norm(x, axis=1, keepdims=True), _EPS)

    a, b = unit(emb.left_vectors[left]), unit(emb.right_vectors[right])
    best = np.empty(len(left), dtype=np.int64)
    score = np.empty(len(left))
    col_best = np.full(len(right), -np.inf)
    col_arg = np.zeros(len(right), dtype=np.int64)
    for s in range(0, len(left), block):
        sims = a[s:s + block] @ b.T
        best[s:s + block] = sims.argmax(axis=1)
        score[s:s + block] = sims[np.arange(len(sims)), best[s:s + block]]
        if mutual_nn:
            blk_arg = sims.argmax(axis=0)
            blk_val = sims[blk_arg, np.arange(len(right))]
            better = blk_val > col_best
            col_best[better] = blk_val[better]
            col_arg[better] = blk_arg[better] + s
    keep = np.ones(len(left), dtype=bool)
    if mutual_nn:
        keep = col_arg[best] == np.arange(len(left))
    score = np.clip(score, 0.0, 1.0)
    return SePredictionSet(
        [(int(left[i]), int(right[best[i]]), float(score[i])) for i in np.flatnonzero(keep)]
    )


class MTransE(BaseEstimator):
    """Reference semantic-embedding module as an estimator.

    ``fit(kg1, kg2, seeds)`` trains; ``predict(unaligned)`` returns a
    :class:`SePredictionSet`.  Hyperparameters mirror :class:`TrainConfig`.
    """

    def __init__(self, dim=100, margin=1.0, learning_rate=0.01, epochs=200, negatives=5,
                 batch_size=4096, seed=0, mutual_nn=False):
        self.dim = dim
        self.margin = margin
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.negatives = negatives
        self.batch_size = batch_size
        self.seed = seed
        self.mutual_nn = mutual_nn

    @classmethod
    def from_config(cls, cfg: TrainConfig) -> "MTransE":
        return cls(**asdict(cfg))

    def config(self) -> TrainConfig:
        return TrainConfig(**self.get_params())

    def fit(self, kg1, kg2, seeds):
        if not isinstance(seeds, SeedSet):
            seeds = SeedSet(list(seeds))
        self.embeddings_ = train(kg1, kg2, seeds, self.config())
        return self

    def predict(self, unaligned) -> SePredictionSet:
        check_is_fitted(self, "embeddings_")
        return predict(self.embeddings_, unaligned, mutual_nn=self.mutual_nn)
