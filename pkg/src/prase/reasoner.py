"""Probabilistic reasoning over two knowledge graphs (PARIS-style).

Entity-equivalence and sub-relation probabilities are stored sparsely and
updated by alternating Jacobi sweeps: every new value reads only the previous
snapshot, so results do not depend on how the work is split across threads.
All heavy loops are vectorized with numpy over flattened candidate lists.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .kg import InverseAugmentedView, KnowledgeGraph, _csr, augment_inverses

log = logging.getLogger(__name__)


class ReasonerConfigError(ValueError):
    pass


@dataclass
class ReasonerConfig:
    theta_init_subrel: float = 0.1
    max_self_iterations: int = 10
    convergence_epsilon: float = 1e-3
    beta: float = 0.8
    enable_embedding_blend: bool = False
    similarity: Optional[Callable] = field(default=None, repr=False)
    top_k: int = 1
    case_fold: bool = False
    workers: int = 1
    chunk_size: int = 2_000_000

    def validate(self):
        if not 0.0 < self.theta_init_subrel < 1.0:
            raise ReasonerConfigError(f"theta_init_subrel must lie in (0, 1), got {self.theta_init_subrel}")
        if not 0.0 < self.beta < 1.0:
            raise ReasonerConfigError(f"beta must lie in (0, 1), got {self.beta}")
        if self.max_self_iterations < 0 or self.convergence_epsilon < 0:
            raise ReasonerConfigError("max_self_iterations and convergence_epsilon must be non-negative")
        if self.top_k < 1 or self.workers < 1 or self.chunk_size < 1:
            raise ReasonerConfigError("top_k, workers and chunk_size must be positive")
        return self


# ---------------------------------------------------------------------------
# functionality


class FunctionalityTable:
    """Per-relation functionality ``F(r)`` and inverse functionality ``F^-1(r)``.

    The distinct-count numerators and denominators are kept so values can be
    read back as exact fractions.  Relations without triples read as 0.
    """

    def __init__(self, head_counts, tail_counts, pair_counts):
        self.head_counts = head_counts
        self.tail_counts = tail_counts
        self.pair_counts = pair_counts
        safe = np.maximum(pair_counts, 1)
        self.func = np.where(pair_counts > 0, head_counts / safe, 0.0)
        self.inv_func = np.where(pair_counts > 0, tail_counts / safe, 0.0)

    def __len__(self):
        return int((self.pair_counts > 0).sum())

    def __contains__(self, relation):
        return 0 <= relation < len(self.pair_counts) and self.pair_counts[relation] > 0

    def functionality(self, relation: int) -> float:
        return float(self.func[relation]) if relation < len(self.func) else 0.0

    def inverse_functionality(self, relation: int) -> float:
        return float(self.inv_func[relation]) if relation < len(self.inv_func) else 0.0

    def as_fractions(self, relation: int) -> tuple[Fraction, Fraction]:
        n = int(self.pair_counts[relation])
        if n == 0:
            return Fraction(0), Fraction(0)
        return Fraction(int(self.head_counts[relation]), n), Fraction(int(self.tail_counts[relation]), n)


def compute_functionalities(view: InverseAugmentedView) -> FunctionalityTable:
    n_el, n_rel = view.n_elements, view.n_relations
    h, r, t = view.heads, view.relations, view.tails
    pairs = np.unique((r * n_el + h) * n_el + t)
    pair_counts = np.bincount(pairs // (n_el * n_el), minlength=n_rel)
    head_counts = np.bincount(np.unique(r * n_el + h) // n_el, minlength=n_rel)
    tail_counts = np.bincount(np.unique(r * n_el + t) // n_el, minlength=n_rel)
    return FunctionalityTable(head_counts, tail_counts, pair_counts)


# ---------------------------------------------------------------------------
# stores


class EntityMappingStore:
    """Sparse map ``(e, e') -> P(e = e')`` between elements of two graphs.

    Pairs are kept sorted by ``(left, right)``; zero probabilities are dropped.
    ``value_left``/``value_right`` flag which ids are literal values.
    """

    def __init__(self, left, right, prob, value_left, value_right):
        left = np.asarray(left, dtype=np.int64)
        right = np.asarray(right, dtype=np.int64)
        prob = np.clip(np.asarray(prob, dtype=np.float64), 0.0, 1.0)
        self.value_left = np.asarray(value_left, dtype=bool)
        self.value_right = np.asarray(value_right, dtype=bool)
        keep = prob > 0
        left, right, prob = left[keep], right[keep], prob[keep]
        keys = left * self.n_right + right
        uk, first = np.unique(keys, return_index=True)
        if len(uk) != len(keys):
            raise ValueError("duplicate pairs in entity mapping store")
        self.left, self.right, self.prob = left[first], right[first], prob[first]
        self.keys = uk
        for arr in (self.left, self.right, self.prob, self.keys):
            arr.setflags(write=False)
        self._best = {}

    @classmethod
    def empty(cls, value_left, value_right):
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z, np.zeros(0), value_left, value_right)

    @classmethod
    def from_dict(cls, probs: dict, value_left, value_right):
        items = sorted(probs.items())
        left = [a for (a, _), _ in items]
        right = [b for (_, b), _ in items]
        return cls(left, right, [p for _, p in items], value_left, value_right)

    @property
    def n_left(self) -> int:
        return len(self.value_left)

    @property
    def n_right(self) -> int:
        return len(self.value_right)

    def __len__(self):
        return len(self.keys)

    def __contains__(self, pair):
        return self.get(*pair) > 0

    def get(self, a: int, b: int) -> float:
        k = a * self.n_right + b
        i = np.searchsorted(self.keys, k)
        if i < len(self.keys) and self.keys[i] == k:
            return float(self.prob[i])
        return 0.0

    def to_dict(self) -> dict:
        return {(int(a), int(b)): float(p) for a, b, p in zip(self.left, self.right, self.prob)}

    def transpose(self) -> "EntityMappingStore":
        return EntityMappingStore(self.right, self.left, self.prob, self.value_right, self.value_left)

    def value_pair_mask(self) -> np.ndarray:
        return self.value_left[self.left] & self.value_right[self.right]

    def entity_pair_mask(self) -> np.ndarray:
        return ~self.value_left[self.left] & ~self.value_right[self.right]

    def subset(self, mask) -> "EntityMappingStore":
        return EntityMappingStore(self.left[mask], self.right[mask], self.prob[mask], self.value_left, self.value_right)

    def _best_view(self, side: str):
        if side not in self._best:
            own, other = (self.left, self.right) if side == "left" else (self.right, self.left)
            n = self.n_left if side == "left" else self.n_right
            partner = np.full(n, -1, dtype=np.int64)
            best_p = np.zeros(n)
            if len(own):
                # highest probability first, lowest counterpart id on ties
                order = np.lexsort((other, -self.prob, own))
                first = np.ones(len(order), dtype=bool)
                first[1:] = own[order][1:] != own[order][:-1]
                sel = order[first]
                partner[own[sel]] = other[sel]
                best_p[own[sel]] = self.prob[sel]
            self._best[side] = (partner, best_p)
        return self._best[side]

    def best(self, e: int):
        """``(e', p)`` for the best counterpart of left element ``e``, or None."""
        partner, p = self._best_view("left")
        return None if partner[e] < 0 else (int(partner[e]), float(p[e]))

    def best_reverse(self, e2: int):
        partner, p = self._best_view("right")
        return None if partner[e2] < 0 else (int(partner[e2]), float(p[e2]))

    def mutual_best(self, entities_only: bool = True):
        """Arrays ``(left, right, prob)`` of mutual-best pairs, sorted by descending prob then left."""
        best_r, _ = self._best_view("left")
        best_l, _ = self._best_view("right")
        mask = (best_r[self.left] == self.right) & (best_l[self.right] == self.left)
        if entities_only:
            mask &= self.entity_pair_mask()
        left, right, prob = self.left[mask], self.right[mask], self.prob[mask]
        order = np.lexsort((right, left, -prob))
        return left[order], right[order], prob[order]

    def max_abs_diff(self, other: "EntityMappingStore") -> float:
        keys = np.union1d(self.keys, other.keys)
        if not len(keys):
            return 0.0

        def dense(store):
            out = np.zeros(len(keys))
            out[np.searchsorted(keys, store.keys)] = store.prob
            return out

        return float(np.abs(dense(self) - dense(other)).max())

    def equals(self, other: "EntityMappingStore") -> bool:
        return np.array_equal(self.keys, other.keys) and np.array_equal(self.prob, other.prob)


class SubRelationStore:
    """Sparse ``P(r <= r')`` (forward) and ``P(r' <= r)`` (backward) over augmented relations.

    A freshly initialized store is *lazy*: every pair reads as ``constant``
    until the first real update replaces it, after which absent pairs are 0.
    """

    def __init__(self, n_left: int, n_right: int, constant: Optional[float] = None, forward=None, backward=None):
        self.n_left = n_left
        self.n_right = n_right
        self.constant = constant
        empty = (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0))
        self.forward = tuple(np.asarray(a) for a in (forward or empty))
        self.backward = tuple(np.asarray(a) for a in (backward or empty))
        self._dense = None

    @property
    def lazy(self) -> bool:
        return self.constant is not None

    def _matrices(self):
        if self._dense is None:
            fwd = np.zeros((self.n_left, self.n_right))
            bwd = np.zeros((self.n_right, self.n_left))
            fwd[self.forward[0], self.forward[1]] = self.forward[2]
            bwd[self.backward[0], self.backward[1]] = self.backward[2]
            self._dense = fwd, bwd
        return self._dense

    def forward_prob(self, r, r2):
        """``P(r <= r')``, elementwise over arrays."""
        if self.lazy:
            return np.full(np.broadcast(r, r2).shape, self.constant)
        return self._matrices()[0][r, r2]

    def backward_prob(self, r2, r):
        """``P(r' <= r)``, elementwise over arrays."""
        if self.lazy:
            return np.full(np.broadcast(r, r2).shape, self.constant)
        return self._matrices()[1][r2, r]

    def items(self, direction: str = "forward"):
        arrs = self.forward if direction == "forward" else self.backward
        return [(int(a), int(b), float(p)) for a, b, p in zip(*arrs)]

    def equals(self, other: "SubRelationStore") -> bool:
        return self.constant == other.constant and all(
            np.array_equal(a, b) for a, b in zip(self.forward + self.backward, other.forward + other.backward)
        )

    def dump(self, path, view1: InverseAugmentedView, view2: InverseAugmentedView):
        """Write the forward entries as ``r<TAB>r'<TAB>p`` lines."""
        with open(path, "w", encoding="utf-8") as fh:
            for a, b, p in sorted(self.items(), key=lambda x: (-x[2], x[0], x[1])):
                fh.write(f"{view1.relation_label(a)}\t{view2.relation_label(b)}\t{p:.6f}\n")


# ---------------------------------------------------------------------------
# problem context


class AlignmentProblem:
    """Precomputed, read-only inputs shared by every sweep over one graph pair."""

    def __init__(self, kg1: KnowledgeGraph, kg2: KnowledgeGraph, case_fold: bool = False):
        self.kg1, self.kg2 = kg1, kg2
        self.view1, self.view2 = augment_inverses(kg1), augment_inverses(kg2)
        self.ft1 = compute_functionalities(self.view1)
        self.ft2 = compute_functionalities(self.view2)
        self.bootstrap = init_literal_mappings(kg1, kg2, case_fold=case_fold)
        self.incoming1 = _entity_incoming(self.view1)
        self.incoming2 = _entity_incoming(self.view2)

    @property
    def value_left(self):
        return self.kg1.value_mask

    @property
    def value_right(self):
        return self.kg2.value_mask


def _entity_incoming(view: InverseAugmentedView):
    """Incoming-edge CSR restricted to edges whose head is an entity (not a literal)."""
    value = view.base.value_mask
    owner = np.repeat(np.arange(view.n_elements), view.in_degree)
    keep = ~value[view.in_heads]
    heads, rels, owner = view.in_heads[keep], view.in_relations[keep], owner[keep]
    deg = np.bincount(owner, minlength=view.n_elements)
    ptr = np.zeros(view.n_elements + 1, dtype=np.int64)
    np.cumsum(deg, out=ptr[1:])
    return ptr, heads, rels, deg


# ---------------------------------------------------------------------------
# initialization


def init_literal_mappings(kg1: KnowledgeGraph, kg2: KnowledgeGraph, case_fold: bool = False) -> EntityMappingStore:
    """Probability 1 for every cross-graph value pair with identical normalized text."""

    def index(kg):
        out = {}
        for text, ids in kg.literal_texts().items():
            key = text.casefold() if case_fold else text
            out.setdefault(key, set()).update(ids)
        return out

    idx1, idx2 = index(kg1), index(kg2)
    left, right = [], []
    for text in idx1.keys() & idx2.keys():
        for a in idx1[text]:
            for b in idx2[text]:
                left.append(a)
                right.append(b)
    return EntityMappingStore(left, right, np.ones(len(left)), kg1.value_mask, kg2.value_mask)


def init_subrelations(kg1, kg2, theta_init_subrel: float = 0.1) -> SubRelationStore:
    if not 0.0 < theta_init_subrel < 1.0:
        raise ReasonerConfigError(f"theta_init_subrel must lie in (0, 1), got {theta_init_subrel}")
    n1 = kg1.n_relations if isinstance(kg1, InverseAugmentedView) else 2 * kg1.n_relations
    n2 = kg2.n_relations if isinstance(kg2, InverseAugmentedView) else 2 * kg2.n_relations
    return SubRelationStore(n1, n2, constant=float(theta_init_subrel))


# ---------------------------------------------------------------------------
# sweep helpers


def _expand(counts: np.ndarray):
    """For ``sum(counts)`` slots: the owning row of each slot and its offset within the row."""
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    owner = np.repeat(np.arange(len(counts)), counts)
    starts = np.cumsum(counts) - counts
    return owner, np.arange(total, dtype=np.int64) - starts[owner]


def _reduce(keys: np.ndarray, values: np.ndarray):
    uk, inv = np.unique(keys, return_inverse=True)
    return uk, np.bincount(inv.ravel(), weights=values, minlength=len(uk))


def _chunks(costs: np.ndarray, budget: int):
    """Split row indices into consecutive chunks of about ``budget`` total cost.

    Boundaries depend only on the data, never on the worker count.
    """
    if not len(costs):
        return []
    cum = np.cumsum(costs)
    bounds = np.searchsorted(cum, np.arange(budget, int(cum[-1]), budget), side="left") + 1
    bounds = np.unique(np.concatenate([[0], bounds, [len(costs)]]))
    return [np.arange(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _map_chunks(fn, chunks, workers: int):
    if workers <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


def _merge(parts):
    parts = [p for p in parts if len(p[0])]
    if not parts:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    if len(parts) == 1:
        return parts[0]
    return _reduce(np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def _top_k_mask(own: np.ndarray, prob: np.ndarray, k: int) -> np.ndarray:
    """Pairs whose prob reaches the k-th largest value among pairs sharing ``own`` (ties kept)."""
    if not len(own):
        return np.zeros(0, dtype=bool)
    order = np.lexsort((-prob, own))
    so, sp = own[order], prob[order]
    start = np.ones(len(so), dtype=bool)
    start[1:] = so[1:] != so[:-1]
    group_start = np.maximum.accumulate(np.where(start, np.arange(len(so)), 0))
    group_end = np.append(np.flatnonzero(start)[1:], len(so))
    group_id = np.cumsum(start) - 1
    kth_pos = np.minimum(group_start + k - 1, group_end[group_id] - 1)
    keep_sorted = sp >= sp[kth_pos]
    keep = np.empty(len(own), dtype=bool)
    keep[order] = keep_sorted
    return keep


def _cosine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    denom = na * nb
    dots = np.einsum("ij,ij->i", a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(denom > 0, dots / np.where(denom > 0, denom, 1.0), 0.0)
    return np.clip(cos, 0.0, 1.0)


def _pair_similarity(emb, left, right, cfg: ReasonerConfig):
    """Similarity per pair plus a mask of pairs where both sides have vectors."""
    has = emb.left_mask[left] & emb.right_mask[right]
    sim = np.zeros(len(left))
    if has.any():
        a = emb.left_vectors[left[has]]
        b = emb.right_vectors[right[has]]
        if cfg.similarity is None:
            sim[has] = _cosine(a, b)
        else:
            sim[has] = np.clip([cfg.similarity(x, y) for x, y in zip(a, b)], 0.0, 1.0)
    return sim, has


# ---------------------------------------------------------------------------
# sweeps


def update_entity_probs(
    snapshot: EntityMappingStore,
    subrel: SubRelationStore,
    problem: AlignmentProblem,
    emb=None,
    cfg: Optional[ReasonerConfig] = None,
) -> EntityMappingStore:
    """One Jacobi sweep of entity-equivalence probabilities.

    Candidates are entity pairs ``(h, h')`` joined by triples ``(h, r, t)`` and
    ``(h', r', t')`` whose tails are matched in ``snapshot``.  Each such triple
    pair multiplies in the factor
    ``(1 - P(r'<=r) F^-1(r) P(t=t')) * (1 - P(r<=r') F^-1(r') P(t=t'))``.
    With blending on, the result is mixed with embedding similarity using
    weight ``beta``.  Literal-value pairs in the snapshot are carried over.
    """
    cfg = cfg or ReasonerConfig()
    ptr1, heads1, rels1, deg1 = problem.incoming1
    ptr2, heads2, rels2, deg2 = problem.incoming2
    inv1, inv2 = problem.ft1.inv_func, problem.ft2.inv_func
    n2 = snapshot.n_right
    t1, t2, p = snapshot.left, snapshot.right, snapshot.prob
    cost = deg1[t1] * deg2[t2]

    def evidence(rows):
        c = cost[rows]
        rows, c = rows[c > 0], c[c > 0]
        if not len(rows):
            return np.zeros(0, dtype=np.int64), np.zeros(0)
        owner, off = _expand(c)
        d2 = deg2[t2[rows]][owner]
        i1 = ptr1[t1[rows]][owner] + off // d2
        i2 = ptr2[t2[rows]][owner] + off % d2
        r1, r2 = rels1[i1], rels2[i2]
        pp = p[rows][owner]
        x1 = np.minimum(subrel.backward_prob(r2, r1) * inv1[r1] * pp, 1.0)
        x2 = np.minimum(subrel.forward_prob(r1, r2) * inv2[r2] * pp, 1.0)
        live = (x1 > 0) | (x2 > 0)
        with np.errstate(divide="ignore"):
            logf = np.log1p(-x1[live]) + np.log1p(-x2[live])
        return _reduce(heads1[i1[live]] * n2 + heads2[i2[live]], logf)

    chunks = _chunks(cost, cfg.chunk_size)
    keys, logsum = _merge(_map_chunks(evidence, chunks, cfg.workers))
    prob = np.clip(-np.expm1(logsum), 0.0, 1.0)
    left, right = keys // n2, keys % n2

    if cfg.enable_embedding_blend and emb is not None and len(keys):
        sim, has = _pair_similarity(emb, left, right, cfg)
        prob = np.where(has, (1.0 - cfg.beta) * sim + cfg.beta * prob, prob)

    keep = prob > 0
    left, right, prob = left[keep], right[keep], prob[keep]
    keep = _top_k_mask(left, prob, cfg.top_k) | _top_k_mask(right, prob, cfg.top_k)
    left, right, prob = left[keep], right[keep], prob[keep]

    values = snapshot.value_pair_mask()
    return EntityMappingStore(
        np.concatenate([left, snapshot.left[values]]),
        np.concatenate([right, snapshot.right[values]]),
        np.concatenate([prob, snapshot.prob[values]]),
        snapshot.value_left,
        snapshot.value_right,
    )


def _subrelation_direction(left, right, prob, src: InverseAugmentedView, dst: InverseAugmentedView, cfg):
    """``P(r <= r')`` for relations of ``src`` against ``dst`` given matches ``left -> right``."""
    order, ptr = _csr(left, src.n_elements)
    cp_right, cp_prob = right[order], prob[order]
    deg = np.diff(ptr)
    H, R, T = src.heads, src.relations, src.tails
    cost = deg[H] * deg[T]
    dst_keys, dst_rels = dst.pair_index
    n_dst_el, n_dst_rel = dst.n_elements, dst.n_relations

    def partial(rows):
        rows = rows[cost[rows] > 0]
        if not len(rows):
            z = np.zeros(0, dtype=np.int64)
            return (z, np.zeros(0)), (z, np.zeros(0))
        dt = deg[T[rows]]
        owner, off = _expand(cost[rows])
        ih = ptr[H[rows]][owner] + off // dt[owner]
        it = ptr[T[rows]][owner] + off % dt[owner]
        hp, tp = cp_right[ih], cp_right[it]
        with np.errstate(divide="ignore"):
            lq = np.log1p(-np.minimum(cp_prob[ih] * cp_prob[it], 1.0))
        # denominator: any (h', t') matching at all
        den_trip = -np.expm1(np.bincount(owner, weights=lq, minlength=len(rows)))
        den = _reduce(R[rows], den_trip)
        # numerator: (h', t') joined by r' in dst
        key = hp * n_dst_el + tp
        lo = np.searchsorted(dst_keys, key, side="left")
        hi = np.searchsorted(dst_keys, key, side="right")
        owner2, off2 = _expand(hi - lo)
        r2 = dst_rels[lo[owner2] + off2]
        uk, s = _reduce(owner[owner2] * n_dst_rel + r2, lq[owner2])
        num_trip = -np.expm1(s)
        num = _reduce(R[rows][uk // n_dst_rel] * n_dst_rel + uk % n_dst_rel, num_trip)
        return num, den

    parts = _map_chunks(partial, _chunks(cost, cfg.chunk_size), cfg.workers)
    num_k, num_v = _merge([pt[0] for pt in parts])
    den_k, den_v = _merge([pt[1] for pt in parts])
    den = np.zeros(src.n_relations)
    den[den_k] = den_v
    r, r2 = num_k // n_dst_rel, num_k % n_dst_rel
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.where(den[r] > 0, num_v / np.where(den[r] > 0, den[r], 1.0), 0.0)
    val = np.clip(val, 0.0, 1.0)
    keep = val > 0
    return r[keep], r2[keep], val[keep]


def update_subrelation_probs(
    snapshot: EntityMappingStore,
    view1: InverseAugmentedView,
    view2: InverseAugmentedView,
    cfg: Optional[ReasonerConfig] = None,
) -> SubRelationStore:
    """Recompute sub-relation probabilities in both directions from entity matches.

    Only stored (positive) entity matches contribute; a relation none of
    whose triples has a matched head and tail gets probability 0 everywhere.
    """
    cfg = cfg or ReasonerConfig()
    fwd = _subrelation_direction(snapshot.left, snapshot.right, snapshot.prob, view1, view2, cfg)
    bwd = _subrelation_direction(snapshot.right, snapshot.left, snapshot.prob, view2, view1, cfg)
    return SubRelationStore(view1.n_relations, view2.n_relations, None, fwd, bwd)


def run_fixpoint(
    entity: EntityMappingStore,
    subrel: SubRelationStore,
    problem: AlignmentProblem,
    cfg: Optional[ReasonerConfig] = None,
    emb=None,
):
    """Alternate entity and sub-relation sweeps until the entity store settles.

    Returns ``(entity_store, subrel_store, sweeps_run)``.
    """
    cfg = (cfg or ReasonerConfig()).validate()
    sweeps = 0
    for sweeps in range(1, cfg.max_self_iterations + 1):
        new_entity = update_entity_probs(entity, subrel, problem, emb=emb, cfg=cfg)
        subrel = update_subrelation_probs(new_entity, problem.view1, problem.view2, cfg)
        delta = new_entity.max_abs_diff(entity)
        entity = new_entity
        log.debug("sweep %d: %d pairs, max change %.6f", sweeps, len(entity), delta)
        if delta < cfg.convergence_epsilon:
            break
    return entity, subrel, sweeps


# ---------------------------------------------------------------------------
# alignment views


@dataclass
class UnalignedSet:
    left: np.ndarray
    right: np.ndarray

    def __len__(self):
        return len(self.left) + len(self.right)


def extract_alignment(store: EntityMappingStore, threshold: float = 0.1):
    """Mutual-best entity pairs with probability strictly above ``threshold``."""
    if not 0.0 <= threshold < 1.0:
        raise ValueError(f"threshold must lie in [0, 1), got {threshold}")
    left, right, prob = store.mutual_best(entities_only=True)
    keep = prob > threshold
    return [(int(a), int(b), float(p)) for a, b, p in zip(left[keep], right[keep], prob[keep])]


def unaligned_entities(alignment, kg1: KnowledgeGraph, kg2: KnowledgeGraph) -> UnalignedSet:
    """Entities of either graph that take part in no pair of ``alignment``.

    ``alignment`` is an extracted pair list or an :class:`EntityMappingStore`
    (then extracted at threshold 0.1).
    """
    if isinstance(alignment, EntityMappingStore):
        alignment = extract_alignment(alignment, 0.1)
    used1 = np.zeros(kg1.n_elements, dtype=bool)
    used2 = np.zeros(kg2.n_elements, dtype=bool)
    for a, b, *_ in alignment:
        used1[a] = True
        used2[b] = True
    return UnalignedSet(np.flatnonzero(~used1 & ~kg1.value_mask), np.flatnonzero(~used2 & ~kg2.value_mask))


def prase_init(prev_entity: EntityMappingStore, prev_subrel: SubRelationStore, se_pred, cfg, bootstrap=None):
    """Re-initialize reasoner state from the previous round and embedding predictions.

    Previously aligned pairs (mutual best above ``cfg.delta_f``) start at
    ``alpha1 * P``; otherwise an embedding prediction with score above
    ``cfg.delta1`` starts at ``alpha2 * S``; everything else is absent.  The
    sub-relation store is carried over unchanged.  ``cfg`` needs ``alpha1``,
    ``alpha2``, ``delta1``, ``delta_f`` and optionally ``use_se_mappings``.
    """
    pairs: dict[tuple[int, int], float] = {}
    for a, b, p in extract_alignment(prev_entity, cfg.delta_f):
        pairs[(a, b)] = cfg.alpha1 * p
    if se_pred is not None and getattr(cfg, "use_se_mappings", True):
        for a, b, s in se_pred:
            if (a, b) not in pairs and s > cfg.delta1:
                pairs[(a, b)] = cfg.alpha2 * s
    if bootstrap is not None:
        for a, b, p in zip(bootstrap.left, bootstrap.right, bootstrap.prob):
            pairs[(int(a), int(b))] = float(p)
    store = EntityMappingStore.from_dict(pairs, prev_entity.value_left, prev_entity.value_right)
    return store, prev_subrel

