import numpy as np
import pytest

from prase.embedding import EmbeddingSet
from prase.kg import KnowledgeGraphBuilder


def make_kg(relation_triples=(), attribute_triples=(), name="kg"):
    b = KnowledgeGraphBuilder(name)
    for h, r, t in relation_triples:
        b.add_relation_triple(h, r, t)
    for e, a, v in attribute_triples:
        b.add_attribute_triple(e, a, v)
    return b.freeze()


def fixed_embeddings(kg1, kg2, vectors1: dict, vectors2: dict, dim=2):
    """EmbeddingSet with hand-set vectors keyed by entity label."""
    left = np.zeros((kg1.n_elements, dim))
    right = np.zeros((kg2.n_elements, dim))
    lm = np.zeros(kg1.n_elements, dtype=bool)
    rm = np.zeros(kg2.n_elements, dtype=bool)
    for label, v in vectors1.items():
        i = kg1.entity_id(label)
        left[i], lm[i] = v, True
    for label, v in vectors2.items():
        i = kg2.entity_id(label)
        right[i], rm[i] = v, True
    return EmbeddingSet(left, right, np.zeros((0, dim)), np.zeros((0, dim)), np.eye(dim), lm, rm)


@pytest.fixture
def twin_pair():
    """Ten-entity twin graphs where every entity carries a unique shared literal."""
    names = [f"e{i}" for i in range(10)]
    rel1 = [(f"a:{names[i]}", "a:next", f"a:{names[(i + 1) % 10]}") for i in range(10)]
    rel2 = [(f"b:{names[i]}", "b:follows", f"b:{names[(i + 1) % 10]}") for i in range(10)]
    att1 = [(f"a:{n}", "a:label", f"name {n}") for n in names]
    att2 = [(f"b:{n}", "b:title", f"name {n}") for n in names]
    kg1 = make_kg(rel1, att1, "left")
    kg2 = make_kg(rel2, att2, "right")
    gold = [(f"a:{n}", f"b:{n}") for n in names]
    return kg1, kg2, gold


def gradient_check_instance(seed=0, dim=4):
    """5-entity, 3-relation toy problem for each graph plus two seed pairs."""
    rng = np.random.default_rng(seed)
    pos = np.array([[0, 0, 1], [1, 1, 2], [2, 2, 3], [3, 0, 4], [4, 1, 0]])
    neg = np.array([[0, 0, 3], [4, 1, 2], [2, 2, 0], [1, 0, 4], [4, 1, 3]])
    from prase.embedding import Params

    params = Params(
        ent1=rng.normal(size=(5, dim)),
        rel1=rng.normal(size=(3, dim)),
        ent2=rng.normal(size=(5, dim)),
        rel2=rng.normal(size=(3, dim)),
        transform=np.eye(dim) + 0.1 * rng.normal(size=(dim, dim)),
    )
    seeds = np.array([[0, 0], [2, 3]])
    return params, pos, neg, pos[::-1].copy(), neg[::-1].copy(), seeds


def max_relative_gradient_error(seed=0, h=1e-5, n_coords=20, margin=3.0):
    """Worst relative gap between analytic and central-difference gradients over sampled coordinates."""
    from prase.embedding import loss_and_grad

    params, pos1, neg1, pos2, neg2, seeds = gradient_check_instance(seed)
    _, grad = loss_and_grad(params, pos1, neg1, pos2, neg2, seeds, margin)
    rng = np.random.default_rng(seed + 1)
    arrays, grads = params.arrays(), grad.arrays()
    worst = 0.0
    for _ in range(n_coords):
        k = rng.integers(len(arrays))
        idx = tuple(rng.integers(s) for s in arrays[k].shape)
        old = arrays[k][idx]
        arrays[k][idx] = old + h
        up, _ = loss_and_grad(params, pos1, neg1, pos2, neg2, seeds, margin)
        arrays[k][idx] = old - h
        down, _ = loss_and_grad(params, pos1, neg1, pos2, neg2, seeds, margin)
        arrays[k][idx] = old
        numeric = (up - down) / (2 * h)
        analytic = grads[k][idx]
        worst = max(worst, abs(numeric - analytic) / max(abs(numeric), abs(analytic), 1e-8))
    return worst
