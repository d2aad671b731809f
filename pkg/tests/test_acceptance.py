"""End-to-end acceptance checks.

Each test prints one ``ACCEPT <name>: PASS|FAIL`` line with the measured
values, then asserts.  Run with ``pytest tests/test_acceptance.py -s`` (or
``-v``; the lines are emitted outside output capture either way).
"""
import os
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from prase.config import PraseConfig
from prase.ingest import PerturbationSpec, generate_kg, load_openea, synthesize_pair, write_mappings
from prase.kg import augment_inverses
from prase.orchestrator import run
from prase.reasoner import (
    AlignmentProblem,
    EntityMappingStore,
    ReasonerConfig,
    compute_functionalities,
    init_subrelations,
    update_entity_probs,
    update_subrelation_probs,
)

from conftest import fixed_embeddings, make_kg, max_relative_gradient_error

DW15K_DIR = Path(os.environ.get("PRASE_DW15K_DIR", Path(__file__).resolve().parent.parent / "data" / "D_W_15K_V1"))


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPT {name}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail

    return emit


def _brute_functionality(triples, r):
    pairs = {(h, t) for h, rr, t in triples if rr == r}
    if not pairs:
        return Fraction(0), Fraction(0)
    return Fraction(len({h for h, _ in pairs}), len(pairs)), Fraction(len({t for _, t in pairs}), len(pairs))


def test_functionality_oracle(report):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(500):
        n_rel = int(rng.integers(1, 6))
        n_ent = int(rng.integers(2, 15))
        m = int(rng.integers(1, 51))
        triples = [(f"e{rng.integers(n_ent)}", f"r{rng.integers(n_rel)}", f"e{rng.integers(n_ent)}") for _ in range(m)]
        kg = make_kg(triples)
        view = augment_inverses(kg)
        ft = compute_functionalities(view)
        aug = list(view.triples())
        mismatches += sum(ft.as_fractions(r) != _brute_functionality(aug, r) for r in range(view.n_relations))
    elapsed = time.perf_counter() - t0
    report("functionality-oracle", mismatches == 0 and elapsed < 10,
           f"500 graphs, {mismatches} mismatches, {elapsed:.2f}s")


def _hand_fixtures():
    out = {}

    def single(names1, names2, emb=None, cfg=None):
        kg1 = make_kg([("a:x", "a:r", "a:y")], [("a:h", f"a:p{i}", n) for i, n in enumerate(names1)])
        kg2 = make_kg([("b:x", "b:r", "b:y")], [("b:h", f"b:p{i}", n) for i, n in enumerate(names2)])
        problem = AlignmentProblem(kg1, kg2)
        e = emb(kg1, kg2) if emb else None
        store = update_entity_probs(problem.bootstrap, init_subrelations(kg1, kg2, 0.1), problem, emb=e, cfg=cfg)
        return store.get(kg1.entity_id("a:h"), kg2.entity_id("b:h"))

    out["entity, one evidence pair"] = (single(["Paris"], ["Paris"]), 0.19)
    out["entity, two evidence pairs"] = (single(["Paris", "1889"], ["Paris", "1889"]), 0.3439)
    out["blended update"] = (
        single(["Paris"], ["Paris"],
               emb=lambda k1, k2: fixed_embeddings(k1, k2, {"a:h": [1.0, 0.0]}, {"b:h": [0.5, np.sqrt(3) / 2]}),
               cfg=ReasonerConfig(beta=0.8, enable_embedding_blend=True)),
        0.252,
    )
    kg1 = make_kg([("a", "r", "b"), ("c", "r", "d")])
    kg2 = make_kg([("a2", "r2", "b2"), ("c2", "s2", "x2"), ("x2", "s2", "d2")])
    snap = EntityMappingStore.from_dict(
        {(kg1.entity_id(x), kg2.entity_id(x + "2")): 1.0 for x in "abcd"}, kg1.value_mask, kg2.value_mask)
    sub = update_subrelation_probs(snap, augment_inverses(kg1), augment_inverses(kg2))
    out["sub-relation, half supported"] = (sub.forward_prob(kg1.relation_id("r"), kg2.relation_id("r2")), 0.5)
    return out


def test_hand_worked_fixtures(report):
    t0 = time.perf_counter()
    fixtures = _hand_fixtures()
    elapsed = time.perf_counter() - t0
    errors = {k: abs(got - want) for k, (got, want) in fixtures.items()}
    detail = ", ".join(f"{k}={fixtures[k][0]:.10f}" for k in fixtures) + f"; {elapsed:.3f}s"
    report("hand-worked-fixtures", max(errors.values()) < 1e-9 and elapsed < 1.0, detail)


def test_gradient_check(report):
    t0 = time.perf_counter()
    worst = max(max_relative_gradient_error(seed, h=1e-5) for seed in range(3))
    elapsed = time.perf_counter() - t0
    report("embedding-gradient-check", worst < 1e-4 and elapsed < 5, f"max rel err {worst:.2e}, {elapsed:.2f}s")


def test_synthetic_paris(report):
    kg = generate_kg(1000, seed=0)
    pair = synthesize_pair(kg, PerturbationSpec(triple_drop_rate=0.2, rename_seed=0))
    t0 = time.perf_counter()
    _, rep = run(pair, PraseConfig(K=0))
    elapsed = time.perf_counter() - t0
    m = rep.metrics
    report("synthetic-paris", m["f1"] >= 0.90 and elapsed < 60,
           f"P={m['precision']:.4f} R={m['recall']:.4f} F1={m['f1']:.4f}, {elapsed:.1f}s")


_UPLIFT_CACHE = {}


def uplift_runs(seed):
    """PARIS and both-feedback PRASE on the 40%-corruption instance for one rng seed."""
    if seed not in _UPLIFT_CACHE:
        kg = generate_kg(1000, seed=seed)
        pair = synthesize_pair(kg, PerturbationSpec(0.2, 0.0, 0.4, rename_seed=seed))
        paris = run(pair, PraseConfig(K=0))[1].metrics
        both = run(pair, PraseConfig(K=1))[1].metrics
        _UPLIFT_CACHE[seed] = (pair, paris, both)
    return _UPLIFT_CACHE[seed]


def test_prase_uplift(report):
    t0 = time.perf_counter()
    ok, parts = True, []
    for seed in (0, 1, 2):
        _, paris, both = uplift_runs(seed)
        good = both["recall"] >= paris["recall"] and both["f1"] >= paris["f1"] - 0.01
        ok &= good
        parts.append(f"seed {seed}: R {paris['recall']:.4f}->{both['recall']:.4f}, "
                     f"F1 {paris['f1']:.4f}->{both['f1']:.4f}")
    elapsed = time.perf_counter() - t0
    report("prase-uplift", ok and elapsed < 600, "; ".join(parts) + f"; {elapsed:.0f}s")


def test_ablation_consistency(report):
    pair, paris, both = uplift_runs(0)
    lo = min(paris["f1"], both["f1"]) - 0.02
    hi = max(paris["f1"], both["f1"]) + 0.02
    f1 = {mode: run(pair, PraseConfig(K=1, feedback_mode=mode))[1].metrics["f1"]
          for mode in ("mappings_only", "embeddings_only")}
    ok = all(lo <= v <= hi for v in f1.values())
    report("ablation-consistency", ok,
           f"PARIS {paris['f1']:.4f}, both {both['f1']:.4f}, "
           + ", ".join(f"{k} {v:.4f}" for k, v in f1.items()) + f", band [{lo:.4f}, {hi:.4f}]")


def test_determinism(report, tmp_path):
    kg = generate_kg(400, seed=6)
    pair = synthesize_pair(kg, PerturbationSpec(0.2, 0.1, 0.4, rename_seed=6))
    paths = []
    for i in range(2):
        mappings, _ = run(pair, PraseConfig(K=1))
        path = tmp_path / f"run{i}.tsv"
        write_mappings(mappings, path)
        paths.append(path)
    a, b = (p.read_bytes() for p in paths)
    report("determinism", a == b and len(a) > 0, f"{len(a)} bytes, identical={a == b}")


@pytest.mark.skipif(not DW15K_DIR.is_dir(), reason=f"D-W-15K not found at {DW15K_DIR} (set PRASE_DW15K_DIR)")
def test_dw15k_reproduction(report):
    t0 = time.perf_counter()
    pair = load_openea(DW15K_DIR)
    stats = pair.kg1.stats()
    _, paris = run(pair, PraseConfig(K=0))
    _, prase = run(pair, PraseConfig(K=1))
    elapsed = time.perf_counter() - t0
    p, q = paris.metrics["f1"], prase.metrics["f1"]
    ok = abs(p - 0.897) <= 0.05 and q > p and elapsed < 1800
    report("dw15k-reproduction", ok,
           f"kg1 relations={stats['relations']} attributes={stats['attributes']}, "
           f"PARIS F1={p:.4f}, PRASE F1={q:.4f}, {elapsed:.0f}s")
