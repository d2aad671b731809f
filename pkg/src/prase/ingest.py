"""Dataset loading, mapping files, and synthetic perturbed-copy graph pairs.

The on-disk layout is OpenEA's: ``rel_triples_1``, ``rel_triples_2``,
``attr_triples_1``, ``attr_triples_2`` (three tab-separated fields per
line) and ``ent_links`` (two fields).  Files are UTF-8 and split on single
tabs with no quoting.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kg import KnowledgeGraph, KnowledgeGraphBuilder

log = logging.getLogger(__name__)

REL_FILES = ("rel_triples_1", "rel_triples_2")
ATTR_FILES = ("attr_triples_1", "attr_triples_2")
LINKS_FILE = "ent_links"


class DataError(Exception):
    """Base class for dataset problems (missing, malformed, inconsistent)."""


class LoadError(DataError):
    pass


class ParseError(DataError):
    pass


class IntegrityError(DataError):
    pass


class ConfigError(ValueError):
    pass


@dataclass
class DatasetPair:
    kg1: KnowledgeGraph
    kg2: KnowledgeGraph
    gold: list = field(default_factory=list)

    def gold_ids(self):
        """Gold pairs as ``(id1, id2)`` entity ids."""
        return [(self.kg1.entity_id(a), self.kg2.entity_id(b)) for a, b in self.gold]

    def check(self):
        if len(set(self.gold)) != len(self.gold):
            raise IntegrityError("gold links contain duplicate pairs")
        for a, b in self.gold:
            for kg, lab in ((self.kg1, a), (self.kg2, b)):
                try:
                    kg.entity_id(lab)
                except KeyError:
                    raise IntegrityError(f"gold label {lab!r} is not an entity of {kg.name}") from None
        return self


def _read_tsv(path: Path, n_fields: int):
    if not path.is_file():
        raise LoadError(f"missing dataset file: {path}")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != n_fields:
                raise ParseError(f"{path}:{lineno}: expected {n_fields} tab-separated fields, got {len(parts)}")
            yield parts


def load_kg(rel_path, attr_path=None, name="kg") -> KnowledgeGraph:
    b = KnowledgeGraphBuilder(name)
    for h, r, t in _read_tsv(Path(rel_path), 3):
        b.add_relation_triple(h, r, t)
    if attr_path is not None:
        for e, a, v in _read_tsv(Path(attr_path), 3):
            b.add_attribute_triple(e, a, v)
    return b.freeze()


def read_links(path):
    return [(a, b) for a, b in _read_tsv(Path(path), 2)]


def load_openea(dir_path) -> DatasetPair:
    """Load both graphs and the gold links of an OpenEA-style dataset directory.

    Split sub-directories (``721_5fold`` and the like) are ignored; all of
    ``ent_links`` serves as test gold.
    """
    d = Path(dir_path)
    if not d.is_dir():
        raise LoadError(f"dataset directory not found: {d}")
    for fname in REL_FILES + ATTR_FILES + (LINKS_FILE,):
        if not (d / fname).is_file():
            raise LoadError(f"missing dataset file: {d / fname}")
    kg1 = load_kg(d / REL_FILES[0], d / ATTR_FILES[0], name="kg1")
    kg2 = load_kg(d / REL_FILES[1], d / ATTR_FILES[1], name="kg2")
    pair = DatasetPair(kg1, kg2, read_links(d / LINKS_FILE)).check()
    log.info("loaded %s: kg1 %s, kg2 %s, %d gold links", d, kg1.stats(), kg2.stats(), len(pair.gold))
    return pair


def dump_openea(pair: DatasetPair, dir_path) -> None:
    """Write ``pair`` in the OpenEA layout so :func:`load_openea` reads it back."""
    d = Path(dir_path)
    d.mkdir(parents=True, exist_ok=True)
    for kg, rel_name, attr_name in ((pair.kg1, *[f[0] for f in (REL_FILES, ATTR_FILES)]),
                                    (pair.kg2, *[f[1] for f in (REL_FILES, ATTR_FILES)])):
        with open(d / rel_name, "w", encoding="utf-8") as rf, open(d / attr_name, "w", encoding="utf-8") as af:
            for h, r, t in kg.triples():
                out = af if kg.attribute_mask[r] else rf
                out.write(f"{kg.entity_labels[h]}\t{kg.relation_labels[r]}\t{kg.entity_labels[t]}\n")
    with open(d / LINKS_FILE, "w", encoding="utf-8") as fh:
        for a, b in pair.gold:
            fh.write(f"{a}\t{b}\n")


def write_mappings(mappings, out_path) -> None:
    """Write ``(label1, label2, prob)`` rows, highest probability first."""
    rows = sorted(mappings, key=lambda m: (-m[2], m[0], m[1]))
    for _, _, p in rows:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability out of range: {p}")
    with open(out_path, "w", encoding="utf-8") as fh:
        for a, b, p in rows:
            fh.write(f"{a}\t{b}\t{p:.6f}\n")


def read_mappings(path):
    return [(a, b, float(p)) for a, b, p in _read_tsv(Path(path), 3)]


# ---------------------------------------------------------------------------
# synthetic data


@dataclass
class PerturbationSpec:
    triple_drop_rate: float = 0.0
    attribute_drop_rate: float = 0.0
    literal_corruption_rate: float = 0.0
    rename_seed: int = 0

    def validate(self):
        for name in ("triple_drop_rate", "attribute_drop_rate", "literal_corruption_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        return self


KG2_PREFIX = "http://kg2.example.org/"


def synthesize_pair(kg: KnowledgeGraph, spec: PerturbationSpec) -> DatasetPair:
    """Build a renamed, thinned, partly corrupted copy of ``kg`` and pair it with ``kg``.

    Every entity, relation and attribute gets a fresh opaque label; dropped
    and corrupted triples are chosen at random from ``spec.rename_seed``.
    Gold links cover the entities that still occur in the copy.
    """
    spec.validate()
    rng = np.random.default_rng(spec.rename_seed)
    ent_perm = rng.permutation(kg.n_elements)
    rel_perm = rng.permutation(kg.n_relations)

    def ent_label(i):
        return f"{KG2_PREFIX}resource/e{ent_perm[i]:07d}"

    def rel_label(r):
        kind = "attribute" if kg.attribute_mask[r] else "property"
        return f"{KG2_PREFIX}{kind}/p{rel_perm[r]:05d}"

    is_attr = kg.attribute_mask[kg.relations]
    drop_roll = rng.random(kg.n_triples)
    rate = np.where(is_attr, spec.attribute_drop_rate, spec.triple_drop_rate)
    survive = drop_roll >= rate
    corrupt = is_attr & (rng.random(kg.n_triples) < spec.literal_corruption_rate)
    tokens = rng.integers(0, 2**48, size=kg.n_triples)
    order = rng.permutation(kg.n_triples)

    b = KnowledgeGraphBuilder("kg2")
    for i in order:
        if not survive[i]:
            continue
        h, r, t = int(kg.heads[i]), int(kg.relations[i]), int(kg.tails[i])
        if is_attr[i]:
            value = f"tok{tokens[i]:012x}" if corrupt[i] else kg.entity_labels[t]
            b.add_attribute_triple(ent_label(h), rel_label(r), value)
        else:
            b.add_relation_triple(ent_label(h), rel_label(r), ent_label(t))
    if not b._triples:
        # keep the copy well-formed even when everything was dropped
        b.add_attribute_triple(f"{KG2_PREFIX}resource/placeholder", f"{KG2_PREFIX}attribute/placeholder", "placeholder")
    kg2 = b.freeze()
    gold = []
    for e in kg.entity_ids:
        lab = ent_label(e)
        try:
            kg2.entity_id(lab)
        except KeyError:
            continue
        gold.append((kg.label(e), lab))
    return DatasetPair(kg, kg2, gold)


_SYLLABLES = [c + v for c in "bcdfghjklmnprstvz" for v in "aeiou"]


def _word(rng, lo=2, hi=4):
    return "".join(_SYLLABLES[k] for k in rng.integers(0, len(_SYLLABLES), rng.integers(lo, hi + 1))).capitalize()


def generate_kg(
    n_entities: int = 1000,
    n_relations: int = 12,
    relation_degree: float = 5.0,
    name_coverage: float = 0.9,
    seed: int = 0,
    prefix: str = "http://kg1.example.org/",
) -> KnowledgeGraph:
    """Random graph with mixed-functionality relations and a few literal attributes.

    Half of the relations are functional (one tail per head, heavy-tailed
    tail popularity); the rest are many-to-many.  Attributes: a mostly
    unique ``name``, a shared ``year``, a ``category`` with ten values and a
    sparse unique ``code``.
    """
    rng = np.random.default_rng(seed)
    ents = [f"{prefix}resource/{_word(rng)}_{i}" for i in range(n_entities)]
    b = KnowledgeGraphBuilder("kg1")
    n_rel_triples = int(relation_degree * n_entities / 2)
    weights = rng.dirichlet(np.ones(n_relations)) * n_rel_triples
    popularity = 1.0 / np.arange(1, n_entities + 1) ** 0.8
    popularity = popularity[rng.permutation(n_entities)]
    popularity /= popularity.sum()
    seen = set()
    for r in range(n_relations):
        rel = f"{prefix}property/rel{r}"
        count = max(1, int(weights[r]))
        functional = r % 2 == 0
        if functional:
            heads = rng.choice(n_entities, size=min(count, n_entities), replace=False)
            tails = rng.choice(n_entities, size=len(heads), p=popularity)
        else:
            heads = rng.integers(0, n_entities, count)
            tails = rng.integers(0, n_entities, count)
        for h, t in zip(heads.tolist(), tails.tolist()):
            if h == t or (h, r, t) in seen:
                continue
            seen.add((h, r, t))
            b.add_relation_triple(ents[h], rel, ents[t])
    names = set()
    for i in range(n_entities):
        if rng.random() < name_coverage:
            name = _word(rng, 3, 5)
            while name in names:
                name = _word(rng, 3, 5)
            names.add(name)
            b.add_attribute_triple(ents[i], f"{prefix}attribute/name", name)
        if rng.random() < 0.5:
            b.add_attribute_triple(ents[i], f"{prefix}attribute/year", str(int(rng.integers(1800, 2021))))
        b.add_attribute_triple(ents[i], f"{prefix}attribute/category", f"cat{int(rng.integers(0, 10))}")
        if rng.random() < 0.3:
            b.add_attribute_triple(ents[i], f"{prefix}attribute/code", f"C{i:05d}-{int(rng.integers(0, 10**6)):06d}")
    return b.freeze()


__all__ = [
    "ConfigError", "DataError", "DatasetPair", "IntegrityError", "LoadError", "ParseError",
    "PerturbationSpec", "dump_openea", "generate_kg", "load_kg", "load_openea", "read_links", "read_mappings",
    "synthesize_pair", "write_mappings",
]
