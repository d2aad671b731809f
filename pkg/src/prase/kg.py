"""In-memory knowledge graphs with integer-interned identifiers.

A graph is assembled with :class:`KnowledgeGraphBuilder` and then frozen into
an immutable :class:`KnowledgeGraph`.  Entities and literal values share one
id space, relations and attributes share another.
"""
from __future__ import annotations

import enum
import re
import unicodedata
from functools import cached_property

import numpy as np


class KGUsageError(RuntimeError):
    """Raised when a builder or graph is used out of its lifecycle."""


class Namespace(enum.Enum):
    ENTITY = "entity"
    RELATION = "relation"


_TYPED_LITERAL = re.compile(r'^"(.*)"(?:\^\^\S+|@[A-Za-z][A-Za-z0-9-]*)?$', re.DOTALL)


def normalize_label(label: str, is_literal: bool = False) -> str:
    """NFC-normalize and trim a label; literals also lose quotes and datatype/language tags."""
    text = unicodedata.normalize("NFC", label).strip()
    if is_literal:
        m = _TYPED_LITERAL.match(text)
        if m:
            text = m.group(1).strip()
    return text


def _csr(keys: np.ndarray, n: int):
    order = np.argsort(keys, kind="stable")
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(keys, minlength=n), out=ptr[1:])
    return order, ptr


class KnowledgeGraphBuilder:
    """Mutable, single-writer staging area for a :class:`KnowledgeGraph`."""

    def __init__(self, name: str = "kg"):
        self.name = name
        self._ids = {Namespace.ENTITY: {}, Namespace.RELATION: {}}
        self._labels = {Namespace.ENTITY: [], Namespace.RELATION: []}
        self._flags = {Namespace.ENTITY: [], Namespace.RELATION: []}
        self._triples: list[tuple[int, int, int]] = []
        self._frozen = False

    def intern(self, label: str, namespace: Namespace = Namespace.ENTITY, is_literal: bool = False) -> int:
        """Return the id for ``label``, allocating the next dense id if unseen.

        In the relation namespace ``is_literal`` marks the id as an attribute.
        """
        if self._frozen:
            raise KGUsageError("cannot intern into a frozen knowledge graph")
        namespace = Namespace(namespace)
        text = normalize_label(label, is_literal and namespace is Namespace.ENTITY)
        key = (text, bool(is_literal))
        table = self._ids[namespace]
        idx = table.get(key)
        if idx is None:
            idx = len(self._labels[namespace])
            table[key] = idx
            self._labels[namespace].append(text)
            self._flags[namespace].append(bool(is_literal))
        return idx

    def add_ids(self, head: int, relation: int, tail: int) -> None:
        if self._frozen:
            raise KGUsageError("cannot add triples to a frozen knowledge graph")
        ent_flags = self._flags[Namespace.ENTITY]
        rel_flags = self._flags[Namespace.RELATION]
        if not (0 <= head < len(ent_flags) and 0 <= tail < len(ent_flags) and 0 <= relation < len(rel_flags)):
            raise KGUsageError(f"triple ({head}, {relation}, {tail}) references unknown ids")
        if ent_flags[head]:
            raise KGUsageError(f"literal {self._labels[Namespace.ENTITY][head]!r} cannot be a triple head")
        if rel_flags[relation] != ent_flags[tail]:
            kind = "attribute" if rel_flags[relation] else "relation"
            raise KGUsageError(f"{kind} triple has a tail of the wrong kind: {self._labels[Namespace.ENTITY][tail]!r}")
        self._triples.append((head, relation, tail))

    def add_relation_triple(self, head: str, relation: str, tail: str) -> None:
        self.add_ids(
            self.intern(head),
            self.intern(relation, Namespace.RELATION),
            self.intern(tail),
        )

    def add_attribute_triple(self, entity: str, attribute: str, value: str) -> None:
        self.add_ids(
            self.intern(entity),
            self.intern(attribute, Namespace.RELATION, is_literal=True),
            self.intern(value, is_literal=True),
        )

    def freeze(self) -> "KnowledgeGraph":
        if self._frozen:
            raise KGUsageError("knowledge graph already frozen")
        if not self._triples:
            raise KGUsageError(f"knowledge graph {self.name!r} has no triples")
        self._frozen = True
        triples = np.array(self._triples, dtype=np.int64).reshape(-1, 3)
        return KnowledgeGraph(
            name=self.name,
            entity_labels=tuple(self._labels[Namespace.ENTITY]),
            value_mask=np.array(self._flags[Namespace.ENTITY], dtype=bool),
            relation_labels=tuple(self._labels[Namespace.RELATION]),
            attribute_mask=np.array(self._flags[Namespace.RELATION], dtype=bool),
            triples=triples,
        )


class KnowledgeGraph:
    """Frozen graph ``(E, R, A, V, T_R, T_A)`` with head/tail and literal indexes.

    ``heads``, ``relations`` and ``tails`` are parallel read-only arrays over
    all triples, relation and attribute triples alike.
    """

    def __init__(self, name, entity_labels, value_mask, relation_labels, attribute_mask, triples):
        self.name = name
        self.entity_labels = entity_labels
        self.relation_labels = relation_labels
        self.value_mask = value_mask
        self.attribute_mask = attribute_mask
        self.heads = triples[:, 0].copy()
        self.relations = triples[:, 1].copy()
        self.tails = triples[:, 2].copy()
        for arr in (self.heads, self.relations, self.tails, self.value_mask, self.attribute_mask):
            arr.setflags(write=False)
        self._head_order, self._head_ptr = _csr(self.heads, self.n_elements)
        self._tail_order, self._tail_ptr = _csr(self.tails, self.n_elements)
        self._entity_index = {lab: i for i, lab in enumerate(entity_labels) if not value_mask[i]}
        self._relation_index = {(lab, bool(attribute_mask[i])): i for i, lab in enumerate(relation_labels)}
        self._literal_index: dict[str, frozenset[int]] = {}
        for i in np.flatnonzero(value_mask):
            self._literal_index[entity_labels[i]] = frozenset({int(i)})

    def __repr__(self):
        return (
            f"KnowledgeGraph({self.name!r}, entities={self.n_entities}, values={self.n_values}, "
            f"relations={self.n_relations_only}, attributes={self.n_attributes}, triples={self.n_triples})"
        )

    # sizes
    @property
    def n_elements(self) -> int:
        """|E+|, entities plus values."""
        return len(self.entity_labels)

    @property
    def n_relations(self) -> int:
        """|R+|, relations plus attributes."""
        return len(self.relation_labels)

    @property
    def n_triples(self) -> int:
        return len(self.heads)

    @cached_property
    def entity_ids(self) -> np.ndarray:
        return np.flatnonzero(~self.value_mask)

    @cached_property
    def value_ids(self) -> np.ndarray:
        return np.flatnonzero(self.value_mask)

    @property
    def n_entities(self) -> int:
        return len(self.entity_ids)

    @property
    def n_values(self) -> int:
        return len(self.value_ids)

    @property
    def n_attributes(self) -> int:
        return int(self.attribute_mask.sum())

    @property
    def n_relations_only(self) -> int:
        return self.n_relations - self.n_attributes

    @cached_property
    def relation_triple_mask(self) -> np.ndarray:
        return ~self.attribute_mask[self.relations]

    @property
    def n_relation_triples(self) -> int:
        return int(self.relation_triple_mask.sum())

    @property
    def n_attribute_triples(self) -> int:
        return self.n_triples - self.n_relation_triples

    def stats(self) -> dict:
        return {
            "entities": self.n_entities,
            "values": self.n_values,
            "relations": self.n_relations_only,
            "attributes": self.n_attributes,
            "relation_triples": self.n_relation_triples,
            "attribute_triples": self.n_attribute_triples,
        }

    # lookups
    def triples(self):
        """Iterate ``(head, relation, tail)`` id tuples in insertion order."""
        return zip(self.heads.tolist(), self.relations.tolist(), self.tails.tolist())

    def triples_by_head(self, element: int) -> np.ndarray:
        """Indices of the triples whose head is ``element``."""
        return self._head_order[self._head_ptr[element]:self._head_ptr[element + 1]]

    def triples_by_tail(self, element: int) -> np.ndarray:
        return self._tail_order[self._tail_ptr[element]:self._tail_ptr[element + 1]]

    def literal_lookup(self, text: str) -> frozenset[int]:
        return self._literal_index.get(normalize_label(text, True), frozenset())

    def literal_texts(self) -> dict[str, frozenset[int]]:
        return dict(self._literal_index)

    def entity_id(self, label: str) -> int:
        """Id of the (non-literal) entity ``label``; ``KeyError`` if absent."""
        return self._entity_index[normalize_label(label)]

    def relation_id(self, label: str, attribute: bool = False) -> int:
        return self._relation_index[(normalize_label(label), attribute)]

    def label(self, element: int) -> str:
        return self.entity_labels[element]

    def is_value(self, element: int) -> bool:
        return bool(self.value_mask[element])

    @cached_property
    def relation_entity_mask(self) -> np.ndarray:
        """Entities taking part in at least one relation triple."""
        mask = np.zeros(self.n_elements, dtype=bool)
        rel = self.relation_triple_mask
        mask[self.heads[rel]] = True
        mask[self.tails[rel]] = True
        return mask


class InverseAugmentedView:
    """A graph viewed together with one inverse relation per relation.

    Inverse of relation ``r`` has id ``r + base.n_relations``; the triple
    ``(t, r-, h)`` exists for each base triple ``(h, r, t)``.  Only index
    arrays are built; the triple list itself is derived on demand.
    """

    def __init__(self, base: KnowledgeGraph):
        self.base = base
        self.n_base_relations = base.n_relations
        self.n_relations = 2 * base.n_relations
        self.n_elements = base.n_elements
        heads, rels, tails = self._augmented()
        # incoming-edge index: for each node t, the (head, relation) pairs of triples ending at t
        order, ptr = _csr(tails, self.n_elements)
        self.in_ptr = ptr
        self.in_heads = heads[order]
        self.in_relations = rels[order]
        self.in_degree = np.diff(ptr)

    def _augmented(self):
        b = self.base
        n = b.n_relations
        return (
            np.concatenate([b.heads, b.tails]),
            np.concatenate([b.relations, b.relations + n]),
            np.concatenate([b.tails, b.heads]),
        )

    @property
    def n_triples(self) -> int:
        return 2 * self.base.n_triples

    @property
    def heads(self) -> np.ndarray:
        return np.concatenate([self.base.heads, self.base.tails])

    @property
    def relations(self) -> np.ndarray:
        return np.concatenate([self.base.relations, self.base.relations + self.n_base_relations])

    @property
    def tails(self) -> np.ndarray:
        return np.concatenate([self.base.tails, self.base.heads])

    def triples(self):
        return zip(self.heads.tolist(), self.relations.tolist(), self.tails.tolist())

    def inverse(self, relation):
        """Id of the inverse of ``relation`` (works elementwise on arrays)."""
        return (relation + self.n_base_relations) % self.n_relations

    def is_inverse(self, relation) -> bool:
        return relation >= self.n_base_relations

    def relation_label(self, relation: int) -> str:
        lab = self.base.relation_labels[relation % self.n_base_relations]
        return lab + "^-1" if relation >= self.n_base_relations else lab

    @cached_property
    def pair_index(self):
        """Sorted ``head * n + tail`` keys with their relations, for (h, t) -> relations lookups."""
        heads, rels, tails = self._augmented()
        keys = heads * self.n_elements + tails
        order = np.lexsort((rels, keys))
        return keys[order], rels[order]


def augment_inverses(kg: KnowledgeGraph) -> InverseAugmentedView:
    return InverseAugmentedView(kg)
