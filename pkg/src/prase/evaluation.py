"""Alignment scoring (precision/recall/F1, Hits@1) and the edit-distance name baseline."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kg import KnowledgeGraph


@dataclass(frozen=True)
class AlignmentMetrics:
    precision: float
    recall: float
    f1: float
    true_positives: int
    predicted: int
    gold_size: int

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "true_positives": self.true_positives,
            "predicted": self.predicted,
            "gold_size": self.gold_size,
        }

    def table(self, name: str = "model") -> str:
        head = f"{'Model':<16}{'P':>8}{'R':>8}{'F1':>8}"
        row = f"{name:<16}{self.precision:>8.3f}{self.recall:>8.3f}{self.f1:>8.3f}"
        return head + "\n" + row

    def to_kv(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.as_dict().items())


def f1_score(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


def score(predicted, gold) -> AlignmentMetrics:
    """Set-based P/R/F1 of predicted pairs against gold pairs.

    Extra tuple fields (e.g. probabilities) on predictions are ignored and
    duplicates are collapsed.  Empty predictions score 0 across the board.
    """
    gold_set = {(a, b) for a, b, *_ in gold}
    if not gold_set:
        raise ValueError("gold alignment is empty")
    pred_set = {(a, b) for a, b, *_ in predicted}
    tp = len(pred_set & gold_set)
    precision = tp / len(pred_set) if pred_set else 0.0
    recall = tp / len(gold_set)
    return AlignmentMetrics(precision, recall, f1_score(precision, recall), tp, len(pred_set), len(gold_set))


def hits_at_1(predictions, gold, restricted_to) -> Optional[float]:
    """Share of gold KG1 entities inside ``restricted_to.left`` whose predicted partner is correct.

    Returns None when no gold entity falls inside the restricted set.
    """
    allowed = set(np.asarray(restricted_to.left).tolist())
    gold_map = {a: b for a, b, *_ in gold if a in allowed}
    if not gold_map:
        return None
    pred_map = {a: b for a, b, *_ in predictions}
    hits = sum(1 for a, b in gold_map.items() if pred_map.get(a) == b)
    return hits / len(gold_map)


# ---------------------------------------------------------------------------
# STR-Match


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def name_similarity(a: str, b: str) -> float:
    """``1 - lev(a, b) / max(len(a), len(b))``."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def local_name(label: str) -> str:
    """IRI local name (after the last ``/`` or ``#``) with underscores as spaces."""
    cut = max(label.rfind("/"), label.rfind("#"))
    return label[cut + 1:].replace("_", " ").strip()


def entity_names(kg: KnowledgeGraph, name_attribute: Optional[str] = None) -> dict[int, str]:
    if name_attribute is None:
        return {int(e): local_name(kg.label(e)) for e in kg.entity_ids}
    attr = kg.relation_id(name_attribute, attribute=True)
    names = {}
    for h, r, t in kg.triples():
        if r == attr and h not in names:
            names[h] = kg.label(t)
    return names


def str_match_baseline(kg1: KnowledgeGraph, kg2: KnowledgeGraph, threshold: float = 0.5,
                       name_attribute1: Optional[str] = None, name_attribute2: Optional[str] = None):
    """Greedy one-to-one matching of entity names by normalized edit similarity.

    Pairs with similarity strictly above ``threshold`` are taken in order of
    decreasing similarity, skipping entities already matched.  Returns
    ``(e1, e2, similarity)`` id triples.
    """
    names1 = {e: n for e, n in entity_names(kg1, name_attribute1).items() if n}
    names2 = {e: n for e, n in entity_names(kg2, name_attribute2).items() if n}
    candidates = []
    for e1, n1 in names1.items():
        for e2, n2 in names2.items():
            if n1 == n2:
                candidates.append((1.0, e1, e2))
                continue
            # length gap alone bounds the similarity from above
            if 1.0 - abs(len(n1) - len(n2)) / max(len(n1), len(n2)) <= threshold:
                continue
            s = name_similarity(n1, n2)
            if s > threshold:
                candidates.append((s, e1, e2))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    used1, used2, out = set(), set(), []
    for s, e1, e2 in candidates:
        if e1 in used1 or e2 in used2:
            continue
        used1.add(e1)
        used2.add(e2)
        out.append((e1, e2, s))
    return out
