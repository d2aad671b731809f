"""The iterative reasoning/embedding loop and its estimator front end.

Round 0 runs the reasoner alone.  Each later round picks confident mutual
best pairs as seeds, trains the embedding module on them, predicts partners
for entities the reasoner left unaligned, re-initializes the reasoner from
both outputs and runs it again with embedding similarity blended in.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .config import PraseConfig, flatten
from .embedding import MTransE, SeedSet
from .evaluation import hits_at_1, score
from .ingest import DatasetPair
from .kg import KnowledgeGraph
from .reasoner import (
    AlignmentProblem,
    EntityMappingStore,
    extract_alignment,
    init_subrelations,
    prase_init,
    run_fixpoint,
    unaligned_entities,
)

log = logging.getLogger(__name__)


class PhaseError(RuntimeError):
    """A run failed in a named phase; ``report`` holds whatever was recorded."""

    def __init__(self, phase: str, cause: BaseException, report: "RunReport"):
        super().__init__(f"{phase} failed: {cause}")
        self.phase = phase
        self.cause = cause
        self.report = report


@dataclass
class IterationStats:
    k: int
    seeds: int = 0
    pr_mappings: int = 0
    se_mappings: int = 0
    unaligned: int = 0
    sweeps: int = 0
    hits_at_1: Optional[float] = None
    timings: dict = field(default_factory=dict)


@dataclass
class RunReport:
    config: dict = field(default_factory=dict)
    iterations: list = field(default_factory=list)
    status: str = "running"
    failed_phase: Optional[str] = None
    error: Optional[str] = None
    final_mappings: int = 0
    mapping_path: Optional[str] = None
    metrics: Optional[dict] = None

    def to_kv(self) -> str:
        lines = [f"status={self.status}"]
        if self.failed_phase:
            lines += [f"failed_phase={self.failed_phase}", f"error={self.error}"]
        lines.append(f"final_mappings={self.final_mappings}")
        if self.mapping_path:
            lines.append(f"mapping_path={self.mapping_path}")
        lines += [f"config.{k}={v}" for k, v in self.config.items()]
        for it in self.iterations:
            p = f"iter{it.k}."
            lines += [
                f"{p}seeds={it.seeds}",
                f"{p}pr_mappings={it.pr_mappings}",
                f"{p}se_mappings={it.se_mappings}",
                f"{p}unaligned={it.unaligned}",
                f"{p}sweeps={it.sweeps}",
            ]
            if it.hits_at_1 is not None:
                lines.append(f"{p}hits_at_1={it.hits_at_1:.6f}")
            lines += [f"{p}time.{name}={sec:.3f}" for name, sec in it.timings.items()]
        if self.metrics:
            lines += [f"metrics.{k}={v}" for k, v in self.metrics.items()]
        return "\n".join(lines) + "\n"

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_kv())

    def summary(self) -> str:
        out = []
        for it in self.iterations:
            line = (f"round {it.k}: seeds={it.seeds} pr={it.pr_mappings} se={it.se_mappings} "
                    f"unaligned={it.unaligned} sweeps={it.sweeps}")
            if it.hits_at_1 is not None:
                line += f" hits@1={it.hits_at_1:.3f}"
            out.append(line)
        return "\n".join(out)


def select_seeds(store: EntityMappingStore, delta2: float) -> SeedSet:
    """Mutual-best entity pairs with probability strictly above ``delta2``."""
    pairs = [(a, b) for a, b, _ in extract_alignment(store, delta2)]
    if not pairs:
        log.warning("no seed pairs above %.3f; embedding training cannot start", delta2)
    return SeedSet(pairs)


def check_dataset_pair(X) -> DatasetPair:
    """Accept a :class:`DatasetPair` or a ``(kg1, kg2)`` tuple."""
    if isinstance(X, DatasetPair):
        return X
    if isinstance(X, (tuple, list)) and len(X) == 2 and all(isinstance(k, KnowledgeGraph) for k in X):
        return DatasetPair(X[0], X[1], [])
    raise TypeError(f"expected a DatasetPair or (KnowledgeGraph, KnowledgeGraph), got {type(X).__name__}")


@dataclass
class RunState:
    problem: AlignmentProblem
    entity: EntityMappingStore
    subrel: object
    alignment: list
    embeddings: object = None


def run(pair, cfg: Optional[PraseConfig] = None, se_factory: Optional[Callable] = None, state_out: Optional[dict] = None):
    """Align ``pair``; returns ``(mappings, report)`` with mappings as ``(label1, label2, p)``.

    ``se_factory(cfg)`` builds the embedding module for each round (defaults
    to :class:`MTransE`).  Failures raise :class:`PhaseError` carrying the
    partial report.  When ``state_out`` is a dict the final reasoner state is
    stored in it under ``"state"``.
    """
    pair = check_dataset_pair(pair)
    cfg = (cfg or PraseConfig()).validate()
    se_factory = se_factory or (lambda c: MTransE.from_config(c.trainer))
    report = RunReport(config=flatten(cfg))
    gold_ids = pair.gold_ids() if pair.gold else None
    phase = "setup"

    def timed(stats, name, fn):
        nonlocal phase
        phase = name
        t0 = time.perf_counter()
        out = fn()
        stats.timings[name] = stats.timings.get(name, 0.0) + time.perf_counter() - t0
        return out

    try:
        stats = IterationStats(0)
        report.iterations.append(stats)
        problem = timed(stats, "pr_init", lambda: AlignmentProblem(pair.kg1, pair.kg2, cfg.reasoner.case_fold))
        rcfg = replace(cfg.reasoner, beta=cfg.beta, enable_embedding_blend=False)
        entity, subrel, sweeps = timed(stats, "pr_run", lambda: run_fixpoint(
            problem.bootstrap, init_subrelations(problem.view1, problem.view2, rcfg.theta_init_subrel), problem, rcfg))
        alignment = extract_alignment(entity, cfg.delta_f)
        unaligned = unaligned_entities(alignment, pair.kg1, pair.kg2)
        stats.sweeps, stats.pr_mappings, stats.unaligned = sweeps, len(alignment), len(unaligned)
        embeddings = None
        log.info("round 0: %d mappings, %d unaligned (%d sweeps)", len(alignment), len(unaligned), sweeps)

        for k in range(1, cfg.K + 1):
            stats = IterationStats(k)
            report.iterations.append(stats)
            seeds = timed(stats, "seed_selection", lambda: select_seeds(entity, cfg.delta2))
            stats.seeds = len(seeds)
            se = se_factory(cfg)
            timed(stats, "se_train", lambda: se.fit(pair.kg1, pair.kg2, seeds))
            pred = timed(stats, "se_predict", lambda: se.predict(unaligned))
            embeddings = se.embeddings_
            stats.se_mappings = len(pred)
            if gold_ids is not None:
                stats.hits_at_1 = hits_at_1(pred, gold_ids, unaligned)
            entity_init, subrel = timed(stats, "pr_init", lambda: prase_init(
                entity, subrel, pred, cfg, bootstrap=problem.bootstrap))
            rcfg = replace(cfg.reasoner, beta=cfg.beta, enable_embedding_blend=cfg.use_embedding_blend)
            entity, subrel, sweeps = timed(stats, "pr_run", lambda: run_fixpoint(
                entity_init, subrel, problem, rcfg, emb=embeddings))
            alignment = extract_alignment(entity, cfg.delta_f)
            unaligned = unaligned_entities(alignment, pair.kg1, pair.kg2)
            stats.sweeps, stats.pr_mappings, stats.unaligned = sweeps, len(alignment), len(unaligned)
            log.info("round %d: %d seeds, %d embedding predictions, %d mappings, %d unaligned",
                     k, len(seeds), len(pred), len(alignment), len(unaligned))
    except Exception as exc:
        report.status = "failed"
        report.failed_phase = phase
        report.error = f"{type(exc).__name__}: {exc}"
        raise PhaseError(phase, exc, report) from exc

    mappings = [(pair.kg1.label(a), pair.kg2.label(b), p) for a, b, p in alignment]
    report.status = "ok"
    report.final_mappings = len(mappings)
    if pair.gold:
        report.metrics = score(mappings, pair.gold).as_dict()
    if state_out is not None:
        state_out["state"] = RunState(problem, entity, subrel, alignment, embeddings)
    return mappings, report


class PRASE(BaseEstimator):
    """Unsupervised entity aligner combining probabilistic reasoning and embeddings.

    ``fit`` takes a :class:`DatasetPair` (or a ``(kg1, kg2)`` tuple) and
    ``predict`` returns the final ``(label1, label2, probability)`` mappings.
    ``K=0`` gives the reasoner on its own.

    Parameters mirror :class:`PraseConfig`; ``reasoner`` and ``trainer``
    accept the nested config objects, and ``se_factory`` swaps the
    embedding module.
    """

    def __init__(self, K=1, alpha1=1.0, alpha2=1.0, beta=0.8, delta1=0.1, delta2=0.1, delta_f=0.1,
                 feedback_mode="both", reasoner=None, trainer=None, se_factory=None):
        self.K = K
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.beta = beta
        self.delta1 = delta1
        self.delta2 = delta2
        self.delta_f = delta_f
        self.feedback_mode = feedback_mode
        self.reasoner = reasoner
        self.trainer = trainer
        self.se_factory = se_factory

    @classmethod
    def from_config(cls, cfg: PraseConfig, se_factory=None) -> "PRASE":
        return cls(K=cfg.K, alpha1=cfg.alpha1, alpha2=cfg.alpha2, beta=cfg.beta, delta1=cfg.delta1,
                   delta2=cfg.delta2, delta_f=cfg.delta_f, feedback_mode=cfg.feedback_mode,
                   reasoner=cfg.reasoner, trainer=cfg.trainer, se_factory=se_factory)

    def config(self) -> PraseConfig:
        cfg = PraseConfig(K=self.K, alpha1=self.alpha1, alpha2=self.alpha2, beta=self.beta, delta1=self.delta1,
                          delta2=self.delta2, delta_f=self.delta_f, feedback_mode=self.feedback_mode)
        if self.reasoner is not None:
            cfg.reasoner = replace(self.reasoner)
        if self.trainer is not None:
            cfg.trainer = replace(self.trainer)
        return cfg.validate()

    def fit(self, X, y=None):
        pair = check_dataset_pair(X)
        if y is not None:
            pair = DatasetPair(pair.kg1, pair.kg2, list(y))
        state = {}
        self.mappings_, self.report_ = run(pair, self.config(), self.se_factory, state_out=state)
        st = state["state"]
        self.entity_store_ = st.entity
        self.subrelation_store_ = st.subrel
        self.embeddings_ = st.embeddings
        self.problem_ = st.problem
        return self

    def predict(self, X=None):
        check_is_fitted(self, "mappings_")
        return list(self.mappings_)

    def fit_predict(self, X, y=None):
        return self.fit(X, y).predict()

    def score(self, X, y=None):
        """F1 of the fitted mappings against ``y`` (or the pair's own gold links)."""
        check_is_fitted(self, "mappings_")
        gold = list(y) if y is not None else check_dataset_pair(X).gold
        return score(self.mappings_, gold).f1
