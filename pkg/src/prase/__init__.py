"""Unsupervised knowledge graph entity alignment by probabilistic reasoning and embeddings."""
from .config import FeedbackMode, PraseConfig
from .embedding import EmbeddingSet, MTransE, SePredictionSet, SeedSet, TrainConfig
from .evaluation import AlignmentMetrics, hits_at_1, score, str_match_baseline
from .ingest import DatasetPair, PerturbationSpec, generate_kg, load_openea, synthesize_pair, write_mappings
from .kg import KnowledgeGraph, KnowledgeGraphBuilder, Namespace, augment_inverses
from .orchestrator import PRASE, RunReport, run, select_seeds
from .reasoner import ReasonerConfig

__version__ = "0.1.0"

__all__ = [
    "AlignmentMetrics", "DatasetPair", "EmbeddingSet", "FeedbackMode", "KnowledgeGraph", "KnowledgeGraphBuilder",
    "MTransE", "Namespace", "PRASE", "PerturbationSpec", "PraseConfig", "ReasonerConfig", "RunReport",
    "SePredictionSet", "SeedSet", "TrainConfig", "augment_inverses", "generate_kg", "hits_at_1", "load_openea",
    "run", "score", "select_seeds", "str_match_baseline", "synthesize_pair", "write_mappings",
]
