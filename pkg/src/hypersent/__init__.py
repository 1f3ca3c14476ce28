"""Per-sentence hypergraph induction and attention-based classification.

Pipeline: token-embedding matrices are l2-normalized, clustered bottom-up,
cut at an adaptive acceleration-fallback threshold, and materialized as
hyperedges; a small multi-head hypergraph attention network classifies the
pooled edge features. A benchmark CLI reproduces the cutoff/linkage/baseline
ablation structure on planted synthetic data.
"""

__version__ = "0.1.0"

from .cutoff import (
    CutoffBranch,
    CutoffConfig,
    CutoffResult,
    CutoffStrategy,
    StrategyKind,
    accelerations,
    apply_strategy,
    compute_cutoff,
    fallback_threshold,
    recent_window,
)
from .data import (
    Dataset,
    SentenceInstance,
    SyntheticSpec,
    generate_synthetic,
    l2_normalize,
    load_dataset,
    save_dataset,
)
from .hac import DistanceMetric, Linkage, LinkageMatrix, cut_tree, linkage, pairwise_distances
from .hypergraph import Hypergraph, dump_edges, from_labels, induce
from .metrics import accuracy, adjusted_rand_index, davies_bouldin, macro_f1, silhouette
from .model import ForwardTrace, HyperGATParams, attention_head, aggregate_edges, backward, forward, loss
from .training import TrainConfig, TrainResult, load_checkpoint, save_checkpoint, train

__all__ = [
    "CutoffBranch", "CutoffConfig", "CutoffResult", "CutoffStrategy", "StrategyKind",
    "accelerations", "apply_strategy", "compute_cutoff", "fallback_threshold", "recent_window",
    "Dataset", "SentenceInstance", "SyntheticSpec", "generate_synthetic", "l2_normalize",
    "load_dataset", "save_dataset",
    "DistanceMetric", "Linkage", "LinkageMatrix", "cut_tree", "linkage", "pairwise_distances",
    "Hypergraph", "dump_edges", "from_labels", "induce",
    "accuracy", "adjusted_rand_index", "davies_bouldin", "macro_f1", "silhouette",
    "ForwardTrace", "HyperGATParams", "attention_head", "aggregate_edges", "backward",
    "forward", "loss",
    "TrainConfig", "TrainResult", "load_checkpoint", "save_checkpoint", "train",
]
