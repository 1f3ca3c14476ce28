"""Hypergraph materialization from flat cluster labels.

Hyperedges partition the token indices (every node lies in exactly one
edge), so every row of the incidence matrix sums to 1 and every column to
the edge size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cutoff import CutoffBranch, CutoffConfig, CutoffResult, CutoffStrategy, apply_strategy
from .data import SentenceInstance, l2_normalize
from .errors import DegenerateInputError, DimensionError
from .hac import DistanceMetric, Linkage, cut_tree, linkage


@dataclass(frozen=True)
class Hypergraph:
    """Node count, hyperedge member sets, and the n x |E| incidence matrix."""

    n: int
    edges: list[np.ndarray]
    incidence: np.ndarray

    def __post_init__(self):
        H = np.asarray(self.incidence, dtype=np.float64)
        object.__setattr__(self, "incidence", H)
        if H.shape != (self.n, len(self.edges)):
            raise DimensionError(f"incidence shape {H.shape} != ({self.n}, {len(self.edges)})")
        if not np.all(H.sum(axis=1) == 1.0):
            raise DimensionError("incidence rows must sum to exactly 1 (partition)")
        edge_sizes = np.array([len(members) for members in self.edges])
        if edge_sizes.size and edge_sizes.min() < 1:
            raise DegenerateInputError("empty hyperedge")
        if not np.all(H.sum(axis=0) == edge_sizes):
            raise DimensionError("incidence column sums must equal edge sizes")

    @property
    def num_edges(self) -> int:
        return len(self.edges)


def from_labels(labels: np.ndarray) -> Hypergraph:
    """Build a hypergraph whose edges are the label groups.

    Edges are ordered by first appearance of each label over node index.
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    if n == 0:
        raise DegenerateInputError("cannot build a hypergraph from zero labels")
    _, first_pos, inverse = np.unique(labels, return_index=True, return_inverse=True)
    # remap sorted-unique ids to first-appearance order
    rank = np.empty(first_pos.size, dtype=np.int64)
    rank[np.argsort(first_pos, kind="stable")] = np.arange(first_pos.size)
    edge_of_node = rank[inverse]
    k = first_pos.size
    incidence = np.zeros((n, k))
    incidence[np.arange(n), edge_of_node] = 1.0
    order = np.argsort(edge_of_node, kind="stable")
    bounds = np.cumsum(np.bincount(edge_of_node, minlength=k))[:-1]
    edges = np.split(order, bounds)
    return Hypergraph(n=n, edges=edges, incidence=incidence)


def induce(
    instance: SentenceInstance,
    method: Linkage = Linkage.WARD,
    metric: DistanceMetric = DistanceMetric.EUCLIDEAN,
    strategy: CutoffStrategy | None = None,
    cfg: CutoffConfig | None = None,
) -> tuple[Hypergraph, CutoffResult]:
    """Full induction pipeline: normalize, cluster, cut, materialize.

    Single-token instances bypass clustering and yield the one-edge graph.
    """
    if strategy is None:
        strategy = CutoffStrategy.dynamic()
    if cfg is None:
        cfg = CutoffConfig()
    if instance.n == 1:
        result = CutoffResult(
            delta_elbow=0.0, branch=CutoffBranch.FALLBACK_ONLY, r=0,
            kappa=np.empty(0), j_star=None, delta_fallback=0.0,
        )
        return from_labels(np.zeros(1, dtype=np.int64)), result
    X = l2_normalize(instance.embeddings)
    Z = linkage(X, method, metric)
    result = apply_strategy(Z, strategy, cfg)
    labels = cut_tree(Z, result.delta_elbow)
    return from_labels(labels), result


def dump_edges(h: Hypergraph, instance: SentenceInstance) -> str:
    """One line per hyperedge: ``e<i>: tok tok ...`` with tokens in index order."""
    if len(instance.tokens) != h.n:
        raise DimensionError(f"{len(instance.tokens)} tokens for a {h.n}-node hypergraph")
    lines = []
    for e, members in enumerate(h.edges):
        words = " ".join(instance.tokens[int(v)] for v in members)
        lines.append(f"e{e}: {words}")
    return "\n".join(lines) + "\n"
