"""Structure baselines: random partition, single edge, K-Means with elbow sweep."""

from __future__ import annotations

import numpy as np

from .data import SentenceInstance, l2_normalize
from .hypergraph import Hypergraph, from_labels


def random_partition(instance: SentenceInstance, rng: np.random.Generator) -> Hypergraph:
    """Uniform random group per token into ceil(n/4) groups."""
    n = instance.n
    k = -(-n // 4)
    labels = rng.integers(0, k, size=n)
    return from_labels(labels)


def single_edge(instance: SentenceInstance) -> Hypergraph:
    """No clustering: every token in one hyperedge."""
    return from_labels(np.zeros(instance.n, dtype=np.int64))


def kmeans(X: np.ndarray, k: int, rng: np.random.Generator,
           max_iter: int = 100, tol: float = 1e-10) -> tuple[np.ndarray, float]:
    """Lloyd iterations from a k-means++ seed; returns labels and inertia."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        probs = d2 / total if total > 0 else np.full(n, 1.0 / n)
        centers[j] = X[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))

    labels = None
    for _ in range(max_iter):
        dist = np.sum((X[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = dist.argmin(axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        moved = 0.0
        for j in range(k):
            members = labels == j
            if members.any():
                new_center = X[members].mean(axis=0)
                moved = max(moved, float(np.sum((new_center - centers[j]) ** 2)))
                centers[j] = new_center
        if moved < tol:
            break
    inertia = float(np.sum((X - centers[labels]) ** 2))
    return labels, inertia


def kmeans_elbow(instance: SentenceInstance, seed: int, k_max: int | None = None) -> Hypergraph:
    """Sweep K in 1..K_max and pick K at the largest second difference of inertia.

    This is the classical elbow heuristic the adaptive cut replaces: it
    reruns the whole clustering once per candidate K.
    """
    X = l2_normalize(instance.embeddings)
    n = instance.n
    k_max = min(n, 10) if k_max is None else min(n, k_max)
    rng = np.random.default_rng(seed)
    runs = []
    inertias = []
    for k in range(1, k_max + 1):
        labels, inertia = kmeans(X, k, rng)
        runs.append(labels)
        inertias.append(inertia)
    if k_max < 3:
        return from_labels(runs[-1])
    curv = [inertias[i + 1] - 2 * inertias[i] + inertias[i - 1] for i in range(1, k_max - 1)]
    best_k = int(np.argmax(curv)) + 2
    return from_labels(runs[best_k - 1])
