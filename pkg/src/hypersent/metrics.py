"""Cluster-quality and classification metrics."""

from __future__ import annotations

import numpy as np

from .errors import DomainError, ShapeError


def _euclidean_matrix(X: np.ndarray) -> np.ndarray:
    sq = np.sum(X * X, axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(D, 0.0, out=D)
    return np.sqrt(D)


def silhouette(X: np.ndarray, labels: np.ndarray) -> float:
    """Mean over points of (b - a) / max(a, b), Euclidean distances.

    a is the mean distance to the point's own cluster (excluding itself),
    b the smallest mean distance to another cluster. Points in singleton
    clusters score 0.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    n = X.shape[0]
    if labels.shape[0] != n:
        raise ShapeError("labels length != number of points")
    uniq = np.unique(labels)
    k = len(uniq)
    if not 2 <= k <= n - 1:
        raise DomainError(f"silhouette needs 2 <= clusters <= n-1, got k={k}, n={n}")

    D = _euclidean_matrix(X)
    scores = np.zeros(n)
    masks = [labels == c for c in uniq]
    sizes = np.array([m.sum() for m in masks])
    # point-to-cluster mean distances, n x k
    sums = np.stack([D[:, m].sum(axis=1) for m in masks], axis=1)
    for idx, (m, size) in enumerate(zip(masks, sizes)):
        if size == 1:
            continue  # singleton convention: silhouette 0
        a = sums[m, idx] / (size - 1)
        other = np.delete(sums[m], idx, axis=1) / np.delete(sizes, idx)[None, :]
        b = other.min(axis=1)
        denom = np.maximum(a, b)
        with np.errstate(invalid="ignore"):
            s = np.where(denom > 0, (b - a) / denom, 0.0)
        scores[m] = s
    return float(scores.mean())


def davies_bouldin(X: np.ndarray, labels: np.ndarray) -> float:
    """Mean over clusters of the worst (s_i + s_j) / d(c_i, c_j) ratio."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.shape[0] != X.shape[0]:
        raise ShapeError("labels length != number of points")
    uniq = np.unique(labels)
    k = len(uniq)
    if k < 2:
        raise DomainError(f"davies_bouldin needs >= 2 clusters, got {k}")
    centroids = np.stack([X[labels == c].mean(axis=0) for c in uniq])
    spreads = np.array(
        [np.linalg.norm(X[labels == c] - centroids[i], axis=1).mean() for i, c in enumerate(uniq)]
    )
    M = _euclidean_matrix(centroids)
    ratios = np.zeros((k, k))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = (spreads[:, None] + spreads[None, :]) / M
    np.fill_diagonal(ratios, -np.inf)
    worst = ratios.max(axis=1)
    return float(worst.mean())


def accuracy(preds: np.ndarray, labels: np.ndarray) -> float:
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.shape != labels.shape:
        raise ShapeError("preds and labels must have the same length")
    return float(np.mean(preds == labels))


def macro_f1(preds: np.ndarray, labels: np.ndarray, num_classes: int) -> float:
    """Unweighted mean of per-class F1.

    Classes absent from both predictions and gold labels are excluded from
    the average; a class with zero precision+recall contributes 0.
    """
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.shape != labels.shape:
        raise ShapeError("preds and labels must have the same length")
    f1s = []
    for c in range(num_classes):
        tp = np.sum((preds == c) & (labels == c))
        fp = np.sum((preds == c) & (labels != c))
        fn = np.sum((preds != c) & (labels == c))
        if tp + fp + fn == 0:
            continue  # class absent everywhere
        f1s.append(2 * tp / (2 * tp + fp + fn) if tp else 0.0)
    return float(np.mean(f1s)) if f1s else 0.0


def adjusted_rand_index(labels_a: np.ndarray, labels_b: np.ndarray) -> float:
    """Chance-corrected pair-counting agreement between two partitions."""
    labels_a = np.asarray(labels_a)
    labels_b = np.asarray(labels_b)
    if labels_a.shape != labels_b.shape:
        raise ShapeError("partitions must have the same length")
    n = labels_a.shape[0]
    _, a_idx = np.unique(labels_a, return_inverse=True)
    _, b_idx = np.unique(labels_b, return_inverse=True)
    contingency = np.zeros((a_idx.max() + 1, b_idx.max() + 1), dtype=np.int64)
    np.add.at(contingency, (a_idx, b_idx), 1)

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_cells = comb2(contingency).sum()
    sum_rows = comb2(contingency.sum(axis=1)).sum()
    sum_cols = comb2(contingency.sum(axis=0)).sum()
    total = comb2(n)
    expected = sum_rows * sum_cols / total if total else 0.0
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        return 1.0  # both partitions trivial (all-singletons or single cluster)
    return float((sum_cells - expected) / (max_index - expected))
