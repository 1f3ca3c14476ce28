"""Pairwise distances, agglomerative clustering, and dendrogram cuts.

The merge history is recorded scipy-style: row t of the linkage matrix is
``(left_id, right_id, height, size)`` where leaves are ids ``0..n-1`` and
the cluster created by merge t gets id ``n + t``. All four supported
linkages are monotone, so heights are non-decreasing.

Tie-break: among candidate pairs at the current minimum distance, the pair
with the lexicographically smallest (min id, max id) merges first. This is
deterministic across platforms and is shared with the brute-force test
oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateInputError, UnsupportedCombinationError


class DistanceMetric(Enum):
    EUCLIDEAN = "euclidean"
    COSINE = "cosine"


class Linkage(Enum):
    SINGLE = "single"
    COMPLETE = "complete"
    AVERAGE = "average"
    WARD = "ward"


@dataclass(frozen=True)
class LinkageMatrix:
    """Merge history: (n-1) rows of (left_id, right_id, height, size)."""

    merges: np.ndarray
    n_leaves: int

    def __post_init__(self):
        m = np.asarray(self.merges, dtype=np.float64)
        object.__setattr__(self, "merges", m)
        n = self.n_leaves
        if m.shape != (max(n - 1, 0), 4):
            raise DegenerateInputError(f"linkage matrix shape {m.shape} for n={n}")
        self.validate()

    @property
    def heights(self) -> np.ndarray:
        return self.merges[:, 2]

    def validate(self) -> None:
        """Cheap vectorized invariant checks, run on every construction."""
        n = self.n_leaves
        m = self.merges
        if m.shape[0] == 0:
            return
        t_idx = np.arange(m.shape[0])
        ids = m[:, :2]
        if ids.min() < 0 or np.any(ids.max(axis=1) >= n + t_idx):
            raise DegenerateInputError("cluster id out of range")
        flat_ids = ids.reshape(-1)
        if np.unique(flat_ids).size != flat_ids.size:
            raise DegenerateInputError("cluster id consumed twice")
        if m[:, 2].min() < 0:
            raise DegenerateInputError("negative merge height")
        if m[:, 3].min() < 2:
            raise DegenerateInputError("merge size < 2")
        diffs = np.diff(m[:, 2])
        if diffs.size and diffs.min() < -1e-12 * max(1.0, float(m[:, 2].max())):
            raise DegenerateInputError("merge heights are not non-decreasing")

    def validate_deep(self) -> None:
        """Full consistency check (sizes match subtree leaf counts)."""
        self.validate()
        n = self.n_leaves
        sizes = np.ones(2 * n - 1)
        for t, (left, right, _h, size) in enumerate(self.merges):
            expect = sizes[int(left)] + sizes[int(right)]
            if expect != size:
                raise DegenerateInputError(f"row {t}: size {size} != {expect}")
            sizes[n + t] = size


def _sq_diff_matrix(X: np.ndarray) -> np.ndarray:
    # Direct differences, not the dot-product identity: duplicate rows must
    # come out at exactly zero or flat zero-noise dendrogram levels pick up
    # cancellation dust that the inclusive threshold cut then splits on.
    # Row blocks keep the temporary at O(n * d) per block.
    n = X.shape[0]
    out = np.empty((n, n))
    step = max(1, (1 << 19) // max(1, n * X.shape[1]))
    for start in range(0, n, step):
        diff = X[start : start + step, None, :] - X[None, :, :]
        np.einsum("ijk,ijk->ij", diff, diff, out=out[start : start + step])
    return out


def pairwise_distances(X: np.ndarray, metric: DistanceMetric) -> np.ndarray:
    """Symmetric n x n distance matrix with zero diagonal.

    Cosine distance is 1 - cos(x, y), computed as half the squared
    Euclidean distance between unit rows; any pair involving a zero vector
    gets distance 1 (ruled out upstream by normalization, defined for
    safety).
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if metric is DistanceMetric.EUCLIDEAN:
        D = np.sqrt(_sq_diff_matrix(X))
    else:
        norms = np.linalg.norm(X, axis=1)
        zero = norms == 0.0
        safe = np.where(zero, 1.0, norms)
        unit = X / safe[:, None]
        D = 0.5 * _sq_diff_matrix(unit)
        D[zero, :] = 1.0
        D[:, zero] = 1.0
    D[np.arange(n), np.arange(n)] = 0.0
    return D


def linkage(X: np.ndarray, method: Linkage, metric: DistanceMetric) -> LinkageMatrix:
    """Agglomerative clustering by repeated global-minimum merges.

    The working matrix keeps dead slots at +inf; Lance-Williams updates on
    full rows propagate inf through min/max/mean/sqrt, so no masking is
    needed in the hot loop.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise DegenerateInputError(f"clustering needs n >= 2, got n={n}")
    if method is Linkage.WARD and metric is not DistanceMetric.EUCLIDEAN:
        raise UnsupportedCombinationError("Ward linkage requires the Euclidean metric")

    work = pairwise_distances(X, metric)
    np.fill_diagonal(work, np.inf)
    cid = list(range(n))  # cluster id living in each slot
    sizes = np.ones(n)
    rows = np.empty((n - 1, 4))
    single, complete, average = (
        method is Linkage.SINGLE, method is Linkage.COMPLETE, method is Linkage.AVERAGE,
    )

    for t in range(n - 1):
        flat = int(work.argmin())
        p, q = divmod(flat, n)
        best = work[p, q]
        # Resolve ties by smallest (min id, max id); argmin scans slots, and
        # slot reuse after merges breaks slot-order == id-order.
        ties = work == best
        if np.count_nonzero(ties) > 2:
            best_key = None
            for a, b in np.argwhere(ties):
                if a >= b:
                    continue
                key = (min(cid[a], cid[b]), max(cid[a], cid[b]))
                if best_key is None or key < best_key:
                    best_key = key
                    p, q = int(a), int(b)

        id_p, id_q = cid[p], cid[q]
        s_p, s_q = sizes[p], sizes[q]
        rows[t] = (min(id_p, id_q), max(id_p, id_q), best, s_p + s_q)

        d_p, d_q = work[p], work[q]
        if single:
            merged = np.minimum(d_p, d_q)
        elif complete:
            merged = np.maximum(d_p, d_q)
        elif average:
            merged = (s_p * d_p + s_q * d_q) / (s_p + s_q)
        else:
            # Ward on plain distances: singleton pairs merge at their
            # Euclidean distance, the recurrence acts on squared distances.
            total = s_p + s_q + sizes
            sq = ((s_p + sizes) * d_p * d_p + (s_q + sizes) * d_q * d_q
                  - sizes * (best * best)) / total
            merged = np.sqrt(np.maximum(sq, 0.0))
        work[p, :] = merged
        work[:, p] = merged
        work[q, :] = np.inf
        work[:, q] = np.inf
        work[p, p] = np.inf
        cid[p] = n + t
        sizes[p] = s_p + s_q

    # Monotonicity is guaranteed for these linkages; clamp fp dust so the
    # recorded heights satisfy it exactly.
    np.maximum.accumulate(rows[:, 2], out=rows[:, 2])
    return LinkageMatrix(merges=rows, n_leaves=n)


def cut_tree(Z: LinkageMatrix, threshold: float) -> np.ndarray:
    """Flat cluster labels after applying every merge with height <= threshold.

    Labels are 0..k-1 in order of first appearance over leaf index.
    """
    n = Z.n_leaves
    parent = list(range(2 * n - 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t, (left, right, height, _size) in enumerate(Z.merges):
        if height <= threshold:
            parent[find(int(left))] = n + t
            parent[find(int(right))] = n + t

    labels = np.empty(n, dtype=np.int64)
    remap: dict[int, int] = {}
    for leaf in range(n):
        root = find(leaf)
        if root not in remap:
            remap[root] = len(remap)
        labels[leaf] = remap[root]
    return labels
