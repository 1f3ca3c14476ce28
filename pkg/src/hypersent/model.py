"""Multi-head hypergraph attention classifier with hand-derived gradients.

Per head, every node gets a scalar score a . leaky_relu(x W1); each
hyperedge softmax-normalizes the scores of its member nodes and aggregates
their projected features. Head outputs are concatenated, mean-pooled over
edges, and classified linearly. All gradients are analytic and verified
against central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .hypergraph import Hypergraph

LEAKY_SLOPE = 0.2

# Enabled by the test suite: every forward pass then asserts the attention,
# probability, and incidence invariants.
STRICT_CHECKS = False


@dataclass
class HyperGATParams:
    """Per-head projections and attention vectors plus the linear classifier."""

    w1: list[np.ndarray]  # head h: d x d_h
    att: list[np.ndarray]  # head h: d_h
    w2: np.ndarray  # C x (heads * d_h)
    b2: np.ndarray  # C

    def __post_init__(self):
        if len(self.w1) != len(self.att):
            raise ShapeError("w1 and att must have one entry per head")
        d_h = self.w1[0].shape[1]
        for W, a in zip(self.w1, self.att):
            if W.shape != self.w1[0].shape or a.shape != (d_h,):
                raise ShapeError("inconsistent per-head shapes")
        if self.w2.shape != (self.b2.shape[0], len(self.w1) * d_h):
            raise ShapeError(f"classifier shape {self.w2.shape} inconsistent with heads")

    @property
    def heads(self) -> int:
        return len(self.w1)

    @property
    def dim(self) -> int:
        return self.w1[0].shape[0]

    @property
    def head_dim(self) -> int:
        return self.w1[0].shape[1]

    @property
    def num_classes(self) -> int:
        return self.b2.shape[0]

    def tensors(self) -> list[tuple[str, np.ndarray]]:
        """Named views of every parameter tensor, in a stable order."""
        out = []
        for h in range(self.heads):
            out.append((f"w1.{h}", self.w1[h]))
        for h in range(self.heads):
            out.append((f"att.{h}", self.att[h]))
        out.append(("w2", self.w2))
        out.append(("b2", self.b2))
        return out

    def copy(self) -> "HyperGATParams":
        return HyperGATParams(
            w1=[W.copy() for W in self.w1],
            att=[a.copy() for a in self.att],
            w2=self.w2.copy(),
            b2=self.b2.copy(),
        )

    def zeros_like(self) -> "HyperGATParams":
        return HyperGATParams(
            w1=[np.zeros_like(W) for W in self.w1],
            att=[np.zeros_like(a) for a in self.att],
            w2=np.zeros_like(self.w2),
            b2=np.zeros_like(self.b2),
        )

    def l2_norm_sq(self) -> float:
        return float(sum((t * t).sum() for _, t in self.tensors()))

    @staticmethod
    def init(dim: int, num_classes: int, heads: int = 4, head_dim: int | None = None,
             seed: int = 0) -> "HyperGATParams":
        """Glorot-uniform matrices, zero biases."""
        if head_dim is None:
            head_dim = max(1, dim // heads)
        rng = np.random.default_rng(seed)

        def glorot(fan_in, fan_out, shape):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-bound, bound, size=shape)

        d_prime = heads * head_dim
        return HyperGATParams(
            w1=[glorot(dim, head_dim, (dim, head_dim)) for _ in range(heads)],
            att=[glorot(head_dim, 1, (head_dim,)) for _ in range(heads)],
            w2=glorot(d_prime, num_classes, (num_classes, d_prime)),
            b2=np.zeros(num_classes),
        )


@dataclass
class ForwardTrace:
    """Every intermediate needed for inspection and for the backward pass."""

    attention: list[np.ndarray]  # head h: |E| x n
    edge_features: list[np.ndarray]  # head h: |E| x d_h
    concat: np.ndarray  # |E| x d'
    pooled: np.ndarray  # d' (after dropout when training)
    logits: np.ndarray  # C
    probs: np.ndarray  # C
    x_used: np.ndarray  # node features after input dropout
    projections: list[np.ndarray]  # head h: n x d_h, pre-activation
    activations: list[np.ndarray]  # head h: n x d_h, post leaky-relu
    scores: list[np.ndarray]  # head h: n
    pooled_mask: np.ndarray | None


def _leaky(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0.0, z, LEAKY_SLOPE * z)


def _leaky_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0.0, 1.0, LEAKY_SLOPE)


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max()
    e = np.exp(shifted)
    return e / e.sum()


def attention_head(X: np.ndarray, hg: Hypergraph, w1: np.ndarray, att: np.ndarray) -> np.ndarray:
    """|E| x n attention matrix; each row is a distribution over edge members."""
    scores = _leaky(X @ w1) @ att
    return _masked_softmax(scores, hg)


def _masked_softmax(scores: np.ndarray, hg: Hypergraph) -> np.ndarray:
    A = np.zeros((hg.num_edges, hg.n))
    for e, members in enumerate(hg.edges):
        A[e, members] = _softmax(scores[members])
    return A


def aggregate_edges(X: np.ndarray, hg: Hypergraph, A: np.ndarray, w1: np.ndarray) -> np.ndarray:
    """Attention-weighted sums of projected member features, one row per edge."""
    # A is already zero off-support; multiplying by the incidence mask keeps
    # the contract independent of how A was produced.
    masked = A * hg.incidence.T
    return masked @ (X @ w1)


def forward(
    X: np.ndarray,
    hg: Hypergraph,
    params: HyperGATParams,
    train_mode: bool = False,
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> ForwardTrace:
    """Run the network on one instance's (already normalized) features.

    Dropout (inverted scaling) hits the input rows and the pooled vector,
    only when ``train_mode`` is set; eval calls are deterministic.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != hg.n:
        raise ShapeError(f"{X.shape[0]} feature rows for a {hg.n}-node hypergraph")
    if X.shape[1] != params.dim:
        raise ShapeError(f"feature dim {X.shape[1]} != parameter dim {params.dim}")

    drop = train_mode and dropout_rate > 0.0
    if drop and rng is None:
        raise ShapeError("training-mode dropout needs an rng")
    x_used = X
    if drop:
        keep = 1.0 - dropout_rate
        x_used = X * (rng.random(X.shape) < keep) / keep

    attention = []
    edge_features = []
    projections = []
    activations = []
    score_list = []
    for W, a in zip(params.w1, params.att):
        P = x_used @ W
        S = _leaky(P)
        s = S @ a
        A = _masked_softmax(s, hg)
        E_h = (A * hg.incidence.T) @ P
        attention.append(A)
        edge_features.append(E_h)
        projections.append(P)
        activations.append(S)
        score_list.append(s)

    concat = np.concatenate(edge_features, axis=1)
    pooled = concat.mean(axis=0)
    pooled_mask = None
    if drop:
        keep = 1.0 - dropout_rate
        pooled_mask = (rng.random(pooled.shape) < keep) / keep
        pooled = pooled * pooled_mask

    logits = params.w2 @ pooled + params.b2
    probs = _softmax(logits)

    trace = ForwardTrace(
        attention=attention, edge_features=edge_features, concat=concat,
        pooled=pooled, logits=logits, probs=probs, x_used=x_used,
        projections=projections, activations=activations, scores=score_list,
        pooled_mask=pooled_mask,
    )
    if STRICT_CHECKS:
        _check_invariants(trace, hg)
    return trace


def _check_invariants(trace: ForwardTrace, hg: Hypergraph) -> None:
    assert np.all(hg.incidence.sum(axis=1) == 1.0), "incidence rows must sum to 1"
    support = hg.incidence.T > 0.0
    for A in trace.attention:
        assert np.all(A[~support] == 0.0), "attention outside edge membership"
        assert np.all(np.abs(A.sum(axis=1) - 1.0) <= 1e-9), "attention rows must sum to 1"
        assert np.all(A[support] > 0.0), "attention support must equal membership"
    assert abs(trace.probs.sum() - 1.0) <= 1e-12, "class probabilities must sum to 1"


def loss(trace: ForwardTrace, label: int, params: HyperGATParams, beta: float) -> float:
    """Cross-entropy via log-sum-exp plus beta * squared l2 of all parameters."""
    logits = trace.logits
    shifted = logits - logits.max()
    log_z = np.log(np.exp(shifted).sum())
    nll = float(log_z - shifted[label])
    if beta:
        nll += beta * params.l2_norm_sq()
    return nll


def backward(
    trace: ForwardTrace,
    hg: Hypergraph,
    params: HyperGATParams,
    label: int,
    beta: float = 0.0,
) -> HyperGATParams:
    """Analytic gradients of ``loss`` w.r.t. every parameter tensor.

    Dropout masks recorded in the trace are honored, so training gradients
    match the stochastic forward; eval traces give the clean gradient.
    """
    grads = params.zeros_like()
    d_h = params.head_dim
    k = hg.num_edges

    dlogits = trace.probs.copy()
    dlogits[label] -= 1.0
    grads.w2[:] = np.outer(dlogits, trace.pooled)
    grads.b2[:] = dlogits

    dpooled = params.w2.T @ dlogits
    if trace.pooled_mask is not None:
        dpooled = dpooled * trace.pooled_mask
    dconcat_row = dpooled / k  # mean pooling spreads the gradient evenly

    X = trace.x_used
    for h in range(params.heads):
        dE = np.tile(dconcat_row[h * d_h : (h + 1) * d_h], (k, 1))
        A = trace.attention[h] * hg.incidence.T
        P = trace.projections[h]
        S = trace.activations[h]

        dP = A.T @ dE  # aggregation path
        dA = dE @ P.T  # |E| x n

        dscores = np.zeros(hg.n)
        for e, members in enumerate(hg.edges):
            a_row = trace.attention[h][e, members]
            g = dA[e, members]
            dscores[members] = a_row * (g - float(a_row @ g))

        grads.att[h][:] = S.T @ dscores
        dS = np.outer(dscores, params.att[h])
        dP += dS * _leaky_grad(P)
        grads.w1[h][:] = X.T @ dP

    if beta:
        for (_, g), (_, p) in zip(grads.tensors(), params.tensors()):
            g += 2.0 * beta * p
    return grads
