"""Training loop: Adam updates over per-instance hypergraphs.

Hypergraph structure is induced once per instance before the first epoch
(embeddings are fixed inputs, so the structure never drifts), then the
attention network is trained with minibatch Adam. Runs are bit-reproducible
given the config seed.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .cutoff import CutoffConfig, CutoffStrategy
from .data import Dataset, l2_normalize
from .errors import DegenerateInputError, FormatError
from .hac import DistanceMetric, Linkage
from .hypergraph import Hypergraph, induce
from .metrics import accuracy, macro_f1
from .model import HyperGATParams, backward, forward, loss

CHECKPOINT_MAGIC = b"HGCP"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    batch_size: int = 16
    l2_beta: float = 2e-5
    epochs: int = 50
    dropout_rate: float = 0.2
    seed: int = 0
    heads: int = 4
    head_dim: int | None = None
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    loss_reduction: str = "mean"  # or "sum"

    def __post_init__(self):
        if self.learning_rate < 0 or self.batch_size < 1 or self.epochs < 0:
            raise DegenerateInputError("bad training hyperparameters")
        if self.l2_beta < 0:
            raise DegenerateInputError("l2_beta must be >= 0")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise DegenerateInputError("dropout_rate must be in [0, 1)")
        if self.loss_reduction not in ("mean", "sum"):
            raise DegenerateInputError(f"unknown loss reduction {self.loss_reduction!r}")


class Adam:
    """Plain Adam with bias correction, one moment pair per tensor."""

    def __init__(self, params: HyperGATParams, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = params.zeros_like()
        self.v = params.zeros_like()

    def step(self, params: HyperGATParams, grads: HyperGATParams) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for (_, p), (_, g), (_, m), (_, v) in zip(
            params.tensors(), grads.tensors(), self.m.tensors(), self.v.tensors()
        ):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class EpochRecord:
    epoch: int
    split: str
    loss: float
    accuracy: float
    macro_f1: float


@dataclass
class TrainResult:
    params: HyperGATParams
    history: list[EpochRecord] = field(default_factory=list)

    def final(self, split: str) -> EpochRecord:
        rows = [r for r in self.history if r.split == split]
        if not rows:
            raise DegenerateInputError(f"no history rows for split {split!r}")
        return rows[-1]


def _prepare(dataset: Dataset, method, metric, strategy, cutoff_cfg):
    feats = []
    graphs: list[Hypergraph] = []
    for inst in dataset.instances:
        hg, _ = induce(inst, method, metric, strategy, cutoff_cfg)
        feats.append(l2_normalize(inst.embeddings))
        graphs.append(hg)
    labels = np.array([inst.label for inst in dataset.instances], dtype=np.int64)
    return feats, graphs, labels


def _evaluate(feats, graphs, labels, params: HyperGATParams, beta: float) -> tuple[float, float, float]:
    preds = np.empty(len(labels), dtype=np.int64)
    total = 0.0
    for i, (X, hg) in enumerate(zip(feats, graphs)):
        trace = forward(X, hg, params)
        preds[i] = int(np.argmax(trace.probs))
        total += loss(trace, int(labels[i]), params, beta=0.0)
    total = total / len(labels) + beta * params.l2_norm_sq()
    C = params.num_classes
    return total, accuracy(preds, labels), macro_f1(preds, labels, C)


def train(
    train_set: Dataset,
    eval_set: Dataset | None,
    cfg: TrainConfig,
    cutoff_cfg: CutoffConfig | None = None,
    strategy: CutoffStrategy | None = None,
    method: Linkage = Linkage.WARD,
    metric: DistanceMetric = DistanceMetric.EUCLIDEAN,
) -> TrainResult:
    """Train the classifier; returns final params plus per-epoch metrics."""
    if len(train_set) == 0:
        raise DegenerateInputError("cannot train on an empty dataset")
    cutoff_cfg = cutoff_cfg or CutoffConfig()
    strategy = strategy or CutoffStrategy.dynamic()

    feats, graphs, labels = _prepare(train_set, method, metric, strategy, cutoff_cfg)
    if eval_set is not None and len(eval_set) > 0:
        eval_data = _prepare(eval_set, method, metric, strategy, cutoff_cfg)
    else:
        eval_data = None

    params = HyperGATParams.init(
        dim=train_set.dim, num_classes=train_set.num_classes,
        heads=cfg.heads, head_dim=cfg.head_dim, seed=cfg.seed,
    )
    opt = Adam(params, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
    rng = np.random.default_rng([cfg.seed, 0xD40])

    result = TrainResult(params=params)
    n = len(labels)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            grads = params.zeros_like()
            for i in batch:
                trace = forward(
                    feats[i], graphs[i], params,
                    train_mode=True, dropout_rate=cfg.dropout_rate, rng=rng,
                )
                g = backward(trace, graphs[i], params, int(labels[i]))
                for (_, acc), (_, gi) in zip(grads.tensors(), g.tensors()):
                    acc += gi
            scale = 1.0 / len(batch) if cfg.loss_reduction == "mean" else 1.0
            for (_, acc), (_, p) in zip(grads.tensors(), params.tensors()):
                acc *= scale
                acc += 2.0 * cfg.l2_beta * p
            opt.step(params, grads)

        tr_loss, tr_acc, tr_f1 = _evaluate(feats, graphs, labels, params, cfg.l2_beta)
        result.history.append(EpochRecord(epoch, "train", tr_loss, tr_acc, tr_f1))
        if eval_data is not None:
            ev_loss, ev_acc, ev_f1 = _evaluate(*eval_data, params, cfg.l2_beta)
            result.history.append(EpochRecord(epoch, "eval", ev_loss, ev_acc, ev_f1))
    return result


def write_history_csv(history: list[EpochRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "split", "loss", "accuracy", "macro_f1"])
        for rec in history:
            writer.writerow([rec.epoch, rec.split, repr(rec.loss), repr(rec.accuracy), repr(rec.macro_f1)])


def save_checkpoint(params: HyperGATParams, path) -> None:
    """Versioned header, shape table, then little-endian f64 payloads."""
    tensors = params.tensors()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(tensors)))
        for name, t in tensors:
            encoded = name.encode()
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", t.ndim))
            fh.write(struct.pack(f"<{t.ndim}I", *t.shape))
        for _, t in tensors:
            fh.write(np.ascontiguousarray(t, dtype="<f8").tobytes())


def load_checkpoint(path) -> HyperGATParams:
    data = open(path, "rb").read()
    if data[:4] != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: not a checkpoint file")
    version, count = struct.unpack_from("<II", data, 4)
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    pos = 12
    entries = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos : pos + name_len].decode()
        pos += name_len
        (ndim,) = struct.unpack_from("<B", data, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", data, pos)
        pos += 4 * ndim
        entries.append((name, shape))
    tensors = {}
    for name, shape in entries:
        size = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data, dtype="<f8", count=size, offset=pos).reshape(shape)
        tensors[name] = arr.astype(np.float64)
        pos += 8 * size
    heads = sum(1 for name in tensors if name.startswith("w1."))
    if heads == 0 or "w2" not in tensors or "b2" not in tensors:
        raise FormatError(f"{path}: checkpoint missing required tensors")
    return HyperGATParams(
        w1=[tensors[f"w1.{h}"] for h in range(heads)],
        att=[tensors[f"att.{h}"] for h in range(heads)],
        w2=tensors["w2"],
        b2=tensors["b2"],
    )
