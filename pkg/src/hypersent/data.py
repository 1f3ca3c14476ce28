"""Sentence instances, the embedding interchange format, and synthetic data.

File format
-----------
A dataset is a JSONL file: one object per line with keys ``id`` (string),
``tokens`` (string array), ``label`` (int), ``aspect_indices`` (int array),
and either ``embeddings`` (array of arrays, one row per token) or
``embeddings_ref`` (path to a binary sidecar, relative to the JSONL file)
plus ``row_offset`` (index of the matrix within the sidecar). An optional
``planted`` key (int array) carries ground-truth cluster ids for synthetic
data.

The binary sidecar is a concatenation of matrix records. Each record is:
magic ``HEMB`` (4 ASCII bytes), format version (u32 LE, value 1), n (u32 LE),
d (u32 LE), then n*d f32 LE values in row-major order. ``row_offset``
counts records in order of appearance.

Embedding payloads are f32 on disk and promoted to f64 in memory.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, DimensionError, FormatError

SIDECAR_MAGIC = b"HEMB"
SIDECAR_VERSION = 1


@dataclass(frozen=True)
class SentenceInstance:
    """One sentence: tokens, an n x d embedding matrix, and a class label."""

    id: str
    tokens: list[str]
    label: int
    aspect_indices: list[int]
    embeddings: np.ndarray
    planted: np.ndarray | None = None  # ground-truth cluster ids (synthetic only)

    def __post_init__(self):
        emb = np.asarray(self.embeddings, dtype=np.float64)
        object.__setattr__(self, "embeddings", emb)
        n = len(self.tokens)
        if n < 1:
            raise DegenerateInputError(f"instance {self.id!r}: needs at least one token")
        if emb.ndim != 2 or emb.shape[0] != n:
            raise DimensionError(
                f"instance {self.id!r}: {n} tokens but embedding shape {emb.shape}"
            )
        if emb.shape[1] < 1:
            raise DimensionError(f"instance {self.id!r}: embedding dim must be >= 1")
        if any(i < 0 or i >= n for i in self.aspect_indices):
            raise DimensionError(f"instance {self.id!r}: aspect index out of range")
        if self.label < 0:
            raise DimensionError(f"instance {self.id!r}: negative label")
        if self.planted is not None:
            pl = np.asarray(self.planted, dtype=np.int64)
            if pl.shape != (n,):
                raise DimensionError(f"instance {self.id!r}: planted length != n")
            object.__setattr__(self, "planted", pl)

    @property
    def n(self) -> int:
        return len(self.tokens)

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]


@dataclass(frozen=True)
class Dataset:
    """A list of instances sharing an embedding dimension and label space."""

    instances: list[SentenceInstance]
    num_classes: int
    dim: int

    def __post_init__(self):
        for inst in self.instances:
            if inst.dim != self.dim:
                raise DimensionError(
                    f"instance {inst.id!r} has dim {inst.dim}, dataset has {self.dim}"
                )
            if inst.label >= self.num_classes:
                raise DimensionError(
                    f"instance {inst.id!r} label {inst.label} >= C={self.num_classes}"
                )

    def __len__(self) -> int:
        return len(self.instances)

    @staticmethod
    def from_instances(instances: list[SentenceInstance], num_classes: int | None = None) -> "Dataset":
        if not instances:
            return Dataset([], num_classes=num_classes or 0, dim=0)
        dim = instances[0].dim
        if num_classes is None:
            num_classes = max(inst.label for inst in instances) + 1
        return Dataset(list(instances), num_classes=num_classes, dim=dim)


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a planted-cluster dataset.

    ``planted_clusters`` is either a fixed cluster count or an inclusive
    (min, max) range sampled per instance. Cluster centroids come from a
    per-dataset bank of directions scaled by ``cluster_separation``; the
    first ``num_classes`` bank slots carry the label signal. Every instance
    contains exactly one label-bank cluster holding a strict majority of
    its tokens, so the class is the majority cluster's bank id mod C and
    is recoverable from the embeddings alone. ``noise_sigma_range``, when
    set, draws a per-cluster sigma uniformly from that range instead of
    using the constant ``noise_sigma``.
    """

    num_instances: int
    tokens_per_instance: tuple[int, int]
    dim: int
    planted_clusters: int | tuple[int, int]
    cluster_separation: float
    noise_sigma: float
    seed: int
    num_classes: int = 3
    noise_sigma_range: tuple[float, float] | None = None
    straggler_fraction: float = 0.1
    straggler_scale: float = 4.0

    def __post_init__(self):
        k = self.planted_clusters
        kmin, kmax = (k, k) if isinstance(k, int) else k
        if kmin < 1 or kmax < kmin:
            raise DegenerateInputError(f"bad planted cluster range ({kmin}, {kmax})")
        if self.cluster_separation < 0 or self.noise_sigma < 0:
            raise DegenerateInputError("separation and noise must be >= 0")
        lo, hi = self.tokens_per_instance
        if lo > hi or lo < 1:
            raise DegenerateInputError(f"bad token range ({lo}, {hi})")
        if kmax > 1 and lo < 2 * kmax + 1:
            raise DegenerateInputError(
                f"tokens_per_instance min {lo} too small for k={kmax}: need >= {2 * kmax + 1}"
            )
        if self.num_classes < 1:
            raise DegenerateInputError("need at least one class")
        if not 0.0 <= self.straggler_fraction < 1.0 or self.straggler_scale <= 0.0:
            raise DegenerateInputError("bad straggler parameters")

    @property
    def k_range(self) -> tuple[int, int]:
        k = self.planted_clusters
        return (k, k) if isinstance(k, int) else k


def l2_normalize(X: np.ndarray) -> np.ndarray:
    """Scale every row to unit Euclidean norm. Zero rows pass through."""
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=-1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return X / safe


def _write_sidecar_record(fh, matrix: np.ndarray) -> None:
    n, d = matrix.shape
    fh.write(SIDECAR_MAGIC)
    fh.write(struct.pack("<III", SIDECAR_VERSION, n, d))
    fh.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())


def _read_sidecar(path: Path) -> list[np.ndarray]:
    matrices = []
    data = path.read_bytes()
    pos = 0
    while pos < len(data):
        if data[pos : pos + 4] != SIDECAR_MAGIC:
            raise FormatError(f"{path}: bad magic at byte {pos}")
        version, n, d = struct.unpack_from("<III", data, pos + 4)
        if version != SIDECAR_VERSION:
            raise FormatError(f"{path}: unsupported sidecar version {version}")
        pos += 16
        count = n * d
        raw = np.frombuffer(data, dtype="<f4", count=count, offset=pos)
        if raw.size != count:
            raise FormatError(f"{path}: truncated payload, expected {count} values")
        matrices.append(raw.reshape(n, d).astype(np.float64))
        pos += 4 * count
    return matrices


def save_dataset(dataset: Dataset, path, inline: bool = False) -> None:
    """Write a dataset as JSONL, embeddings in a sidecar unless ``inline``.

    Round trip is bit-exact for f32 payloads.
    """
    path = Path(path)
    sidecar = path.with_suffix(".hemb")
    lines = []
    matrices = []
    for idx, inst in enumerate(dataset.instances):
        rec = {
            "id": inst.id,
            "tokens": inst.tokens,
            "label": inst.label,
            "aspect_indices": list(inst.aspect_indices),
        }
        if inline:
            as_f32 = inst.embeddings.astype(np.float32)
            rec["embeddings"] = [[float(v) for v in row] for row in as_f32]
        else:
            rec["embeddings_ref"] = sidecar.name
            rec["row_offset"] = idx
            matrices.append(inst.embeddings)
        if inst.planted is not None:
            rec["planted"] = [int(v) for v in inst.planted]
        lines.append(json.dumps(rec, separators=(",", ":")))
    path.write_text("\n".join(lines) + ("\n" if lines else ""))
    if not inline:
        with open(sidecar, "wb") as fh:
            for m in matrices:
                _write_sidecar_record(fh, m)
    elif sidecar.exists():
        sidecar.unlink()


def load_dataset(path, num_classes: int | None = None) -> Dataset:
    """Read a JSONL dataset, resolving sidecar references.

    Raises FormatError with the offending record index on malformed input,
    DimensionError when declared and actual shapes disagree.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    sidecars: dict[str, list[np.ndarray]] = {}
    instances = []
    with open(path) as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}: record {lineno}: invalid JSON ({exc})") from exc
            for key in ("id", "tokens", "label", "aspect_indices"):
                if key not in rec:
                    raise FormatError(f"{path}: record {lineno}: missing key {key!r}")
            n = len(rec["tokens"])
            if "embeddings" in rec:
                emb = np.asarray(rec["embeddings"], dtype=np.float64)
                if emb.ndim != 2:
                    raise FormatError(f"{path}: record {lineno}: embeddings not a matrix")
            elif "embeddings_ref" in rec:
                ref = rec["embeddings_ref"]
                if "row_offset" not in rec:
                    raise FormatError(f"{path}: record {lineno}: embeddings_ref without row_offset")
                if ref not in sidecars:
                    sidecars[ref] = _read_sidecar(path.parent / ref)
                mats = sidecars[ref]
                offset = rec["row_offset"]
                if not 0 <= offset < len(mats):
                    raise FormatError(
                        f"{path}: record {lineno}: row_offset {offset} out of range "
                        f"({len(mats)} matrices in {ref})"
                    )
                emb = mats[offset]
            else:
                raise FormatError(f"{path}: record {lineno}: no embeddings or embeddings_ref")
            if emb.shape[0] != n:
                raise DimensionError(
                    f"{path}: record {lineno}: {n} tokens but {emb.shape[0]} embedding rows"
                )
            planted = rec.get("planted")
            instances.append(
                SentenceInstance(
                    id=rec["id"],
                    tokens=list(rec["tokens"]),
                    label=int(rec["label"]),
                    aspect_indices=[int(i) for i in rec["aspect_indices"]],
                    embeddings=emb,
                    planted=None if planted is None else np.asarray(planted, dtype=np.int64),
                )
            )
    return Dataset.from_instances(instances, num_classes=num_classes)


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Build a deterministic planted-cluster dataset from a spec.

    Each instance draws k centroids from the dataset's direction bank: one
    "primary" direction from the first C bank slots (strict token majority,
    determines the label) and k-1 distractor directions from later slots.
    Tokens are the centroid plus isotropic heavy-tailed noise (a Gaussian
    scale mixture; see ``straggler_fraction``). Ground-truth cluster ids
    are stored per token (0 = primary, then distractors).
    """
    rng = np.random.default_rng(spec.seed)
    kmin, kmax = spec.k_range
    C = spec.num_classes
    n_distractors = max(8, 2 * kmax)
    bank = rng.normal(size=(C + n_distractors, spec.dim))
    bank /= np.linalg.norm(bank, axis=1, keepdims=True)
    bank *= spec.cluster_separation

    lo, hi = spec.tokens_per_instance
    instances = []
    for i in range(spec.num_instances):
        k = int(rng.integers(kmin, kmax + 1))
        m = int(rng.integers(lo, hi + 1))
        primary_id = int(rng.integers(0, C))
        distractor_ids = rng.choice(n_distractors, size=k - 1, replace=False) + C

        # Primary cluster takes a strictly largest share; the rest is spread
        # near-evenly. Rough balance keeps the dendrogram's inter-cluster
        # merge ramp flat enough that the structural kink dominates at zero
        # noise.
        if k > 1:
            primary = int(round(m * rng.uniform(0.35, 0.5)))
            primary = min(max(primary, m // k + 1), m - 2 * (k - 1))
            base, rem = divmod(m - primary, k - 1)
            others = np.full(k - 1, base, dtype=np.int64)
            others[:rem] += 1
            counts = np.concatenate(([primary], others))
            while counts[0] <= counts[1:].max():
                j = 1 + int(np.argmax(counts[1:]))
                counts[j] -= 1
                counts[0] += 1
        else:
            counts = np.array([m])

        assignment = np.repeat(np.arange(k), counts)
        assignment = assignment[rng.permutation(m)]
        cluster_bank_ids = np.concatenate(([primary_id], distractor_ids)).astype(np.int64)

        if spec.noise_sigma_range is not None:
            s_lo, s_hi = spec.noise_sigma_range
            sigmas = rng.uniform(s_lo, s_hi, size=k)
        else:
            sigmas = np.full(k, spec.noise_sigma)

        # Heavy-tailed isotropic noise (Gaussian scale mixture): most tokens
        # hug the cluster core, an occasional straggler drifts out, the way
        # function words orbit semantic clusters in real embeddings.
        scale = np.where(
            rng.random(m) < spec.straggler_fraction, spec.straggler_scale, 0.75
        )
        emb = bank[cluster_bank_ids[assignment]] + (
            sigmas[assignment] * scale
        )[:, None] * rng.normal(size=(m, spec.dim))
        emb = emb.astype(np.float32).astype(np.float64)  # match on-disk precision

        tokens = [f"w{assignment[j]}.{j}" for j in range(m)]
        primary_positions = np.flatnonzero(assignment == 0)
        aspect = [int(primary_positions[rng.integers(len(primary_positions))])]
        instances.append(
            SentenceInstance(
                id=f"syn{i:05d}",
                tokens=tokens,
                label=primary_id % C,
                aspect_indices=aspect,
                embeddings=emb,
                planted=assignment,
            )
        )
    return Dataset(instances, num_classes=C, dim=spec.dim)


def parse_synth_spec(text: str) -> SyntheticSpec:
    """Parse a ``synth:key=value,...`` CLI spec string.

    Keys: instances, tokens (``a-b``), dim, k (int or ``a-b``), sep, noise,
    noise_range (``a-b``), seed, classes, straggler_p, straggler_scale.
    """
    if text.startswith("synth:"):
        text = text[len("synth:") :]
    kv = {}
    for part in text.split(","):
        if not part:
            continue
        if "=" not in part:
            raise FormatError(f"bad synth spec fragment {part!r}")
        key, value = part.split("=", 1)
        kv[key.strip()] = value.strip()

    def int_range(v: str) -> tuple[int, int]:
        if "-" in v:
            a, b = v.split("-", 1)
            return (int(a), int(b))
        return (int(v), int(v))

    k_raw = kv.get("k", "3")
    k_rng = int_range(k_raw)
    planted = k_rng[0] if k_rng[0] == k_rng[1] else k_rng
    noise_range = None
    if "noise_range" in kv:
        a, b = kv["noise_range"].split("-", 1)
        noise_range = (float(a), float(b))
    return SyntheticSpec(
        num_instances=int(kv.get("instances", "100")),
        tokens_per_instance=int_range(kv.get("tokens", "24-40")),
        dim=int(kv.get("dim", "16")),
        planted_clusters=planted,
        cluster_separation=float(kv.get("sep", "10")),
        noise_sigma=float(kv.get("noise", "0")),
        seed=int(kv.get("seed", "0")),
        num_classes=int(kv.get("classes", "3")),
        noise_sigma_range=noise_range,
        straggler_fraction=float(kv.get("straggler_p", "0.1")),
        straggler_scale=float(kv.get("straggler_scale", "4.0")),
    )
