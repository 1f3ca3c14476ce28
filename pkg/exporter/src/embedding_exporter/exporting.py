"""Run a pretrained encoder over sentences and write the interchange files.

Input: JSONL with ``text`` (string), ``label`` (int), and optional
``aspect_char_spans`` (list of [start, end) character ranges) per line.

Output: the token-embedding interchange format consumed by the hypersent
loader: a JSONL file whose records reference a binary sidecar (magic
``HEMB``, version 1, u32 n and d, little-endian f32 rows; ``row_offset``
counts matrices in order of appearance). Tokens are the encoder's subword
strings, embeddings its last hidden state, and aspect indices every
subword whose character span overlaps a declared aspect span.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

SIDECAR_MAGIC = b"HEMB"
SIDECAR_VERSION = 1


class FetchError(RuntimeError):
    """The encoder could not be resolved locally or downloaded."""


@dataclass(frozen=True)
class ExportConfig:
    model: str
    input_path: str
    output_path: str
    max_length: int = 128
    include_special_tokens: bool = True


@dataclass
class ExportReport:
    exported: int = 0
    skipped: list = field(default_factory=list)  # (record index, reason)


def load_encoder(name: str):
    """Resolve tokenizer and model; a fast tokenizer is required for offsets."""
    import torch
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(name)
        model = AutoModel.from_pretrained(name)
    except Exception as exc:
        raise FetchError(f"cannot resolve encoder {name!r}: {exc}") from exc
    if not getattr(tokenizer, "is_fast", False):
        raise FetchError(f"encoder {name!r} has no fast tokenizer (offsets unavailable)")
    model.eval()
    return tokenizer, model


def _overlapping_tokens(offsets, spans, text_len):
    """Indices of subwords whose char span overlaps any aspect span.

    Returns None on misalignment: a span out of text bounds or one that
    covers no subword token.
    """
    indices = set()
    for start, end in spans:
        if not (0 <= start < end <= text_len):
            return None
        hits = [
            i for i, (s, e) in enumerate(offsets)
            if s < e and s < end and start < e  # (s == e) marks special tokens
        ]
        if not hits:
            return None
        indices.update(hits)
    return sorted(indices)


def export(cfg: ExportConfig) -> ExportReport:
    """Embed every input sentence and write JSONL plus the binary sidecar.

    Misaligned records are skipped with a warning carrying the record
    index; all other records appear in input order. Inference runs in eval
    mode, so identical inputs produce identical bytes.
    """
    import torch

    tokenizer, model = load_encoder(cfg.model)
    in_path = Path(cfg.input_path)
    out_path = Path(cfg.output_path)
    sidecar = out_path.with_suffix(".hemb")

    report = ExportReport()
    lines = []
    matrices = []
    with open(in_path) as fh:
        for idx, raw in enumerate(fh):
            raw = raw.strip()
            if not raw:
                continue
            rec = json.loads(raw)
            text = rec["text"]
            spans = [tuple(s) for s in rec.get("aspect_char_spans", [])]

            enc = tokenizer(
                text,
                return_offsets_mapping=True,
                truncation=True,
                max_length=cfg.max_length,
                add_special_tokens=cfg.include_special_tokens,
                return_tensors="pt",
            )
            offsets = [tuple(o) for o in enc.pop("offset_mapping")[0].tolist()]
            aspect_indices = _overlapping_tokens(offsets, spans, len(text))
            if aspect_indices is None:
                reason = "aspect span misaligned with subword tokens"
                logger.warning("record %d skipped: %s", idx, reason)
                report.skipped.append((idx, reason))
                continue

            with torch.no_grad():
                hidden = model(**enc).last_hidden_state[0]
            tokens = tokenizer.convert_ids_to_tokens(enc["input_ids"][0])
            matrix = hidden.numpy().astype(np.float32)

            lines.append(json.dumps({
                "id": rec.get("id", f"s{idx:05d}"),
                "tokens": tokens,
                "label": int(rec.get("label", 0)),
                "aspect_indices": aspect_indices,
                "embeddings_ref": sidecar.name,
                "row_offset": len(matrices),
            }, separators=(",", ":")))
            matrices.append(matrix)
            report.exported += 1

    out_path.write_text("\n".join(lines) + ("\n" if lines else ""))
    with open(sidecar, "wb") as fh:
        for m in matrices:
            fh.write(SIDECAR_MAGIC)
            fh.write(struct.pack("<III", SIDECAR_VERSION, m.shape[0], m.shape[1]))
            fh.write(np.ascontiguousarray(m, dtype="<f4").tobytes())
    return report
