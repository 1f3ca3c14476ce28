import json

import pytest

from embedding_exporter import ExportConfig, FetchError, export
from embedding_exporter.cli import main as export_cli

from hypersent.cli import main as hypersent_cli
from hypersent.data import load_dataset

SENTENCES = [
    {"text": "The service was friendly but slow.", "label": 1,
     "aspect_char_spans": [[4, 11]]},
    {"text": "The food was cold.", "label": 0, "aspect_char_spans": [[4, 8]]},
    {"text": "A very tasty pizza.", "label": 2, "aspect_char_spans": [[13, 18]]},
]


def write_input(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")


def run_export(tiny_encoder_dir, tmp_path, records, **kwargs):
    src = tmp_path / "sentences.jsonl"
    out = tmp_path / "dataset.jsonl"
    write_input(src, records)
    cfg = ExportConfig(model=tiny_encoder_dir, input_path=str(src),
                       output_path=str(out), **kwargs)
    return export(cfg), out


class TestExport:
    def test_round_trip_via_primary_loader(self, tiny_encoder_dir, tmp_path):
        report, out = run_export(tiny_encoder_dir, tmp_path, SENTENCES)
        assert report.exported == 3 and not report.skipped
        ds = load_dataset(out)
        assert len(ds) == 3
        for inst in ds.instances:
            assert len(inst.tokens) == inst.embeddings.shape[0]
            assert inst.embeddings.shape[1] == 32
        first = ds.instances[0]
        assert first.tokens[0] == "[CLS]" and first.tokens[-1] == "[SEP]"
        assert [first.tokens[i] for i in first.aspect_indices] == ["service"]

    def test_subword_aspect_alignment(self, tiny_encoder_dir, tmp_path):
        records = [{"text": "The staff was friendly.", "label": 1,
                    "aspect_char_spans": [[14, 22]]}]  # "friendly"
        _, out = run_export(tiny_encoder_dir, tmp_path, records)
        inst = load_dataset(out).instances[0]
        assert [inst.tokens[i] for i in inst.aspect_indices] == ["friend", "##ly"]

    def test_no_special_tokens_drops_markers(self, tiny_encoder_dir, tmp_path):
        _, out_with = run_export(tiny_encoder_dir, tmp_path, SENTENCES[:1])
        with_special = load_dataset(out_with).instances[0]
        bare_dir = tmp_path / "bare"
        bare_dir.mkdir()
        _, out_without = run_export(
            tiny_encoder_dir, bare_dir, SENTENCES[:1], include_special_tokens=False,
        )
        without = load_dataset(out_without).instances[0]
        assert with_special.n - without.n == 2
        assert "[CLS]" not in without.tokens

    def test_deterministic_bytes(self, tiny_encoder_dir, tmp_path):
        outs = []
        for name in ("one", "two"):
            d = tmp_path / name
            d.mkdir()
            _, out = run_export(tiny_encoder_dir, d, SENTENCES)
            outs.append(out)
        assert outs[0].read_bytes() == outs[1].read_bytes()
        assert outs[0].with_suffix(".hemb").read_bytes() == outs[1].with_suffix(".hemb").read_bytes()

    def test_misaligned_span_skipped_with_index(self, tiny_encoder_dir, tmp_path):
        records = SENTENCES[:1] + [
            {"text": "bad food.", "label": 0, "aspect_char_spans": [[50, 60]]},
        ]
        report, out = run_export(tiny_encoder_dir, tmp_path, records)
        assert report.exported == 1
        assert report.skipped == [(1, "aspect span misaligned with subword tokens")]
        assert len(load_dataset(out)) == 1

    def test_unresolvable_model_is_fetch_error(self, tmp_path):
        src = tmp_path / "s.jsonl"
        write_input(src, SENTENCES[:1])
        cfg = ExportConfig(model=str(tmp_path / "no-such-model"),
                           input_path=str(src), output_path=str(tmp_path / "o.jsonl"))
        with pytest.raises(FetchError):
            export(cfg)


class TestAcceptance:
    def test_ten_sentence_export_feeds_hyperedge_dump(self, tiny_encoder_dir, tmp_path):
        texts = [
            "The service was friendly but slow.",
            "The food was cold.",
            "A very tasty pizza.",
            "The staff was great.",
            "The place was good but the food was bad.",
            "Service is slow.",
            "The pizza was very cold.",
            "Great staff, tasty food.",
            "The place is friendly.",
            "Bad service, good pizza.",
        ]
        records = [{"text": t, "label": i % 3} for i, t in enumerate(texts)]
        src = tmp_path / "ten.jsonl"
        out = tmp_path / "ten_out.jsonl"
        write_input(src, records)
        rc = export_cli(["--model", tiny_encoder_dir, "--in", str(src), "--out", str(out)])
        assert rc == 0

        ds = load_dataset(out)
        assert len(ds) == 10
        for inst in ds.instances:
            assert len(inst.tokens) == inst.embeddings.shape[0]

        run_dir = tmp_path / "qualitative"
        rc = hypersent_cli([
            "run", "baselines", "--data", str(out), "--out", str(run_dir),
            "--seeds", "0", "--dump-hyperedges",
        ])
        assert rc == 0
        dump = (run_dir / "hyperedges.txt").read_text()
        assert dump.count("e0:") == 10
        assert "service" in dump
