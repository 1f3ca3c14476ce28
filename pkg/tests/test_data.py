import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypersent.data import (
    Dataset,
    SentenceInstance,
    SyntheticSpec,
    generate_synthetic,
    l2_normalize,
    load_dataset,
    parse_synth_spec,
    save_dataset,
)
from hypersent.errors import DegenerateInputError, DimensionError, FormatError


def make_instance(idx=0, n=3, d=2, label=0, seed=0):
    rng = np.random.default_rng(seed)
    emb = rng.normal(size=(n, d)).astype(np.float32).astype(np.float64)
    return SentenceInstance(
        id=f"i{idx}", tokens=[f"t{j}" for j in range(n)], label=label,
        aspect_indices=[0], embeddings=emb,
    )


class TestNormalize:
    def test_three_four_five(self):
        out = l2_normalize(np.array([[3.0, 4.0]]))
        np.testing.assert_allclose(out, [[0.6, 0.8]])

    def test_zero_row_unchanged(self):
        out = l2_normalize(np.array([[0.0, 0.0], [1.0, 1.0]]))
        np.testing.assert_array_equal(out[0], [0.0, 0.0])
        np.testing.assert_allclose(np.linalg.norm(out[1]), 1.0)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_norms_zero_or_one_and_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(6, 4)) * rng.choice([0.0, 1.0, 100.0], size=(6, 1))
        out = l2_normalize(X)
        norms = np.linalg.norm(out, axis=1)
        assert np.all((np.abs(norms - 1) < 1e-9) | (norms == 0.0))
        np.testing.assert_allclose(l2_normalize(out), out, atol=1e-6)


class TestRoundTrip:
    def test_inline_single_instance(self, tmp_path):
        ds = Dataset.from_instances([make_instance(n=3, d=2)])
        path = tmp_path / "ds.jsonl"
        save_dataset(ds, path, inline=True)
        loaded = load_dataset(path)
        assert len(loaded) == 1
        assert loaded.instances[0].embeddings.shape == (3, 2)
        np.testing.assert_array_equal(loaded.instances[0].embeddings, ds.instances[0].embeddings)

    @pytest.mark.parametrize("inline", [True, False])
    def test_bit_exact_round_trip(self, tmp_path, inline):
        instances = [make_instance(idx=i, n=2 + i, d=4, label=i % 3, seed=i) for i in range(5)]
        ds = Dataset.from_instances(instances)
        path = tmp_path / "ds.jsonl"
        save_dataset(ds, path, inline=inline)
        loaded = load_dataset(path)
        assert loaded.num_classes == ds.num_classes
        for a, b in zip(ds.instances, loaded.instances):
            assert a.id == b.id and a.tokens == b.tokens and a.label == b.label
            assert a.aspect_indices == b.aspect_indices
            np.testing.assert_array_equal(a.embeddings, b.embeddings)

    def test_empty_dataset(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        save_dataset(Dataset([], 0, 0), path)
        assert len(load_dataset(path)) == 0

    def test_single_token_instance(self, tmp_path):
        ds = Dataset.from_instances([make_instance(n=1, d=3)])
        path = tmp_path / "one.jsonl"
        save_dataset(ds, path)
        loaded = load_dataset(path)
        assert loaded.instances[0].embeddings.shape == (1, 3)

    def test_sidecar_format_bytes(self, tmp_path):
        rng = np.random.default_rng(7)
        inst = SentenceInstance(
            id="x", tokens=[f"t{j}" for j in range(5)], label=0, aspect_indices=[],
            embeddings=rng.normal(size=(5, 4)).astype(np.float32).astype(np.float64),
        )
        path = tmp_path / "d.jsonl"
        save_dataset(Dataset.from_instances([inst]), path)
        raw = (tmp_path / "d.hemb").read_bytes()
        assert raw[:4] == b"HEMB"
        version, n, d = struct.unpack("<III", raw[4:16])
        assert (version, n, d) == (1, 5, 4)
        payload = np.frombuffer(raw, dtype="<f4", offset=16)
        np.testing.assert_array_equal(
            payload.reshape(5, 4), inst.embeddings.astype(np.float32)
        )

    def test_declared_rows_mismatch_is_dimension_error(self, tmp_path):
        rec = {
            "id": "a", "tokens": ["w", "x", "y", "z"], "label": 0,
            "aspect_indices": [], "embeddings": [[0.0, 1.0]] * 3,
        }
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps(rec) + "\n")
        with pytest.raises(DimensionError):
            load_dataset(path)

    def test_malformed_record_reports_index(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "ok", "tokens": ["a"], "label": 0, '
                        '"aspect_indices": [], "embeddings": [[1.0]]}\n{broken\n')
        with pytest.raises(FormatError, match="record 1"):
            load_dataset(path)

    def test_missing_key_is_format_error(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "tokens": ["w"]}\n')
        with pytest.raises(FormatError, match="label"):
            load_dataset(path)


class TestSynthetic:
    SPEC = SyntheticSpec(
        num_instances=8, tokens_per_instance=(24, 40), dim=16,
        planted_clusters=3, cluster_separation=10.0, noise_sigma=0.0, seed=11,
    )

    def test_deterministic_given_seed(self, tmp_path):
        paths = []
        for run in ("one", "two"):
            d = tmp_path / run
            d.mkdir()
            save_dataset(generate_synthetic(self.SPEC), d / "ds.jsonl")
            paths.append(d)
        assert (paths[0] / "ds.jsonl").read_bytes() == (paths[1] / "ds.jsonl").read_bytes()
        assert (paths[0] / "ds.hemb").read_bytes() == (paths[1] / "ds.hemb").read_bytes()

    def test_planted_structure_recorded(self):
        ds = generate_synthetic(self.SPEC)
        for inst in ds.instances:
            assert inst.planted is not None
            assert len(np.unique(inst.planted)) == 3
            # primary cluster (planted id 0) holds a strict majority
            counts = np.bincount(inst.planted)
            assert counts[0] > counts[1:].max()
            assert inst.label < ds.num_classes

    def test_zero_noise_separation(self):
        ds = generate_synthetic(self.SPEC)
        inst = ds.instances[0]
        same = inst.planted[:, None] == inst.planted[None, :]
        D = np.linalg.norm(inst.embeddings[:, None] - inst.embeddings[None, :], axis=2)
        assert D[same].max() < 1e-5  # identical within f32 rounding
        assert D[~same].min() > 5.0

    def test_single_cluster_degenerate(self):
        spec = SyntheticSpec(
            num_instances=2, tokens_per_instance=(5, 8), dim=4,
            planted_clusters=1, cluster_separation=10.0, noise_sigma=0.1, seed=3,
        )
        ds = generate_synthetic(spec)
        for inst in ds.instances:
            assert np.all(inst.planted == 0)

    def test_heterogeneous_k_range(self):
        spec = SyntheticSpec(
            num_instances=40, tokens_per_instance=(24, 40), dim=16,
            planted_clusters=(2, 6), cluster_separation=10.0, noise_sigma=0.0, seed=5,
        )
        ks = {len(np.unique(i.planted)) for i in generate_synthetic(spec).instances}
        assert ks == {2, 3, 4, 5, 6}

    def test_rejects_too_few_tokens_for_k(self):
        with pytest.raises(DegenerateInputError):
            SyntheticSpec(
                num_instances=1, tokens_per_instance=(5, 6), dim=4,
                planted_clusters=5, cluster_separation=1.0, noise_sigma=0.0, seed=0,
            )

    def test_parse_synth_spec(self):
        spec = parse_synth_spec("synth:instances=7,k=2-6,dim=32,sep=8,noise=0.5,seed=9,tokens=20-30,classes=4")
        assert spec.num_instances == 7
        assert spec.planted_clusters == (2, 6)
        assert spec.dim == 32 and spec.num_classes == 4
        assert spec.tokens_per_instance == (20, 30)
        assert spec.cluster_separation == 8.0 and spec.noise_sigma == 0.5


def test_instance_validation():
    with pytest.raises(DimensionError):
        SentenceInstance(id="b", tokens=["a", "b"], label=0, aspect_indices=[2],
                         embeddings=np.zeros((2, 3)))
    with pytest.raises(DimensionError):
        SentenceInstance(id="b", tokens=["a", "b"], label=0, aspect_indices=[],
                         embeddings=np.zeros((3, 3)))
    with pytest.raises(DegenerateInputError):
        SentenceInstance(id="b", tokens=[], label=0, aspect_indices=[], embeddings=np.zeros((0, 3)))


def test_dataset_label_bounds():
    with pytest.raises(DimensionError):
        Dataset([make_instance(label=5)], num_classes=3, dim=2)
