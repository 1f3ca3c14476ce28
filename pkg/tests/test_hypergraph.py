import numpy as np
import pytest

from hypersent.cutoff import CutoffBranch, CutoffConfig, CutoffStrategy
from hypersent.data import SentenceInstance, SyntheticSpec, generate_synthetic
from hypersent.errors import DegenerateInputError
from hypersent.hac import DistanceMetric, Linkage
from hypersent.hypergraph import dump_edges, from_labels, induce
from hypersent.metrics import adjusted_rand_index


class TestFromLabels:
    def test_basic_grouping(self):
        hg = from_labels(np.array([0, 0, 1, 2, 1]))
        assert hg.num_edges == 3
        assert [list(e) for e in hg.edges] == [[0, 1], [2, 4], [3]]
        np.testing.assert_array_equal(hg.incidence.sum(axis=1), 1.0)

    def test_all_equal(self):
        hg = from_labels(np.zeros(4, dtype=int))
        assert hg.num_edges == 1
        np.testing.assert_array_equal(hg.incidence, np.ones((4, 1)))

    def test_all_distinct(self):
        hg = from_labels(np.array([5, 1, 9]))
        np.testing.assert_array_equal(hg.incidence, np.eye(3))

    def test_first_appearance_order(self):
        hg = from_labels(np.array([7, 3, 7, 3, 1]))
        assert [list(e) for e in hg.edges] == [[0, 2], [1, 3], [4]]

    def test_empty_rejected(self):
        with pytest.raises(DegenerateInputError):
            from_labels(np.array([], dtype=int))

    def test_partition_law(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            labels = rng.integers(0, 5, size=rng.integers(1, 30))
            hg = from_labels(labels)
            assert hg.incidence.sum() == hg.n
            assert all(len(e) >= 1 for e in hg.edges)
            assert 1 <= hg.num_edges <= hg.n


def synth_instance(k=3, seed=0, noise=0.0, tokens=(24, 40)):
    spec = SyntheticSpec(
        num_instances=1, tokens_per_instance=tokens, dim=16,
        planted_clusters=k, cluster_separation=10.0, noise_sigma=noise, seed=seed,
    )
    return generate_synthetic(spec).instances[0]


class TestInduce:
    def test_zero_noise_recovers_planted(self):
        inst = synth_instance(k=3, seed=1)
        hg, res = induce(inst)
        assert hg.num_edges == 3
        labels = np.argmax(hg.incidence, axis=1)
        assert adjusted_rand_index(inst.planted, labels) == 1.0

    def test_single_token_bypass(self):
        inst = SentenceInstance(
            id="one", tokens=["sole"], label=0, aspect_indices=[0],
            embeddings=np.ones((1, 4)),
        )
        hg, res = induce(inst)
        assert hg.num_edges == 1
        assert res.branch is CutoffBranch.FALLBACK_ONLY
        assert res.delta_elbow == 0.0

    def test_constant_heights_fallback_merges_all(self):
        # all tokens identical: every merge at height 0, fallback = 0, inclusive cut
        inst = SentenceInstance(
            id="flat", tokens=[f"t{i}" for i in range(6)], label=0, aspect_indices=[],
            embeddings=np.tile([1.0, 2.0, 2.0], (6, 1)),
        )
        hg, res = induce(inst, strategy=CutoffStrategy.fallback_only())
        assert hg.num_edges == 1
        assert res.branch is CutoffBranch.FALLBACK_ONLY

    def test_threshold_monotone_coupling(self):
        from hypersent.hac import cut_tree, linkage
        from hypersent.data import l2_normalize

        inst = synth_instance(k=4, seed=3, noise=0.6)
        Z = linkage(l2_normalize(inst.embeddings), Linkage.WARD, DistanceMetric.EUCLIDEAN)
        edges = [
            from_labels(cut_tree(Z, t)).num_edges
            for t in np.linspace(0, float(Z.heights[-1]), 20)
        ]
        assert all(a >= b for a, b in zip(edges, edges[1:]))

    def test_strategy_and_metric_plumbed_through(self):
        inst = synth_instance(k=2, seed=5, noise=0.3)
        hg, res = induce(
            inst, method=Linkage.AVERAGE, metric=DistanceMetric.COSINE,
            strategy=CutoffStrategy.acceleration_min(0.5), cfg=CutoffConfig(lam=0.5),
        )
        assert 1 <= hg.num_edges <= inst.n


class TestDumpEdges:
    def test_format(self):
        inst = SentenceInstance(
            id="svc", tokens=["service", "good"], label=0, aspect_indices=[0],
            embeddings=np.eye(2),
        )
        hg = from_labels(np.array([0, 0]))
        assert dump_edges(hg, inst) == "e0: service good\n"

    def test_singleton_edge_line(self):
        inst = SentenceInstance(
            id="x", tokens=["a", "b"], label=0, aspect_indices=[],
            embeddings=np.eye(2),
        )
        hg = from_labels(np.array([0, 1]))
        assert dump_edges(hg, inst) == "e0: a\ne1: b\n"

    def test_deterministic_bytes(self):
        inst = synth_instance(k=3, seed=7)
        hg, _ = induce(inst)
        assert dump_edges(hg, inst) == dump_edges(hg, inst)
