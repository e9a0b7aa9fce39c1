import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_relevance
from matchrank.core import (
    InputError,
    ProbabilityModel,
    Ranking,
    RelevanceMatrix,
    SampleSet,
    SlotLayout,
    SparseProbMatrix,
    substream,
)


class TestSlotLayout:
    def test_uniform(self):
        lay = SlotLayout.uniform(10, 50)
        assert lay.group_count == 10
        assert lay.total_slots == 500
        assert lay.slots_per_group == (50,) * 10

    def test_slot_to_group(self):
        lay = SlotLayout((2, 0, 3))
        assert lay.total_slots == 5
        assert lay.slot_to_group.tolist() == [0, 0, 2, 2, 2]
        assert lay.group_start.tolist() == [0, 2, 2]
        assert lay.group_slots(2).tolist() == [2, 3, 4]

    def test_rejects_bad_layouts(self):
        with pytest.raises(InputError):
            SlotLayout(())
        with pytest.raises(InputError):
            SlotLayout((3, -1))
        with pytest.raises(InputError):
            SlotLayout.uniform(0, 5)


class TestRelevanceMatrix:
    def test_from_edges_roundtrip(self):
        m = RelevanceMatrix.from_edges(3, 4, [(2, 1), (0, 3), (0, 0), (2, 1)])
        assert m.row(0).tolist() == [0, 3]
        assert m.row(1).tolist() == []
        assert m.row(2).tolist() == [1]
        assert m.edge_count == 3
        assert m.edge_set() == {(0, 0), (0, 3), (2, 1)}

    def test_dense_roundtrip(self):
        rng = np.random.default_rng(3)
        dense = (rng.random((6, 5)) < 0.4).astype(int)
        m = RelevanceMatrix.from_dense(dense)
        assert np.array_equal(m.to_dense(), dense)

    def test_slot_adjacency_transposes(self):
        rng = np.random.default_rng(4)
        m = random_relevance(rng, 7, 5, 0.5)
        ptr, cands = m.slot_adjacency()
        pairs = set()
        for t in range(5):
            for a in cands[ptr[t] : ptr[t + 1]]:
                pairs.add((int(a), t))
        assert pairs == m.edge_set()

    def test_rejects_malformed(self):
        with pytest.raises(InputError):
            RelevanceMatrix(2, 3, [0, 1, 2], [0, 5])  # slot id out of range
        with pytest.raises(InputError):
            RelevanceMatrix(2, 3, [0, 2, 2], [1, 1])  # duplicate in row
        with pytest.raises(InputError):
            RelevanceMatrix(2, 3, [0, 2], [0, 1])  # indptr wrong length
        with pytest.raises(InputError):
            RelevanceMatrix(2, 3, [0, 2, 1], [0, 1, 2])  # decreasing indptr

    def test_rows_immutable(self):
        m = RelevanceMatrix.from_edges(2, 2, [(0, 0)])
        with pytest.raises(ValueError):
            m.indices[0] = 1

    def test_tobytes_distinguishes(self):
        a = RelevanceMatrix.from_edges(2, 2, [(0, 0)])
        b = RelevanceMatrix.from_edges(2, 2, [(0, 1)])
        c = RelevanceMatrix.from_edges(2, 2, [(0, 0)])
        assert a.tobytes() != b.tobytes()
        assert a.tobytes() == c.tobytes()


class TestSparseProbMatrix:
    def test_from_dense_drops_zeros(self):
        p = SparseProbMatrix.from_dense([[0.5, 0.0], [0.0, 1.0]])
        assert p.row(0)[0].tolist() == [0]
        assert p.row(1)[1].tolist() == [1.0]
        assert np.array_equal(p.to_dense(), [[0.5, 0.0], [0.0, 1.0]])

    def test_from_triplets_validates(self):
        with pytest.raises(InputError):
            SparseProbMatrix.from_triplets(2, 2, [(0, 0, 1.5)])
        with pytest.raises(InputError):
            SparseProbMatrix.from_triplets(2, 2, [(0, 0, 0.5), (0, 0, 0.6)])
        with pytest.raises(InputError):
            SparseProbMatrix.from_triplets(2, 2, [(2, 0, 0.5)])

    def test_triplets_zero_dropped_and_sorted(self):
        p = SparseProbMatrix.from_triplets(2, 3, [(1, 2, 0.3), (1, 0, 0.2), (0, 1, 0.0)])
        assert p.probs.size == 2
        assert p.row(0)[0].size == 0
        assert p.row(1)[0].tolist() == [0, 2]

    def test_clipped(self):
        p = SparseProbMatrix.from_dense([[0.5, 0.999], [1.0, 0.0]])
        q = p.clipped(0.9)
        assert q.probs.max() == 0.9
        assert p.probs.max() == 1.0  # original untouched


class TestProbabilityModel:
    def test_independent_marginals_identity(self):
        p = SparseProbMatrix.from_dense([[0.5, 0.2], [0.0, 0.7]])
        model = ProbabilityModel.independent(p)
        assert model.candidates == 2
        assert model.slots == 2
        assert model.marginal_matrix() is p

    def test_group_marginal_expansion(self):
        lay = SlotLayout((2, 1, 2))
        model = ProbabilityModel.group_structured(
            lay, [[0, 2], [1, 2]], [[0.5, 0.25], [0.4, 0.8]]
        )
        dense = model.marginal_matrix().to_dense()
        want = np.array(
            [
                [0.5, 0.5, 0.0, 0.25, 0.25],
                [0.0, 0.0, 0.4, 0.8, 0.8],
            ]
        )
        assert np.array_equal(dense, want)

    def test_group_validation(self):
        lay = SlotLayout((2, 2))
        with pytest.raises(InputError):
            ProbabilityModel.group_structured(lay, [[0, 0]], [[0.5, 0.5]])
        with pytest.raises(InputError):
            ProbabilityModel.group_structured(lay, [[1, 0]], [[0.5, 0.5]])
        with pytest.raises(InputError):
            ProbabilityModel.group_structured(lay, [[0, 2]], [[0.5, 0.5]])
        with pytest.raises(InputError):
            ProbabilityModel.group_structured(lay, [[0, 1]], [[0.5, 1.0]])
        with pytest.raises(InputError):
            ProbabilityModel(kind="nope")


class TestSampleSet:
    def test_basic(self):
        rng = np.random.default_rng(0)
        ms = tuple(random_relevance(rng, 4, 3, 0.5) for _ in range(5))
        ss = SampleSet(ms, seed=42)
        assert ss.n == 5
        assert ss.candidates == 4
        assert ss.slots == 3
        assert ss.seed == 42

    def test_rejects_mixed_dims(self):
        rng = np.random.default_rng(0)
        with pytest.raises(InputError):
            SampleSet((random_relevance(rng, 4, 3, 0.5), random_relevance(rng, 4, 2, 0.5)), 0)
        with pytest.raises(InputError):
            SampleSet((), 0)


class TestRanking:
    def test_valid(self):
        r = Ranking(np.array([2, 0, 1]), prefix_gain=(1, 3, 3))
        assert len(r) == 3
        assert r.is_complete(3)
        assert not r.is_complete(4)

    def test_prefix_allowed(self):
        r = Ranking(np.array([5, 1]))
        assert len(r) == 2 and r.prefix_gain is None

    def test_rejects_bad(self):
        with pytest.raises(InputError):
            Ranking(np.array([1, 1]))
        with pytest.raises(InputError):
            Ranking(np.array([0, -1]))
        with pytest.raises(InputError):
            Ranking(np.array([0, 1]), prefix_gain=(2, 1))
        with pytest.raises(InputError):
            Ranking(np.array([0, 1]), prefix_gain=(1,))


class TestSubstream:
    def test_reproducible(self):
        a = substream(7, 1, 3).random(4)
        b = substream(7, 1, 3).random(4)
        assert np.array_equal(a, b)

    def test_purposes_and_indices_distinct(self):
        draws = {
            substream(7, p, i).random(): (p, i)
            for p in (0, 1, 2, 3)
            for i in (0, 1, 2)
        }
        assert len(draws) == 12

    @given(st.integers(0, 2**32 - 1), st.integers(0, 3), st.integers(0, 50))
    @settings(max_examples=25, deadline=None)
    def test_streams_stable_under_reconstruction(self, seed, purpose, idx):
        x = substream(seed, purpose, idx).integers(0, 2**63)
        y = substream(seed, purpose, idx).integers(0, 2**63)
        assert x == y
