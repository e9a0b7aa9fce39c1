import json

import numpy as np
import pytest

from conftest import random_sampleset
from matchrank.core import InputError, Ranking, SparseProbMatrix
from matchrank.evaluation import evaluate
from matchrank.fileio import (
    ExperimentConfig,
    ingest_model,
    load_config,
    read_model,
    read_prob_triplets,
    read_ranking,
    read_report,
    read_samples,
    report_table,
    write_model,
    write_prob_triplets,
    write_ranking,
    write_report,
    write_samples,
)
from matchrank.ranker import RankerConfig
from matchrank.synthgen import SynthParams, build_synthetic_model, two_block_model


class TestTriplets:
    def test_roundtrip(self, tmp_path):
        m = SparseProbMatrix.from_dense([[0.5, 0.0, 0.125], [0.0, 1.0, 0.0]])
        path = tmp_path / "probs.txt"
        write_prob_triplets(m, path)
        back = read_prob_triplets(path)
        assert back.tobytes() == m.tobytes()

    def test_comments_and_blanks(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text("# a comment\n2 2 2\n\n0 0 0.5  # trailing\n1 1 0.25\n")
        m = read_prob_triplets(path)
        assert m.to_dense().tolist() == [[0.5, 0.0], [0.0, 0.25]]

    def test_zero_entries_dropped(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text("2 2 2\n0 0 0.0\n1 1 0.25\n")
        assert read_prob_triplets(path).probs.tolist() == [0.25]

    @pytest.mark.parametrize(
        "body,fragment",
        [
            ("", "empty"),
            ("1 2\n", "header"),
            ("a 2 1\n0 0 0.5\n", "integers"),
            ("2 2 3\n0 0 0.5\n", "promises 3"),
            ("2 2 1\n0 0\n", ":2:"),
            ("2 2 1\n0 0 zz\n", ":2: malformed"),
            ("2 2 1\n5 0 0.5\n", "out of range"),
            ("2 2 1\n0 0 1.5\n", "out of range"),
            ("2 2 2\n0 0 0.5\n0 0 0.6\n", "duplicate"),
        ],
    )
    def test_parse_errors(self, tmp_path, body, fragment):
        path = tmp_path / "bad.txt"
        path.write_text(body)
        with pytest.raises(InputError, match=fragment):
            read_prob_triplets(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="no such file"):
            read_prob_triplets(tmp_path / "nope.txt")


class TestIngestModel:
    def test_label_broadcast(self):
        probs = SparseProbMatrix.from_dense([[0.5, 0.0], [0.0, 0.4]])
        model = ingest_model(probs, slots_per_label=3)
        dense = model.marginal_matrix().to_dense()
        assert dense.shape == (2, 6)
        assert dense[0].tolist() == [0.5, 0.5, 0.5, 0.0, 0.0, 0.0]
        assert dense[1].tolist() == [0.0, 0.0, 0.0, 0.4, 0.4, 0.4]

    def test_max_clip(self):
        probs = SparseProbMatrix.from_dense([[1.0, 0.5]])
        model = ingest_model(probs, max_clip=0.9999)
        assert model.marginals.probs.max() == 0.9999

    def test_validation(self):
        probs = SparseProbMatrix.from_dense([[0.5]])
        with pytest.raises(InputError):
            ingest_model(probs, slots_per_label=0)
        with pytest.raises(InputError):
            ingest_model(probs, max_clip=0.0)


class TestModelFiles:
    def test_group_roundtrip(self, tmp_path):
        model = build_synthetic_model(
            SynthParams(groups=3, slots_per_group=2, candidates=20, memberships=2, seed=4)
        )
        path = tmp_path / "model.json"
        write_model(model, path, metadata={"note": "x"})
        back, meta = read_model(path)
        assert meta == {"note": "x"}
        assert back.kind == "group"
        assert np.array_equal(back.membership, model.membership)
        assert np.array_equal(back.group_prob, model.group_prob)
        assert back.layout.slots_per_group == model.layout.slots_per_group

    def test_independent_roundtrip_and_bytes(self, tmp_path):
        model = two_block_model(8, 4, 0.5, 0.25)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        write_model(model, p1)
        write_model(model, p2)
        assert p1.read_bytes() == p2.read_bytes()
        back, _ = read_model(p1)
        assert back.kind == "independent"
        assert back.marginals.tobytes() == model.marginals.tobytes()

    def test_rejects_wrong_format(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text(json.dumps({"format": "other", "version": 1}))
        with pytest.raises(InputError, match="expected a matchrank-model"):
            read_model(path)
        path.write_text("not json")
        with pytest.raises(InputError, match="not valid JSON"):
            read_model(path)
        path.write_text(json.dumps({"format": "matchrank-model", "version": 9}))
        with pytest.raises(InputError, match="version"):
            read_model(path)

    def test_rejects_missing_fields(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text(
            json.dumps({"format": "matchrank-model", "version": 1, "kind": "group"})
        )
        with pytest.raises(InputError, match="missing field"):
            read_model(path)


class TestSampleFiles:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(3)
        ss = random_sampleset(rng, 6, 4, 3, 0.4, seed=11)
        path = tmp_path / "samples.txt"
        write_samples(ss, path)
        back = read_samples(path)
        assert back.tobytes() == ss.tobytes()

    def test_truncation_detected(self, tmp_path):
        path = tmp_path / "s.txt"
        path.write_text("2 3 3 0\nsample 0 1\n0 1\n")
        with pytest.raises(InputError, match="truncated"):
            read_samples(path)


class TestRankingFiles:
    def test_roundtrip_with_prefix(self, tmp_path):
        r = Ranking(np.array([2, 0, 1], dtype=np.int32), (1, 2, 2))
        path = tmp_path / "r.json"
        write_ranking(r, path, "matchrank", 3, 2, 5, 1, 0)
        back, meta = read_ranking(path)
        assert back.order.tolist() == [2, 0, 1]
        assert back.prefix_gain == (1, 2, 2)
        assert meta["algorithm"] == "matchrank"
        assert meta["n_samples"] == 5

    def test_roundtrip_without_prefix(self, tmp_path):
        r = Ranking(np.array([1, 0], dtype=np.int32))
        path = tmp_path / "r.json"
        write_ranking(r, path, "random", 2, 2, 5, 1, 7)
        back, meta = read_ranking(path)
        assert back.prefix_gain is None
        assert meta["ranker_seed"] == 7


class TestReportFiles:
    def make_report(self):
        return evaluate(RankerConfig(), two_block_model(12, 4, 0.8, 0.7), 4, 1, 6, 2)

    def test_roundtrip_and_bytes(self, tmp_path):
        rep = self.make_report()
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        write_report(rep, p1)
        write_report(rep, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert read_report(p1) == rep

    def test_table(self):
        rep = self.make_report()
        text, rows = report_table([rep, rep])
        assert rows[0][0] == "algorithm"
        assert len(rows) == 3
        assert "matchrank-lazy" in text


class TestExperimentConfig:
    def test_valid(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(
            json.dumps(
                {
                    "synth": {"groups": 4, "p_base": 0.2},
                    "sampling": {"n": 16, "seed": 5},
                    "ranker": {"algorithm": "ntr"},
                    "evaluation": {"draws": 9},
                    "threads": 2,
                }
            )
        )
        cfg = load_config(path)
        assert cfg.synth["groups"] == 4
        assert cfg.sampling == {"n": 16, "seed": 5}
        assert cfg.ranker["algorithm"] == "ntr"
        assert cfg.threads == 2

    def test_unknown_keys(self):
        with pytest.raises(InputError, match="unknown config keys"):
            ExperimentConfig.from_dict({"sampling2": {}})
        with pytest.raises(InputError, match="unknown keys in config section"):
            ExperimentConfig.from_dict({"sampling": {"m": 3}})

    def test_bad_algorithm(self):
        with pytest.raises(InputError, match="unknown algorithm"):
            ExperimentConfig.from_dict({"ranker": {"algorithm": "bfs"}})

    def test_bad_threads(self):
        with pytest.raises(InputError, match="threads"):
            ExperimentConfig.from_dict({"threads": 0})

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="no such file"):
            load_config(tmp_path / "none.json")
