from fractions import Fraction

import numpy as np
import pytest

from conftest import random_relevance, random_sampleset
from matchrank.core import InputError, Ranking, RelevanceMatrix, SampleSet, substream
from matchrank.evaluation import (
    EvalReport,
    avg_matching_curve,
    evaluate,
    k_min,
    misspecification_run,
    prefix_match_curve,
)
from matchrank.matching import avg_matching, max_matching_size
from matchrank.ranker import RankerConfig, matchrank
from matchrank.synthgen import SynthParams, two_block_model


def full_ranking(order):
    return Ranking(np.array(order, dtype=np.int32))


class TestPrefixMatchCurve:
    def test_toy_identity_order(self, toy_instance):
        got = prefix_match_curve(full_ranking([0, 1, 2, 3, 4]), toy_instance)
        assert got.tolist() == [1, 2, 2, 3, 3]

    def test_toy_bridge_first(self, toy_instance):
        got = prefix_match_curve(full_ranking([2, 0, 3, 1, 4]), toy_instance)
        assert got.tolist() == [1, 2, 3, 3, 3]

    @pytest.mark.parametrize("seed", range(10))
    def test_equals_fresh_matchings(self, seed):
        rng = np.random.default_rng(6000 + seed)
        c, s = int(rng.integers(2, 10)), int(rng.integers(1, 6))
        m = random_relevance(rng, c, s, 0.4)
        order = rng.permutation(c)
        curve = prefix_match_curve(full_ranking(order), m)
        for k in range(1, c + 1):
            assert curve[k - 1] == max_matching_size(m, order[:k])

    def test_rejects_foreign_ids(self, toy_instance):
        with pytest.raises(InputError):
            prefix_match_curve(full_ranking([7]), toy_instance)


class TestKMin:
    def test_toy_orders(self, toy_instance):
        assert k_min(full_ranking([0, 1, 2, 3, 4]), toy_instance) == 4
        assert k_min(full_ranking([2, 0, 3, 1, 4]), toy_instance) == 3

    def test_unfillable_returns_none(self):
        m = RelevanceMatrix.from_edges(3, 2, [(0, 0), (1, 0), (2, 0)])
        assert k_min(full_ranking([0, 1, 2]), m) is None

    def test_needs_complete_ranking(self, toy_instance):
        with pytest.raises(InputError, match="complete"):
            k_min(full_ranking([2, 0, 3]), toy_instance)

    def test_target_variants(self, toy_instance):
        r = full_ranking([0, 1, 2, 3, 4])
        assert k_min(r, toy_instance, target=0) == 0
        assert k_min(r, toy_instance, target=2) == 2
        with pytest.raises(InputError):
            k_min(r, toy_instance, target=4)

    def test_at_least_target_candidates_needed(self):
        rng = np.random.default_rng(1)
        for seed in range(10):
            m = random_relevance(np.random.default_rng(seed), 8, 4, 0.6)
            k = k_min(full_ranking(rng.permutation(8)), m)
            assert k is None or k >= 4


class TestAvgMatchingCurve:
    def test_matches_prefix_gain(self):
        rng = np.random.default_rng(8)
        ss = random_sampleset(rng, 10, 4, 4, 0.35)
        r = matchrank(ss)
        curve = avg_matching_curve(r, ss)
        assert curve == tuple(Fraction(g, ss.n) for g in r.prefix_gain)

    def test_matches_fresh_averages(self):
        rng = np.random.default_rng(9)
        ss = random_sampleset(rng, 8, 4, 3, 0.4)
        order = rng.permutation(8)
        curve = avg_matching_curve(full_ranking(order), ss)
        for k in (1, 4, 8):
            assert curve[k - 1] == avg_matching(order[:k].tolist(), ss)


class TestEvaluate:
    CFG = RankerConfig(algorithm="matchrank-lazy")

    def small_model(self):
        return two_block_model(24, 6, 0.7, 0.6)

    def test_report_shape_and_determinism(self):
        model = self.small_model()
        a = evaluate(self.CFG, model, 8, 3, 12, 4)
        b = evaluate(self.CFG, model, 8, 3, 12, 4)
        assert a == b
        assert a.draws == 12 and len(a.per_draw_kmin) == 12
        assert a.candidates == 24 and a.slots == 6
        assert a.config["algorithm"] == "matchrank-lazy"
        assert a.unfillable_count + len(a.normalized_kmins()) == 12

    def test_threads_do_not_change_results(self):
        model = self.small_model()
        a = evaluate(self.CFG, model, 6, 3, 9, 4, threads=1)
        b = evaluate(self.CFG, model, 6, 3, 9, 4, threads=3)
        assert a == b

    def test_normalized_depth_at_least_one(self):
        model = self.small_model()
        rep = evaluate(self.CFG, model, 8, 1, 10, 2)
        for v in rep.normalized_kmins():
            assert v >= 1.0

    def test_near_certain_model_gives_exact_depth(self):
        model = two_block_model(12, 4, 0.9999, 0.9999)
        rep = evaluate(self.CFG, model, 4, 1, 8, 2)
        assert rep.normalized_mean == 1.0
        assert rep.normalized_std == 0.0
        assert rep.unfillable_count == 0

    def test_unfillable_all_draws(self):
        # Slot 3 has no probability mass anywhere: never fillable.
        from matchrank.core import ProbabilityModel, SparseProbMatrix

        dense = np.zeros((6, 4))
        dense[:, :3] = 0.8
        model = ProbabilityModel.independent(SparseProbMatrix.from_dense(dense))
        with pytest.warns(UserWarning, match="cannot fill"):
            rep = evaluate(self.CFG, model, 4, 1, 5, 2)
        assert rep.unfillable_count == 5
        assert rep.normalized_mean is None
        assert rep.normalized_std is None
        assert rep.per_draw_kmin == (None,) * 5

    def test_rejects_stop_at(self):
        with pytest.raises(InputError, match="stop_at"):
            evaluate(RankerConfig(stop_at=3), self.small_model(), 4, 1, 4, 2)

    def test_rejects_bad_draws(self):
        with pytest.raises(InputError):
            evaluate(self.CFG, self.small_model(), 4, 1, 0, 2)

    def test_sample_model_changes_ranking_only(self):
        model = self.small_model()
        skew = two_block_model(24, 6, 0.95, 0.1)
        a = evaluate(self.CFG, model, 8, 3, 10, 4)
        b = evaluate(self.CFG, model, 8, 3, 10, 4, sample_model=skew)
        assert b.config["misspecified_sampling"] is True
        assert a.config["misspecified_sampling"] is False
        # Same evaluation draws underneath: identical unfillable pattern.
        assert [k is None for k in a.per_draw_kmin] == [k is None for k in b.per_draw_kmin]


class TestEvalReport:
    def test_validates_draw_count(self):
        with pytest.raises(InputError):
            EvalReport(
                algorithm="tr",
                candidates=3,
                slots=2,
                n_samples=1,
                sample_seed=0,
                draws=3,
                eval_seed=0,
                per_draw_kmin=(2, 2),
                normalized_mean=1.0,
                normalized_std=0.0,
                unfillable_count=0,
                config={},
            )


class TestMisspecification:
    PARAMS = SynthParams(groups=3, slots_per_group=2, candidates=40, memberships=1, p_base=0.3, seed=5)

    def test_matched_entry_equals_direct_evaluate(self):
        cfg = RankerConfig()
        reports = misspecification_run(self.PARAMS, [0.1, 0.3], cfg, 6, 1, 6, 2)
        from matchrank.synthgen import build_synthetic_model

        direct = evaluate(
            cfg,
            build_synthetic_model(self.PARAMS),
            6,
            1,
            6,
            2,
            config_extra={"assumed_p_base": 0.3, "true_p_base": 0.3},
        )
        assert reports[1] == direct
        assert reports[0].config["assumed_p_base"] == 0.1
        assert reports[0].config["misspecified_sampling"] is True
        assert reports[1].config["misspecified_sampling"] is False

    def test_all_entries_share_eval_draws(self):
        reports = misspecification_run(
            self.PARAMS, [0.1, 0.3, 0.5], RankerConfig(), 6, 1, 8, 2
        )
        patterns = [[k is None for k in r.per_draw_kmin] for r in reports]
        assert patterns[0] == patterns[1] == patterns[2]
