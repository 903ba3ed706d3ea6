import math

import numpy as np
import pytest

from mexi.augment import (
    AugmentPlan,
    VARIANTS,
    is_sub_matcher,
    label_sub_matcher,
    plan_for_variant,
    sub_matchers,
    window_count,
)
from mexi.errors import ConfigurationError
from mexi.expertise import ThresholdConfig, labels_from_scores, score_session
from mexi.session import ReferenceMatch, TaskSpec, match_of, matrix_from_history

from .conftest import random_session


def window_count_oracle(history_len, window, stride):
    if window > history_len:
        return 0
    return math.ceil((history_len - window) / stride) + 1


class TestWindowCount:
    def test_against_ceil_oracle(self):
        for n in range(0, 120):
            for w in (1, 5, 30, 50, 70):
                for stride in (1, 5, 10):
                    assert window_count(n, w, stride) == window_count_oracle(n, w, stride)

    def test_exact_fit_yields_one_window(self):
        assert window_count(50, 50, 5) == 1

    def test_known_value(self):
        # 62 decisions, window 50, stride 5: ceil(12/5)+1 = 4
        assert window_count(62, 50, 5) == 4


class TestVariants:
    def test_registered_variants(self):
        assert VARIANTS["mexi_base"].window_sizes == ()
        assert VARIANTS["mexi_50"].window_sizes == (50,)
        assert VARIANTS["mexi_50"].stride == 5
        assert VARIANTS["mexi_70"].window_sizes == (30, 40, 50, 60, 70)
        assert VARIANTS["mexi_70"].stride == 10

    def test_plan_for_variant_lookup(self):
        assert plan_for_variant("mexi_50") is VARIANTS["mexi_50"]
        with pytest.raises(ConfigurationError):
            plan_for_variant("nope")

    def test_invalid_plan_rejected(self):
        with pytest.raises(ConfigurationError):
            AugmentPlan(window_sizes=(0,), stride=1, variant_name="x")
        with pytest.raises(ConfigurationError):
            AugmentPlan(window_sizes=(5,), stride=0, variant_name="x")


class TestSubMatchers:
    def test_count_matches_formula(self):
        rng = np.random.default_rng(81)
        task = TaskSpec(task_id="t", n=6, m=6)
        plan = plan_for_variant("mexi_50")
        for n_dec in (49, 50, 55, 62, 80):
            s = random_session(rng, task, n_decisions=n_dec)
            subs = sub_matchers(s, plan)
            assert len(subs) == window_count(n_dec, 50, 5)

    def test_multi_window_count(self):
        rng = np.random.default_rng(82)
        task = TaskSpec(task_id="t", n=6, m=6)
        s = random_session(rng, task, n_decisions=65)
        plan = plan_for_variant("mexi_70")
        subs = sub_matchers(s, plan)
        expected = sum(window_count(65, w, 10) for w in (30, 40, 50, 60))  # 70 doesn't fit
        assert len(subs) == expected

    def test_base_variant_produces_no_subs(self):
        rng = np.random.default_rng(83)
        task = TaskSpec(task_id="t", n=6, m=6)
        s = random_session(rng, task, n_decisions=60)
        assert sub_matchers(s, plan_for_variant("mexi_base")) == []

    def test_windows_are_contiguous_slices_with_clipped_movement(self):
        rng = np.random.default_rng(84)
        task = TaskSpec(task_id="t", n=6, m=6)
        s = random_session(rng, task, n_decisions=60, n_events=120)
        for sub in sub_matchers(s, plan_for_variant("mexi_50")):
            assert len(sub.history) == 50
            start = s.history.index(sub.history[0])
            assert sub.history == s.history[start : start + 50]
            t0, t1 = sub.history[0].t, sub.history[-1].t
            assert sub.movement == tuple(ev for ev in s.movement if t0 <= ev.t <= t1)
            assert sub.warmup_count == 0
            assert is_sub_matcher(sub)
            assert not is_sub_matcher(s)

    def test_final_window_is_tail_aligned(self):
        rng = np.random.default_rng(85)
        task = TaskSpec(task_id="t", n=6, m=6)
        s = random_session(rng, task, n_decisions=63)
        subs = sub_matchers(s, plan_for_variant("mexi_50"))
        tails = [sub for sub in subs if sub.history[-1] == s.history[-1]]
        assert len(tails) == 1  # exactly one window ends on the last decision

    def test_sub_ids_are_unique(self):
        rng = np.random.default_rng(86)
        task = TaskSpec(task_id="t", n=6, m=6)
        s = random_session(rng, task, n_decisions=90)
        subs = sub_matchers(s, plan_for_variant("mexi_70"))
        ids = [sub.matcher_id for sub in subs]
        assert len(ids) == len(set(ids))

    def test_empty_history_rejected(self):
        task = TaskSpec(task_id="t", n=2, m=2)
        from mexi.session import MatcherSession

        s = MatcherSession(matcher_id="x", task=task, screen=(10, 10), history=(), movement=())
        with pytest.raises(ConfigurationError):
            sub_matchers(s, plan_for_variant("mexi_50"))


class TestSubLabels:
    def test_relabel_from_window_performance(self):
        rng = np.random.default_rng(87)
        task = TaskSpec(task_id="t", n=6, m=6)
        ref = ReferenceMatch.from_pairs([(i, i) for i in range(6)])
        thresholds = ThresholdConfig(delta_p=0.5, delta_r=0.5, delta_res=0.5, delta_cal=0.1)
        s = random_session(rng, task, n_decisions=60)
        for sub in sub_matchers(s, plan_for_variant("mexi_50")):
            got = label_sub_matcher(sub, ref, thresholds)
            match = match_of(matrix_from_history(sub.history, task))
            expected = labels_from_scores(
                score_session(sub.history, match, ref), thresholds
            )
            assert got == expected
