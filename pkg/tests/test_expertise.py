import math
from itertools import combinations

import numpy as np
import pytest

from mexi.errors import ConfigurationError, UndefinedMeasureError
from mexi.expertise import (
    ALL_NEGATIVE,
    ExpertiseScores,
    LabelVector,
    ThresholdConfig,
    calibration,
    fit_thresholds,
    labels_from_scores,
    nearest_rank_percentile,
    precision,
    recall,
    resolution,
    score_session,
)
from mexi.session import Match, ReferenceMatch, TaskSpec, match_of, matrix_from_history

from .conftest import WORKED_HISTORY, WORKED_REF_PAIRS


@pytest.fixture
def worked_match(worked_task):
    return match_of(matrix_from_history(WORKED_HISTORY, worked_task))


@pytest.fixture
def worked_ref():
    return ReferenceMatch.from_pairs(WORKED_REF_PAIRS)


def gamma_oracle(entries, positives):
    """Independent O(k^2) gamma oracle over explicit pair enumeration."""
    items = list(entries.items())
    n_c = n_d = 0
    for (pa, ca), (pb, cb) in combinations(items, 2):
        ra, rb = pa in positives, pb in positives
        if ra == rb or ca == cb:
            continue
        hi_correct = ra if ca > cb else rb
        if hi_correct:
            n_c += 1
        else:
            n_d += 1
    if n_c + n_d == 0:
        return None
    return (n_c - n_d) / (n_c + n_d)


def permutation_p_oracle(entries, positives):
    """Exhaustive one-sided p-value oracle over all correctness placements."""
    pairs = sorted(entries)
    confs = [entries[p] for p in pairs]
    n_right = sum(p in positives for p in pairs)
    observed = gamma_oracle(entries, positives)
    count = total = 0
    for chosen in combinations(range(len(pairs)), n_right):
        pos = {pairs[i] for i in chosen}
        g = gamma_oracle(entries, pos)
        total += 1
        if g is not None and g >= observed - 1e-12:
            count += 1
    return count / total


class TestWorkedExample:
    def test_precision(self, worked_match, worked_ref):
        assert precision(worked_match, worked_ref) == pytest.approx(0.75)

    def test_recall(self, worked_match, worked_ref):
        assert recall(worked_match, worked_ref) == pytest.approx(0.75)

    def test_resolution_gamma_and_p(self, worked_match, worked_ref):
        gamma, p = resolution(worked_match, worked_ref)
        assert gamma == pytest.approx(1.0)
        # correct entries {(0,0):.5, (0,1):.5, (2,3):1.0} vs wrong {(1,0):.45};
        # over the C(4,3)=4 correctness placements the gammas are
        # {1.0, 0, 0, -1}, so exactly one is >= 1.0.
        assert p == pytest.approx(0.25)

    def test_calibration(self, worked_match, worked_ref):
        # mean over all five history confidences (1.0+0.9+0.5+0.5+0.45)/5 = 0.67
        cal = calibration(WORKED_HISTORY, worked_match, worked_ref)
        assert cal == pytest.approx(0.67 - 0.75)

    def test_score_session_collects_all_measures(self, worked_match, worked_ref):
        s = score_session(WORKED_HISTORY, worked_match, worked_ref)
        assert s.defined
        assert s.precision == pytest.approx(0.75)
        assert s.recall == pytest.approx(0.75)
        assert s.resolution == pytest.approx(1.0)
        assert s.resolution_p == pytest.approx(0.25)
        assert s.calibration == pytest.approx(-0.08)


class TestMeasureEdgeCases:
    def test_precision_empty_match_undefined(self, worked_ref):
        with pytest.raises(UndefinedMeasureError):
            precision(Match({}), worked_ref)

    def test_recall_empty_match_is_zero(self, worked_ref):
        assert recall(Match({}), worked_ref) == 0.0

    def test_recall_empty_reference_rejected(self, worked_match):
        with pytest.raises(ConfigurationError):
            recall(worked_match, ReferenceMatch(frozenset()))

    def test_resolution_undefined_single_class(self, worked_ref):
        match = Match({(0, 0): 0.9, (0, 1): 0.5})  # both correct
        gamma, p = resolution(match, worked_ref)
        assert gamma is None and p is None

    def test_resolution_undefined_all_ties(self, worked_ref):
        match = Match({(0, 0): 0.5, (3, 3): 0.5})  # one correct, one not, tied
        gamma, p = resolution(match, worked_ref)
        assert gamma is None and p is None

    def test_calibration_empty_history_undefined(self, worked_match, worked_ref):
        with pytest.raises(UndefinedMeasureError):
            calibration((), worked_match, worked_ref)

    def test_score_session_empty_match(self, worked_ref):
        s = score_session((), Match({}), worked_ref)
        assert not s.defined
        assert s.recall == 0.0
        assert s.precision is None and s.calibration is None
        assert s.resolution is None and s.resolution_p is None


class TestResolutionAgainstOracles:
    def test_gamma_matches_pair_enumeration_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            k = int(rng.integers(2, 9))
            entries = {}
            while len(entries) < k:
                entries[(int(rng.integers(6)), int(rng.integers(6)))] = float(
                    rng.choice([0.2, 0.4, 0.5, 0.6, 0.8, 0.9])
                )
            positives = {p for p in entries if rng.random() < 0.5}
            expected = gamma_oracle(entries, positives)
            gamma, _ = resolution(Match(entries), ReferenceMatch.from_pairs(positives))
            if expected is None:
                assert gamma is None
            else:
                assert gamma == pytest.approx(expected)

    def test_exhaustive_p_matches_enumeration_oracle(self):
        rng = np.random.default_rng(22)
        done = 0
        while done < 40:
            k = int(rng.integers(3, 8))
            entries = {}
            while len(entries) < k:
                entries[(int(rng.integers(6)), int(rng.integers(6)))] = float(rng.uniform(0.1, 0.9))
            positives = {p for p in entries if rng.random() < 0.5}
            gamma, p = resolution(Match(entries), ReferenceMatch.from_pairs(positives))
            if gamma is None:
                continue
            assert p == pytest.approx(permutation_p_oracle(entries, positives))
            done += 1

    def test_monte_carlo_branch_close_to_exhaustive_rate(self):
        # 25 entries with 12 correct: C(25,12) >> 10,000 forces Monte-Carlo.
        rng = np.random.default_rng(23)
        entries = {}
        while len(entries) < 25:
            entries[(int(rng.integers(10)), int(rng.integers(10)))] = float(rng.uniform(0.1, 0.9))
        pairs = sorted(entries)
        positives = set(pairs[:12])
        assert math.comb(25, 12) > 10_000
        gamma, p = resolution(Match(entries), ReferenceMatch.from_pairs(positives), seed=0)
        gamma2, p2 = resolution(Match(entries), ReferenceMatch.from_pairs(positives), seed=0)
        assert (gamma, p) == (gamma2, p2)  # deterministic under fixed seed
        assert 0.0 <= p <= 1.0

    def test_perfect_separation_has_gamma_one(self):
        entries = {(0, 0): 0.9, (0, 1): 0.8, (3, 3): 0.2, (3, 2): 0.1}
        ref = ReferenceMatch.from_pairs({(0, 0), (0, 1)})
        gamma, _ = resolution(Match(entries), ref)
        assert gamma == 1.0

    def test_inverted_separation_has_gamma_minus_one(self):
        entries = {(0, 0): 0.1, (3, 3): 0.9}
        ref = ReferenceMatch.from_pairs({(0, 0)})
        gamma, p = resolution(Match(entries), ref)
        assert gamma == -1.0
        assert p == 1.0  # every placement yields gamma >= -1


def percentile_oracle(values, pct):
    ordered = sorted(values)
    rank = max(1, math.ceil(pct / 100.0 * len(ordered)))
    return ordered[rank - 1]


class TestThresholds:
    def test_nearest_rank_against_sort_index_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            n = int(rng.integers(1, 40))
            values = rng.uniform(-1, 1, size=n).tolist()
            pct = float(rng.uniform(1, 100))
            assert nearest_rank_percentile(values, pct) == percentile_oracle(values, pct)

    def test_nearest_rank_known_values(self):
        values = [15, 20, 35, 40, 50]
        assert nearest_rank_percentile(values, 30) == 20
        assert nearest_rank_percentile(values, 40) == 20
        assert nearest_rank_percentile(values, 50) == 35
        assert nearest_rank_percentile(values, 100) == 50
        assert nearest_rank_percentile(values, 1) == 15

    def test_percentile_result_is_population_member(self):
        rng = np.random.default_rng(32)
        values = rng.uniform(size=17).tolist()
        for pct in (20, 80):
            assert nearest_rank_percentile(values, pct) in values

    def test_empty_population_rejected(self):
        with pytest.raises(ConfigurationError):
            nearest_rank_percentile([], 50)

    def test_fit_thresholds_uses_80th_and_20th_percentiles(self):
        scores = [
            ExpertiseScores(
                precision=0.5, recall=0.5, resolution=r, resolution_p=0.01, calibration=c
            )
            for r, c in zip(
                [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
                [0.05, -0.10, 0.15, -0.20, 0.25, -0.30, 0.35, -0.40, 0.45, -0.50],
            )
        ]
        th = fit_thresholds(scores)
        assert th.delta_res == percentile_oracle([s.resolution for s in scores], 80)
        assert th.delta_cal == percentile_oracle([abs(s.calibration) for s in scores], 20)
        assert th.delta_p == 0.5 and th.delta_r == 0.5
        assert th.p_significance == 0.05

    def test_fit_thresholds_excludes_undefined(self):
        defined = ExpertiseScores(
            precision=0.8, recall=0.8, resolution=0.6, resolution_p=0.01, calibration=0.1
        )
        undefined = ExpertiseScores(
            precision=None, recall=0.0, resolution=None, resolution_p=None, calibration=None
        )
        th = fit_thresholds([defined, undefined, undefined])
        assert th.delta_res == 0.6
        assert th.delta_cal == pytest.approx(0.1)

    def test_fit_thresholds_empty_rejected(self):
        with pytest.raises(ConfigurationError):
            fit_thresholds([])


class TestLabels:
    TH = ThresholdConfig(delta_p=0.5, delta_r=0.5, delta_res=0.6, delta_cal=0.1)

    def test_strict_inequalities_at_thresholds(self):
        at_threshold = ExpertiseScores(
            precision=0.5, recall=0.5, resolution=0.6, resolution_p=0.01, calibration=0.1
        )
        labels = labels_from_scores(at_threshold, self.TH)
        assert labels == ALL_NEGATIVE  # P > delta, not >=; |Cal| < delta, not <=

    def test_all_positive(self):
        s = ExpertiseScores(
            precision=0.9, recall=0.9, resolution=0.9, resolution_p=0.01, calibration=0.01
        )
        labels = labels_from_scores(s, self.TH)
        assert labels.as_tuple() == (1, 1, 1, 1)
        assert labels.positives() == {"precise", "thorough", "correlated", "calibrated"}

    def test_correlated_requires_significance(self):
        s = ExpertiseScores(
            precision=0.9, recall=0.9, resolution=0.9, resolution_p=0.05, calibration=0.01
        )
        assert labels_from_scores(s, self.TH).correlated == -1  # p must be < 0.05

    def test_correlated_undefined_resolution_negative(self):
        s = ExpertiseScores(
            precision=0.9, recall=0.9, resolution=None, resolution_p=None, calibration=0.01
        )
        assert labels_from_scores(s, self.TH).correlated == -1

    def test_calibrated_uses_absolute_value(self):
        s = ExpertiseScores(
            precision=0.9, recall=0.9, resolution=0.9, resolution_p=0.01, calibration=-0.05
        )
        assert labels_from_scores(s, self.TH).calibrated == +1

    def test_undefined_scores_all_negative(self):
        s = ExpertiseScores(
            precision=None, recall=0.0, resolution=None, resolution_p=None, calibration=None
        )
        assert labels_from_scores(s, self.TH) == ALL_NEGATIVE

    def test_label_vector_validation_and_round_trip(self):
        with pytest.raises(ValueError):
            LabelVector(1, 0, 1, 1)
        v = LabelVector(1, -1, 1, -1)
        assert LabelVector.from_tuple(v.as_tuple()) == v
