import numpy as np
import pytest

from mexi.behavior import (
    BEH_FEATURE_NAMES,
    ConsensusTable,
    IDLE_GAP_SECONDS,
    MOU_FEATURE_NAMES,
    behavioral_features,
    build_consensus,
    mouse_features,
)
from mexi.errors import ConfigurationError, UndefinedMeasureError
from mexi.session import Decision, Match, MouseEvent, TaskSpec

from .conftest import WORKED_HISTORY, random_session


class TestBehavioralFeatures:
    def test_schema(self):
        f = behavioral_features(WORKED_HISTORY)
        assert tuple(f) == BEH_FEATURE_NAMES

    def test_worked_history_values(self):
        f = behavioral_features(WORKED_HISTORY)
        assert f["beh.avg_conf"] == pytest.approx(0.67)
        assert f["beh.min_conf"] == pytest.approx(0.45)
        assert f["beh.max_conf"] == pytest.approx(1.0)
        assert f["beh.total_duration"] == pytest.approx(34.0 - 3.0)
        assert f["beh.n_decisions"] == 5.0
        assert f["beh.n_distinct_pairs"] == 4.0  # (0,0) visited twice
        assert f["beh.n_mind_changes"] == 1.0
        gaps = [5.0, 7.0, 1.0, 18.0]
        assert f["beh.avg_time_gap"] == pytest.approx(np.mean(gaps))
        assert f["beh.std_time_gap"] == pytest.approx(np.std(gaps))
        assert f["beh.max_time_gap"] == 18.0

    def test_single_decision_gaps_are_zero(self):
        f = behavioral_features((Decision(row=0, col=0, confidence=0.5, t=4.0),))
        assert f["beh.avg_time_gap"] == 0.0
        assert f["beh.std_time_gap"] == 0.0
        assert f["beh.max_time_gap"] == 0.0
        assert f["beh.total_duration"] == 0.0
        assert f["beh.n_mind_changes"] == 0.0

    def test_empty_history_undefined(self):
        with pytest.raises(UndefinedMeasureError):
            behavioral_features(())

    def test_mind_changes_counts_revisits(self):
        history = tuple(
            Decision(row=0, col=0, confidence=0.5, t=float(i + 1)) for i in range(5)
        )
        f = behavioral_features(history)
        assert f["beh.n_distinct_pairs"] == 1.0
        assert f["beh.n_mind_changes"] == 4.0


class TestMouseFeatures:
    def test_schema(self):
        f = mouse_features(())
        assert tuple(f) == MOU_FEATURE_NAMES

    def test_empty_map_all_zero(self):
        assert all(v == 0.0 for v in mouse_features(()).values())

    def test_path_length_and_speed(self):
        events = (
            MouseEvent(x=0.0, y=0.0, kind="move", t=0.0),
            MouseEvent(x=3.0, y=4.0, kind="move", t=1.0),  # step of 5
            MouseEvent(x=3.0, y=4.0, kind="l", t=1.5),
        )
        f = mouse_features(events)
        assert f["mou.total_path_length"] == pytest.approx(5.0)
        assert f["mou.total_time"] == pytest.approx(1.5)
        assert f["mou.avg_speed"] == pytest.approx(5.0 / 1.5)
        assert f["mou.n_moves"] == 2.0
        assert f["mou.n_left"] == 1.0
        assert f["mou.idle_ratio"] == 0.0

    def test_idle_gaps_excluded_from_active_time(self):
        events = (
            MouseEvent(x=0.0, y=0.0, kind="move", t=0.0),
            MouseEvent(x=10.0, y=0.0, kind="move", t=1.0),
            MouseEvent(x=20.0, y=0.0, kind="move", t=1.0 + IDLE_GAP_SECONDS + 5.0),
        )
        f = mouse_features(events)
        # second gap (7s) is idle: speed uses only the 1s active gap but
        # the full 20px path
        assert f["mou.avg_speed"] == pytest.approx(20.0 / 1.0)
        assert f["mou.idle_ratio"] == pytest.approx(0.5)

    def test_kind_counts(self):
        rng = np.random.default_rng(51)
        task = TaskSpec(task_id="t", n=3, m=3)
        s = random_session(rng, task, n_events=60)
        f = mouse_features(s.movement)
        kinds = [ev.kind for ev in s.movement]
        assert f["mou.n_moves"] == kinds.count("move")
        assert f["mou.n_left"] == kinds.count("l")
        assert f["mou.n_right"] == kinds.count("r")
        assert f["mou.n_scrolls"] == kinds.count("s")
        assert (
            f["mou.n_moves"] + f["mou.n_left"] + f["mou.n_right"] + f["mou.n_scrolls"]
            == len(s.movement)
        )

    def test_all_finite_on_random_sessions(self):
        rng = np.random.default_rng(52)
        task = TaskSpec(task_id="t", n=3, m=3)
        for _ in range(25):
            s = random_session(rng, task)
            assert all(np.isfinite(v) for v in mouse_features(s.movement).values())


class TestConsensus:
    def test_counts_and_agreement(self):
        task = TaskSpec(task_id="t", n=3, m=3)
        matches = [
            Match({(0, 0): 0.9, (1, 1): 0.5}),
            Match({(0, 0): 0.4}),
            Match({(2, 2): 0.7}),
        ]
        table = build_consensus(matches, task)
        assert table.train_size == 3
        assert table.agreement(0, 0) == pytest.approx(2 / 3)
        assert table.agreement(1, 1) == pytest.approx(1 / 3)
        assert table.agreement(1, 2) == 0.0

    def test_out_of_range_pairs_have_zero_agreement(self):
        task = TaskSpec(task_id="t", n=2, m=2)
        table = build_consensus([Match({(0, 0): 0.5})], task)
        assert table.agreement(5, 5) == 0.0
        assert table.agreement(-1, 0) == 0.0

    def test_empty_training_set_rejected(self):
        with pytest.raises(ConfigurationError):
            build_consensus([], TaskSpec(task_id="t", n=2, m=2))

    def test_counts_sum_equals_total_pairs(self):
        task = TaskSpec(task_id="t", n=4, m=4)
        matches = [Match({(0, 0): 0.5, (1, 2): 0.3}), Match({(3, 3): 0.9})]
        table = build_consensus(matches, task)
        assert table.counts.sum() == 3
