"""Aggregated history features (beh.*), mouse features (mou.*) and the
training-set consensus table feeding the sequential features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, UndefinedMeasureError
from .session import (
    LEFT_CLICK,
    MOVE,
    RIGHT_CLICK,
    SCROLL,
    Decision,
    Match,
    MouseEvent,
    TaskSpec,
)

IDLE_GAP_SECONDS = 2.0

BEH_FEATURE_NAMES = (
    "beh.avg_conf",
    "beh.std_conf",
    "beh.min_conf",
    "beh.max_conf",
    "beh.avg_time_gap",
    "beh.std_time_gap",
    "beh.max_time_gap",
    "beh.total_duration",
    "beh.n_decisions",
    "beh.n_distinct_pairs",
    "beh.n_mind_changes",
)

MOU_FEATURE_NAMES = (
    "mou.total_path_length",
    "mou.total_time",
    "mou.avg_x",
    "mou.avg_y",
    "mou.std_x",
    "mou.std_y",
    "mou.n_moves",
    "mou.n_left",
    "mou.n_right",
    "mou.n_scrolls",
    "mou.avg_speed",
    "mou.idle_ratio",
)


def behavioral_features(history: tuple[Decision, ...]) -> dict[str, float]:
    """Aggregates over confidences, inter-decision gaps and revisits."""
    if not history:
        raise UndefinedMeasureError("behavioral features undefined for an empty history")
    confs = np.array([d.confidence for d in history])
    times = np.array([d.t for d in history])
    gaps = np.diff(times)
    distinct = len({(d.row, d.col) for d in history})
    return {
        "beh.avg_conf": float(confs.mean()),
        "beh.std_conf": float(confs.std()),
        "beh.min_conf": float(confs.min()),
        "beh.max_conf": float(confs.max()),
        "beh.avg_time_gap": float(gaps.mean()) if gaps.size else 0.0,
        "beh.std_time_gap": float(gaps.std()) if gaps.size else 0.0,
        "beh.max_time_gap": float(gaps.max()) if gaps.size else 0.0,
        "beh.total_duration": float(times[-1] - times[0]),
        "beh.n_decisions": float(len(history)),
        "beh.n_distinct_pairs": float(distinct),
        "beh.n_mind_changes": float(len(history) - distinct),
    }


def mouse_features(
    movement: tuple[MouseEvent, ...], idle_gap: float = IDLE_GAP_SECONDS
) -> dict[str, float]:
    """Aggregates over the movement map; an empty map yields all zeros.

    Path length sums Euclidean steps between consecutive events; gaps
    longer than ``idle_gap`` count as idle and are excluded from the
    active time used for speed.
    """
    if not movement:
        return {name: 0.0 for name in MOU_FEATURE_NAMES}
    xs = np.array([ev.x for ev in movement])
    ys = np.array([ev.y for ev in movement])
    ts = np.array([ev.t for ev in movement])
    steps = np.hypot(np.diff(xs), np.diff(ys))
    gaps = np.diff(ts)
    idle = gaps > idle_gap
    active_time = float(gaps[~idle].sum())
    path = float(steps.sum())
    kinds = [ev.kind for ev in movement]
    return {
        "mou.total_path_length": path,
        "mou.total_time": float(ts[-1] - ts[0]),
        "mou.avg_x": float(xs.mean()),
        "mou.avg_y": float(ys.mean()),
        "mou.std_x": float(xs.std()),
        "mou.std_y": float(ys.std()),
        "mou.n_moves": float(kinds.count(MOVE)),
        "mou.n_left": float(kinds.count(LEFT_CLICK)),
        "mou.n_right": float(kinds.count(RIGHT_CLICK)),
        "mou.n_scrolls": float(kinds.count(SCROLL)),
        "mou.avg_speed": path / active_time if active_time > 0 else 0.0,
        "mou.idle_ratio": float(idle.mean()) if gaps.size else 0.0,
    }


@dataclass(frozen=True)
class ConsensusTable:
    """Per-pair count of training matchers whose final match contains
    that pair.  Always built on the training set only."""

    counts: np.ndarray  # shape (n, m)
    train_size: int

    def agreement(self, row: int, col: int) -> float:
        """Normalized consensus in [0, 1].  Pairs outside the table
        (cross-task prediction) count as zero agreement."""
        n, m = self.counts.shape
        if self.train_size == 0 or not (0 <= row < n and 0 <= col < m):
            return 0.0
        return float(self.counts[row, col]) / self.train_size


def build_consensus(train_matches: list[Match], task: TaskSpec) -> ConsensusTable:
    if not train_matches:
        raise ConfigurationError("consensus table needs a non-empty training set")
    counts = np.zeros((task.n, task.m))
    for match in train_matches:
        for row, col in match.pairs:
            counts[row, col] += 1
    return ConsensusTable(counts=counts, train_size=len(train_matches))
