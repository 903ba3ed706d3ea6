"""Training-set augmentation via sub-matchers: contiguous decision
windows of a parent session, used only during training."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ConfigurationError
from .expertise import LabelVector, ThresholdConfig, labels_from_scores, score_session
from .session import MatcherSession, ReferenceMatch, match_of, matrix_from_history


@dataclass(frozen=True)
class AugmentPlan:
    window_sizes: tuple[int, ...]
    stride: int
    variant_name: str

    def __post_init__(self):
        if any(w < 1 for w in self.window_sizes):
            raise ConfigurationError("window sizes must be >= 1")
        if self.stride < 1:
            raise ConfigurationError("stride must be >= 1")


VARIANTS = {
    "mexi_base": AugmentPlan(window_sizes=(), stride=1, variant_name="mexi_base"),
    "mexi_50": AugmentPlan(window_sizes=(50,), stride=5, variant_name="mexi_50"),
    "mexi_70": AugmentPlan(window_sizes=(30, 40, 50, 60, 70), stride=10, variant_name="mexi_70"),
}


def plan_for_variant(name: str) -> AugmentPlan:
    if name not in VARIANTS:
        raise ConfigurationError(f"unknown variant '{name}', expected one of {sorted(VARIANTS)}")
    return VARIANTS[name]


def window_count(history_len: int, window: int, stride: int) -> int:
    """Sliding windows (plus the final aligned one): ceil((|H|-w)/stride)+1,
    0 when the window does not fit."""
    if window > history_len:
        return 0
    return -((history_len - window) // -stride) + 1


def sub_matchers(session: MatcherSession, plan: AugmentPlan) -> list[MatcherSession]:
    """All windowed sub-sessions for the plan, marked training-only via
    their matcher_id suffix.  Movement events are clipped to each
    window's time span; warmup decisions are not carried over."""
    if not session.history:
        raise ConfigurationError("cannot window an empty history")
    subs = []
    n = len(session.history)
    for window in plan.window_sizes:
        if window > n:
            continue
        starts = sorted({min(s, n - window) for s in range(0, n - window + 1, plan.stride)} | {n - window})
        for start in starts:
            history = session.history[start : start + window]
            t0, t1 = history[0].t, history[-1].t
            movement = tuple(ev for ev in session.movement if t0 <= ev.t <= t1)
            subs.append(
                replace(
                    session,
                    matcher_id=f"{session.matcher_id}#sub{window}@{start}",
                    history=history,
                    movement=movement,
                    warmup_count=0,
                )
            )
    return subs


def is_sub_matcher(session: MatcherSession) -> bool:
    return "#sub" in session.matcher_id


def label_sub_matcher(
    sub: MatcherSession, ref: ReferenceMatch, thresholds: ThresholdConfig, seed: int = 0
) -> LabelVector:
    """Relabel a window from its own performance against the reference,
    using the full-population thresholds."""
    match = match_of(matrix_from_history(sub.history, sub.task))
    scores = score_session(sub.history, match, ref, seed=seed)
    return labels_from_scores(scores, thresholds)
