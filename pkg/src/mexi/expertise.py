"""The four expertise measures and the ±1 label vector.

A matcher is characterized along four dimensions: precise (precision of
the final match), thorough (recall), correlated (Goodman-Kruskal gamma
between confidence and correctness, significance-gated) and calibrated
(mean confidence close to precision).  Thresholds for the cognitive
measures are percentiles of the training population.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ConfigurationError, UndefinedMeasureError
from .session import Match, ReferenceMatch, Decision

EXHAUSTIVE_PERMUTATION_LIMIT = 10_000
MONTE_CARLO_PERMUTATIONS = 10_000

LABEL_NAMES = ("precise", "thorough", "correlated", "calibrated")


@dataclass(frozen=True)
class ExpertiseScores:
    precision: float | None
    recall: float
    resolution: float | None  # gamma; None when undefined
    resolution_p: float | None
    calibration: float | None  # mean confidence - precision; None with precision

    @property
    def defined(self) -> bool:
        return self.precision is not None


@dataclass(frozen=True)
class ThresholdConfig:
    delta_p: float = 0.5
    delta_r: float = 0.5
    delta_res: float = 0.0
    delta_cal: float = 0.0
    p_significance: float = 0.05


@dataclass(frozen=True)
class LabelVector:
    precise: int
    thorough: int
    correlated: int
    calibrated: int

    def __post_init__(self):
        for name in LABEL_NAMES:
            if getattr(self, name) not in (+1, -1):
                raise ValueError(f"label '{name}' must be +1 or -1")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.precise, self.thorough, self.correlated, self.calibrated)

    def positives(self) -> frozenset[str]:
        return frozenset(n for n in LABEL_NAMES if getattr(self, n) == +1)

    @classmethod
    def from_tuple(cls, values) -> "LabelVector":
        return cls(*(int(v) for v in values))


ALL_NEGATIVE = LabelVector(-1, -1, -1, -1)


def precision(match: Match, ref: ReferenceMatch) -> float:
    """Fraction of the matcher's final entries that are correct."""
    if len(match) == 0:
        raise UndefinedMeasureError("precision undefined for an empty match")
    hits = len(match.pairs & ref.positives)
    return hits / len(match)


def recall(match: Match, ref: ReferenceMatch) -> float:
    """Fraction of the reference match the matcher covered."""
    if len(ref) == 0:
        raise ConfigurationError("recall needs a non-empty reference match")
    hits = len(match.pairs & ref.positives)
    return hits / len(ref)


def _gamma(confidences: np.ndarray, correct: np.ndarray) -> float | None:
    """Goodman-Kruskal gamma between confidence and binary correctness.

    A (correct, incorrect) entry pair is concordant when the correct one
    has strictly higher confidence, discordant when strictly lower; ties
    are dropped.  None when no comparable pair exists.
    """
    right = confidences[correct]
    wrong = confidences[~correct]
    if len(right) == 0 or len(wrong) == 0:
        return None
    n_c = int(np.sum(right[:, None] > wrong[None, :]))
    n_d = int(np.sum(right[:, None] < wrong[None, :]))
    if n_c + n_d == 0:
        return None
    return (n_c - n_d) / (n_c + n_d)


def resolution(
    match: Match, ref: ReferenceMatch, seed: int = 0
) -> tuple[float | None, float | None]:
    """Gamma over the final match entries plus a one-sided permutation
    p-value under random reassignment of correctness among entries.

    Exhaustive over all correctness placements when their count is at
    most 10,000, otherwise seeded Monte-Carlo with 10,000 permutations.
    """
    pairs = sorted(match.entries)
    confidences = np.array([match.entries[p] for p in pairs])
    correct = np.array([p in ref.positives for p in pairs])
    gamma = _gamma(confidences, correct)
    if gamma is None:
        return None, None

    k = len(pairs)
    n_right = int(correct.sum())
    n_placements = math.comb(k, n_right)
    if n_placements <= EXHAUSTIVE_PERMUTATION_LIMIT:
        at_least = 0
        for chosen in combinations(range(k), n_right):
            mask = np.zeros(k, dtype=bool)
            mask[list(chosen)] = True
            g = _gamma(confidences, mask)
            if g is not None and g >= gamma - 1e-12:
                at_least += 1
        p = at_least / n_placements
    else:
        rng = np.random.default_rng(seed)
        at_least = 0
        for _ in range(MONTE_CARLO_PERMUTATIONS):
            g = _gamma(confidences, rng.permutation(correct))
            if g is not None and g >= gamma - 1e-12:
                at_least += 1
        p = at_least / MONTE_CARLO_PERMUTATIONS
    return gamma, p


def calibration(history: tuple[Decision, ...], match: Match, ref: ReferenceMatch) -> float:
    """Mean reported confidence over the whole history minus precision.

    Positive means over-confident, negative under-confident.
    """
    if not history:
        raise UndefinedMeasureError("calibration undefined for an empty history")
    mean_conf = sum(d.confidence for d in history) / len(history)
    return mean_conf - precision(match, ref)


def score_session(history, match: Match, ref: ReferenceMatch, seed: int = 0) -> ExpertiseScores:
    """All four measures for one session; empty matches yield an
    undefined score record instead of raising."""
    if len(match) == 0:
        return ExpertiseScores(
            precision=None, recall=0.0, resolution=None, resolution_p=None, calibration=None
        )
    gamma, p = resolution(match, ref, seed=seed)
    return ExpertiseScores(
        precision=precision(match, ref),
        recall=recall(match, ref),
        resolution=gamma,
        resolution_p=p,
        calibration=calibration(history, match, ref),
    )


def nearest_rank_percentile(values, pct: float) -> float:
    """Nearest-rank percentile: the ceil(pct/100 * N)-th smallest value."""
    ordered = sorted(values)
    if not ordered:
        raise ConfigurationError("percentile of an empty population")
    rank = max(1, math.ceil(pct / 100.0 * len(ordered)))
    return ordered[rank - 1]


def fit_thresholds(
    train_scores: list[ExpertiseScores],
    delta_p: float = 0.5,
    delta_r: float = 0.5,
    p_significance: float = 0.05,
) -> ThresholdConfig:
    """Population thresholds: delta_res is the 80th percentile of defined
    training resolutions, delta_cal the 20th percentile of |calibration|.
    Matchers with undefined measures are excluded."""
    defined = [s for s in train_scores if s.defined]
    if not defined:
        raise ConfigurationError("cannot fit thresholds on an empty population")
    resolutions = [s.resolution for s in defined if s.resolution is not None]
    if not resolutions:
        raise ConfigurationError("no defined resolutions in training population")
    calibrations = [abs(s.calibration) for s in defined]
    return ThresholdConfig(
        delta_p=delta_p,
        delta_r=delta_r,
        delta_res=nearest_rank_percentile(resolutions, 80),
        delta_cal=nearest_rank_percentile(calibrations, 20),
        p_significance=p_significance,
    )


def labels_from_scores(scores: ExpertiseScores, thresholds: ThresholdConfig) -> LabelVector:
    """Threshold the four measures into a ±1 label vector.

    Matchers with undefined precision (empty match) get all -1.
    """
    if not scores.defined:
        return ALL_NEGATIVE
    correlated = (
        scores.resolution is not None
        and scores.resolution > thresholds.delta_res
        and scores.resolution_p < thresholds.p_significance
    )
    return LabelVector(
        precise=+1 if scores.precision > thresholds.delta_p else -1,
        thorough=+1 if scores.recall > thresholds.delta_r else -1,
        correlated=+1 if correlated else -1,
        calibrated=+1 if abs(scores.calibration) < thresholds.delta_cal else -1,
    )
