"""Synthetic matcher population generator.

Four matcher archetypes at desk scale:

  A  precise and thorough, confidence tracks correctness, well calibrated
  B  imprecise and incomplete, over-confident, ignores the top-left
     metadata region of the screen
  C  precise but incomplete, moderate confidence-correctness coupling
  D  precise and thorough but uncorrelated and under-confident

Sessions are pure functions of (params, seed) and always pass session
validation.  Archetype ground truth is returned in a separate manifest,
never inside the session itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .session import (
    Decision,
    LEFT_CLICK,
    MOVE,
    MatcherSession,
    MouseEvent,
    RIGHT_CLICK,
    ReferenceMatch,
    SCROLL,
    TaskSpec,
    match_of,
    matrix_from_history,
)

SCREEN = (1280, 960)
WARMUP_DECISIONS = 3

# named screen regions (fractional centers / spreads)
REGIONS = {
    "metadata_tl": ((0.13, 0.12), (0.07, 0.06)),
    "source_tree": ((0.32, 0.18), (0.10, 0.09)),
    "target_tree": ((0.70, 0.16), (0.10, 0.08)),
    "matrix": ((0.50, 0.68), (0.16, 0.12)),
    "properties": ((0.87, 0.45), (0.06, 0.10)),
}


@dataclass(frozen=True)
class ArchetypeParams:
    archetype: str
    target_precision: float
    target_recall: float
    target_gamma: float
    target_calibration: float  # signed: positive = over-confident
    confidence_noise: float
    n_decisions_mean: float
    n_decisions_std: float
    region_weights: dict
    events_per_decision: float = 10.0
    scroll_prob: float = 0.12
    right_click_prob: float = 0.02
    # optional within-archetype quality spread: per-session quality q in
    # [0, 1] interpolates gamma/calibration across these ranges and slows
    # the work tempo for low-quality sessions, so the planted variation
    # is visible in the behavioral features
    gamma_range: tuple[float, float] | None = None
    calibration_range: tuple[float, float] | None = None
    tempo_spread: float = 0.0


ARCHETYPES = {
    "A": ArchetypeParams(
        archetype="A",
        target_precision=0.75,
        target_recall=0.80,
        target_gamma=0.815,
        target_calibration=0.06,
        confidence_noise=0.08,
        n_decisions_mean=55,
        n_decisions_std=6,
        gamma_range=(0.68, 0.95),
        calibration_range=(0.0, 0.12),
        tempo_spread=0.8,
        region_weights={
            "metadata_tl": 0.15,
            "source_tree": 0.25,
            "target_tree": 0.25,
            "matrix": 0.30,
            "properties": 0.05,
        },
    ),
    "B": ArchetypeParams(
        archetype="B",
        target_precision=0.28,
        target_recall=0.25,
        target_gamma=0.25,
        target_calibration=0.30,
        confidence_noise=0.12,
        n_decisions_mean=50,
        n_decisions_std=7,
        region_weights={
            "metadata_tl": 0.0,  # refrains from the metadata region
            "source_tree": 0.15,
            "target_tree": 0.25,
            "matrix": 0.45,
            "properties": 0.15,
        },
        scroll_prob=0.25,
    ),
    "C": ArchetypeParams(
        archetype="C",
        target_precision=0.65,
        target_recall=0.14,
        target_gamma=0.35,
        target_calibration=-0.15,
        confidence_noise=0.10,
        n_decisions_mean=45,
        n_decisions_std=6,
        region_weights={
            "metadata_tl": 0.08,
            "source_tree": 0.12,
            "target_tree": 0.55,
            "matrix": 0.20,
            "properties": 0.05,
        },
    ),
    "D": ArchetypeParams(
        archetype="D",
        target_precision=0.72,
        target_recall=0.75,
        target_gamma=0.0,
        target_calibration=-0.25,
        confidence_noise=0.12,
        n_decisions_mean=58,
        n_decisions_std=6,
        region_weights={
            "metadata_tl": 0.10,
            "source_tree": 0.18,
            "target_tree": 0.18,
            "matrix": 0.34,
            "properties": 0.20,
        },
        events_per_decision=14.0,
    ),
}


def generate_task(n: int, m: int, ref_density: float, seed: int) -> tuple[TaskSpec, ReferenceMatch]:
    """A task plus a one-to-one reference match of exactly
    floor(ref_density * n * m) pairs."""
    count = math.floor(ref_density * n * m)
    if count < 1 or count > min(n, m):
        raise ConfigurationError(
            f"reference density {ref_density} infeasible for {n}x{m} "
            f"(needs 1 <= {count} <= {min(n, m)} one-to-one pairs)"
        )
    rng = np.random.default_rng(seed)
    rows = rng.permutation(n)[:count]
    cols = rng.permutation(m)[:count]
    task = TaskSpec(task_id=f"synth-{n}x{m}-s{seed}", n=n, m=m)
    return task, ReferenceMatch.from_pairs(zip(rows.tolist(), cols.tolist()))


def _stochastic_round(value: float, rng) -> int:
    low = math.floor(value)
    return low + (1 if rng.random() < value - low else 0)


def _pick_pairs(task: TaskSpec, ref: ReferenceMatch, params: ArchetypeParams, rng):
    """Choose the correct / incorrect pairs of the final match so the
    expected precision and recall land on the archetype targets."""
    positives = sorted(ref.positives)
    k_correct = int(np.clip(_stochastic_round(params.target_recall * len(positives), rng), 1, len(positives)))
    wanted_wrong = k_correct * (1 - params.target_precision) / params.target_precision
    k_wrong = _stochastic_round(wanted_wrong, rng)
    chosen_correct = [positives[i] for i in rng.choice(len(positives), size=k_correct, replace=False)]
    wrong = []
    seen = set(ref.positives)
    while len(wrong) < k_wrong:
        pair = (int(rng.integers(task.n)), int(rng.integers(task.m)))
        if pair not in seen:
            seen.add(pair)
            wrong.append(pair)
    return chosen_correct, wrong


def _confidences(
    correct_flags: np.ndarray, params: ArchetypeParams, gamma_target: float, rng
) -> np.ndarray:
    """Correctness-coupled confidence draws.  The separation between the
    correct and incorrect distributions is set from the gamma target via
    the normal model gamma = 2*Phi(d') - 1."""
    from scipy.stats import norm

    d_prime = norm.ppf((gamma_target + 1) / 2)
    delta = d_prime * params.confidence_noise * math.sqrt(2)
    center = 0.55
    means = np.where(correct_flags, center + delta / 2, center - delta / 2)
    return means + rng.normal(0, params.confidence_noise, size=len(correct_flags))


def _plant_calibration(confs: np.ndarray, realized_precision: float, target_cal: float) -> np.ndarray:
    """Shift all confidences so the history mean hits precision + target
    calibration; iterate to absorb clipping."""
    wanted = float(np.clip(realized_precision + target_cal, 0.03, 0.97))
    out = confs.copy()
    for _ in range(4):
        out = np.clip(out + (wanted - out.mean()), 0.01, 0.99)
    return out


def _mouse_events(decision_times, params: ArchetypeParams, tempo: float, rng) -> list[MouseEvent]:
    width, height = SCREEN
    names = sorted(REGIONS)
    weights = np.array([params.region_weights.get(n, 0.0) for n in names])
    weights = weights / weights.sum()

    def region_point(region):
        (cx, cy), (sx, sy) = REGIONS[region]
        x = np.clip(rng.normal(cx, sx), 0.0, 1.0) * width
        y = np.clip(rng.normal(cy, sy), 0.0, 1.0) * height
        return float(x), float(y)

    events = []
    t_start = max(decision_times[0] - 2.0, 0.0)
    prev = region_point(names[int(rng.choice(len(names), p=weights))])
    prev_t = t_start
    for d_time in decision_times:
        n_events = max(2, _stochastic_round(params.events_per_decision * tempo, rng))
        target = region_point(names[int(rng.choice(len(names), p=weights))])
        times = np.sort(rng.uniform(prev_t, d_time, size=n_events - 1))
        for j, t in enumerate(times):
            frac = (j + 1) / (len(times) + 1)
            x = prev[0] + (target[0] - prev[0]) * frac + rng.normal(0, 12)
            y = prev[1] + (target[1] - prev[1]) * frac + rng.normal(0, 12)
            roll = rng.random()
            if roll < params.scroll_prob:
                kind = SCROLL
            elif roll < params.scroll_prob + params.right_click_prob:
                kind = RIGHT_CLICK
            else:
                kind = MOVE
            events.append(
                MouseEvent(
                    x=float(np.clip(x, 0, width)),
                    y=float(np.clip(y, 0, height)),
                    kind=kind,
                    t=float(t),
                )
            )
        # the decision itself lands as a left click at the target point
        events.append(MouseEvent(x=target[0], y=target[1], kind=LEFT_CLICK, t=float(d_time)))
        prev = target
        prev_t = d_time
    return events


def generate_session(
    task: TaskSpec,
    ref: ReferenceMatch,
    params: ArchetypeParams,
    seed: int,
    matcher_id: str | None = None,
) -> MatcherSession:
    rng = np.random.default_rng(seed)
    # per-session quality draw; archetypes without a configured spread
    # sit at their fixed targets
    quality = float(rng.random())
    if params.gamma_range is not None:
        lo, hi = params.gamma_range
        gamma_target = lo + (hi - lo) * quality
    else:
        gamma_target = params.target_gamma
    if params.calibration_range is not None:
        lo, hi = params.calibration_range
        cal_target = hi - (hi - lo) * quality  # high quality -> small bias
    else:
        cal_target = params.target_calibration
    tempo = 1.0 + params.tempo_spread * (1.0 - quality)

    correct_pairs, wrong_pairs = _pick_pairs(task, ref, params, rng)
    pairs = correct_pairs + wrong_pairs
    correctness = {p: (p in ref.positives) for p in pairs}

    n_decisions = int(np.clip(round(rng.normal(params.n_decisions_mean, params.n_decisions_std)), len(pairs), 120))
    visits = list(pairs)
    visits += [pairs[int(rng.integers(len(pairs)))] for _ in range(n_decisions - len(pairs))]
    order = rng.permutation(len(visits))
    visits = [visits[i] for i in order]

    flags = np.array([correctness[p] for p in visits])
    confs = _confidences(flags, params, gamma_target, rng)

    gaps = rng.exponential(4.0 * tempo, size=len(visits)) + 0.8
    times = np.cumsum(gaps) + 1.0

    # shift confidences so the history mean lands on P + target calibration
    history = tuple(
        Decision(row=p[0], col=p[1], confidence=float(np.clip(c, 0.01, 0.99)), t=float(t))
        for p, c, t in zip(visits, confs, times)
    )
    final = match_of(matrix_from_history(history, task))
    hits = len(final.pairs & ref.positives)
    realized_p = hits / len(final) if len(final) else 0.0
    confs = _plant_calibration(confs, realized_p, cal_target)
    history = tuple(
        Decision(row=p[0], col=p[1], confidence=float(c), t=float(t))
        for p, c, t in zip(visits, confs, times)
    )

    movement = tuple(_mouse_events(times, params, tempo, rng))
    return MatcherSession(
        matcher_id=matcher_id or f"{params.archetype}-{seed}",
        task=task,
        screen=SCREEN,
        history=history,
        movement=movement,
        warmup_count=min(WARMUP_DECISIONS, len(history)),
    )


def generate_population(
    spec: list[tuple[ArchetypeParams, int]],
    task: TaskSpec,
    ref: ReferenceMatch,
    seed: int,
) -> tuple[list[MatcherSession], dict[str, str]]:
    """Independent sessions with per-session derived seeds.  Returns the
    sessions plus a manifest mapping matcher_id -> archetype (ground
    truth for the test harness only)."""
    if any(count < 1 for _, count in spec):
        raise ConfigurationError("archetype counts must be >= 1")
    seeds = np.random.SeedSequence(seed).generate_state(sum(c for _, c in spec))
    sessions = []
    manifest = {}
    i = 0
    for params, count in spec:
        for j in range(count):
            matcher_id = f"{params.archetype}{j:03d}"
            session = generate_session(task, ref, params, int(seeds[i]), matcher_id=matcher_id)
            sessions.append(session)
            manifest[matcher_id] = params.archetype
            i += 1
    return sessions, manifest


def default_population_spec(per_archetype: int = 30) -> list[tuple[ArchetypeParams, int]]:
    return [(ARCHETYPES[a], per_archetype) for a in "ABCD"]
