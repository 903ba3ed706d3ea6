"""Evaluation: accuracy metrics, the seven baselines, bootstrap
significance, the k-fold protocol, expert utilization and early
identification."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import characterizer
from .augment import is_sub_matcher, plan_for_variant
from .behavior import behavioral_features
from .errors import BaselineInapplicableError, ConfigurationError, EvaluationError
from .expertise import (
    LabelVector,
    calibration,
    labels_from_scores,
    precision,
    score_session,
)
from .neural.nets import TrainerConfig
from .session import (
    DEFAULT_BINS,
    MatcherSession,
    ReferenceMatch,
    match_of,
    matrix_from_history,
    truncate_history,
)

BASELINE_NAMES = ("rand", "rand_freq", "conf", "qual_test", "self_assess", "lrsm", "beh")
SELF_ASSESS_CAL_LIMIT = 0.2
SELF_ASSESS_PRECISION_FLOOR = 0.6
DEFAULT_BOOTSTRAP_SAMPLES = 10_000


def accuracy_single(preds: list[LabelVector], truths: list[LabelVector], label_index: int) -> float:
    """Fraction of matchers whose predicted label matches the truth."""
    if len(preds) != len(truths) or not preds:
        raise EvaluationError("prediction/truth lists must be non-empty and aligned")
    hits = sum(
        p.as_tuple()[label_index] == t.as_tuple()[label_index] for p, t in zip(preds, truths)
    )
    return hits / len(preds)


def accuracy_multilabel(preds: list[LabelVector], truths: list[LabelVector]) -> float:
    """Mean Jaccard overlap of the positive label sets; 1 when both sets
    are empty (both agree the matcher has no expertise)."""
    if len(preds) != len(truths) or not preds:
        raise EvaluationError("prediction/truth lists must be non-empty and aligned")
    total = 0.0
    for p, t in zip(preds, truths):
        pos_p, pos_t = p.positives(), t.positives()
        union = pos_p | pos_t
        total += len(pos_p & pos_t) / len(union) if union else 1.0
    return total / len(preds)


def _uniform_vector(flag: bool) -> LabelVector:
    return LabelVector.from_tuple((+1,) * 4 if flag else (-1,) * 4)


def _warmup_stats(session: MatcherSession, ref: ReferenceMatch):
    """Precision and calibration over the warmup decisions only."""
    if session.warmup_count == 0:
        raise BaselineInapplicableError(
            f"matcher {session.matcher_id} has no warmup decisions"
        )
    warmup = session.history[: session.warmup_count]
    match = match_of(matrix_from_history(warmup, session.task))
    if len(match) == 0:
        return 0.0, None
    p = precision(match, ref)
    return p, calibration(warmup, match, ref)


def _mean_confidence(session: MatcherSession) -> float:
    return behavioral_features(session.history)["beh.avg_conf"]


def run_baseline(
    name: str,
    train_sessions: list[MatcherSession],
    train_labels: dict[str, LabelVector],
    test_sessions: list[MatcherSession],
    ref: ReferenceMatch,
    seed: int,
    trainer: TrainerConfig | None = None,
    bins=DEFAULT_BINS,
) -> list[LabelVector]:
    """Predictions of one baseline for the test sessions."""
    rng = np.random.default_rng(seed)
    if name == "rand":
        return [
            LabelVector.from_tuple(rng.choice([-1, +1], size=4)) for _ in test_sessions
        ]
    if name == "rand_freq":
        rates = [
            np.mean([train_labels[s.matcher_id].as_tuple()[i] == +1 for s in train_sessions])
            for i in range(4)
        ]
        return [
            LabelVector.from_tuple([+1 if rng.random() < rates[i] else -1 for i in range(4)])
            for _ in test_sessions
        ]
    if name == "conf":
        cutoff = float(np.median([_mean_confidence(s) for s in train_sessions]))
        return [_uniform_vector(_mean_confidence(s) > cutoff) for s in test_sessions]
    if name == "qual_test":
        cutoff = float(np.median([_warmup_stats(s, ref)[0] for s in train_sessions]))
        return [_uniform_vector(_warmup_stats(s, ref)[0] > cutoff) for s in test_sessions]
    if name == "self_assess":
        preds = []
        for s in test_sessions:
            p, cal = _warmup_stats(s, ref)
            ok = (
                cal is not None
                and abs(cal) < SELF_ASSESS_CAL_LIMIT
                and p > SELF_ASSESS_PRECISION_FLOOR
            )
            preds.append(_uniform_vector(ok))
        return preds
    if name in ("lrsm", "beh"):
        prefixes = ("lrsm.",) if name == "lrsm" else ("beh.", "mou.")
        trainer = trainer or TrainerConfig(seed=seed)
        model = characterizer.train(
            train_sessions,
            ref,
            plan_for_variant("mexi_base"),
            trainer,
            bins=bins,
            feature_prefixes=prefixes,
        )
        return [characterizer.predict(model, s)[0] for s in test_sessions]
    raise ConfigurationError(f"unknown baseline '{name}'")


def bootstrap_compare(
    preds_a: list[LabelVector],
    preds_b: list[LabelVector],
    truths: list[LabelVector],
    metric,
    n_samples: int = DEFAULT_BOOTSTRAP_SAMPLES,
    seed: int = 0,
) -> float:
    """One-sided two-sample bootstrap p-value for the null that method a
    is no better than method b, resampling matchers with replacement."""
    k = len(truths)
    if k < 2 or len(preds_a) != k or len(preds_b) != k:
        raise EvaluationError("bootstrap needs >= 2 aligned matchers")
    rng = np.random.default_rng(seed)
    not_better = 0
    for _ in range(n_samples):
        idx = rng.integers(0, k, size=k)
        sample_a = [preds_a[i] for i in idx]
        sample_b = [preds_b[i] for i in idx]
        sample_t = [truths[i] for i in idx]
        if metric(sample_a, sample_t) <= metric(sample_b, sample_t):
            not_better += 1
    return not_better / n_samples


@dataclass
class EvalReport:
    variant: str
    k_folds: int
    seed: int
    fold_assignments: dict[str, int]
    accuracies: dict[str, dict[str, float]]  # method -> metric -> value
    bootstrap_p: dict[str, float]  # "mexi_vs_<baseline>" -> p on A_ML
    utilization: dict[str, dict[str, float | None]]
    early_utilization: dict[str, dict[str, float | None]]
    predictions: dict[str, dict[str, list[int]]]  # method -> matcher_id -> labels
    truths: dict[str, list[int]]
    config: dict = field(default_factory=dict)

    def to_jsonable(self) -> dict:
        return {
            "variant": self.variant,
            "k_folds": self.k_folds,
            "seed": self.seed,
            "fold_assignments": self.fold_assignments,
            "accuracies": self.accuracies,
            "bootstrap_p": self.bootstrap_p,
            "utilization": self.utilization,
            "early_utilization": self.early_utilization,
            "predictions": self.predictions,
            "truths": self.truths,
            "config": self.config,
        }


def _method_accuracies(preds, truths) -> dict[str, float]:
    out = {f"A_{k}": accuracy_single(preds, truths, i) for i, k in enumerate(("P", "R", "Res", "Cal"))}
    out["A_ML"] = accuracy_multilabel(preds, truths)
    return out


def utilization_analysis(
    selections: dict[str, list[str]],
    sessions: dict[str, MatcherSession],
    scores: dict,
) -> dict[str, dict[str, float | None]]:
    """Mean raw performance of each method's selected matchers, plus the
    unfiltered population.  Resolution averages over the defined subset;
    calibration is reported as mean absolute value."""
    table = {}
    rows = dict(selections)
    rows["no_filter"] = list(sessions)
    for method, chosen in rows.items():
        if not chosen:
            table[method] = {"mean_P": None, "mean_R": None, "mean_Res": None,
                             "mean_abs_Cal": None, "count": 0, "empty": True}
            continue
        chosen_scores = [scores[mid] for mid in chosen]
        precisions = [s.precision for s in chosen_scores if s.precision is not None]
        recalls = [s.recall for s in chosen_scores]
        resolutions = [s.resolution for s in chosen_scores if s.resolution is not None]
        cals = [abs(s.calibration) for s in chosen_scores if s.calibration is not None]
        table[method] = {
            "mean_P": float(np.mean(precisions)) if precisions else None,
            "mean_R": float(np.mean(recalls)),
            "mean_Res": float(np.mean(resolutions)) if resolutions else None,
            "mean_abs_Cal": float(np.mean(cals)) if cals else None,
            "count": len(chosen),
            "empty": False,
        }
    return table


def early_identification(model, sessions: list[MatcherSession], median_decisions: int):
    """Truncate each session to half the median decision count, then
    predict without any reference-match access."""
    cutoff = median_decisions // 2
    preds = {}
    for session in sessions:
        truncated = truncate_history(session, cutoff)
        preds[session.matcher_id] = characterizer.predict(model, truncated)[0]
    return preds


def _all_positive(label: LabelVector) -> bool:
    return all(v == +1 for v in label.as_tuple())


def kfold_protocol(
    sessions: list[MatcherSession],
    ref: ReferenceMatch,
    k: int = 5,
    variant: str = "mexi_50",
    seed: int = 0,
    trainer: TrainerConfig | None = None,
    baselines: tuple[str, ...] = BASELINE_NAMES,
    bins=DEFAULT_BINS,
    bootstrap_samples: int = DEFAULT_BOOTSTRAP_SAMPLES,
) -> EvalReport:
    """Randomized k-fold evaluation with all fitting per fold.

    Thresholds, consensus, fusion nets and classifiers are fit on each
    training split only; sub-matchers never reach a test fold.
    """
    if len(sessions) < k:
        raise ConfigurationError(f"need at least k={k} sessions, got {len(sessions)}")
    if any(is_sub_matcher(s) for s in sessions):
        raise ConfigurationError("sub-matchers are training-only and cannot be evaluated")
    plan = plan_for_variant(variant)
    trainer = trainer or TrainerConfig(seed=seed)

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(sessions))
    folds = {sessions[idx].matcher_id: int(i % k) for i, idx in enumerate(order)}

    by_id = {s.matcher_id: s for s in sessions}
    all_scores = {}
    truths: dict[str, LabelVector] = {}
    predictions: dict[str, dict[str, LabelVector]] = {m: {} for m in ("mexi",) + tuple(baselines)}
    early_preds: dict[str, LabelVector] = {}

    for fold in range(k):
        train_split = [s for s in sessions if folds[s.matcher_id] != fold]
        test_split = [s for s in sessions if folds[s.matcher_id] == fold]
        if len(train_split) < 5:
            raise ConfigurationError(f"fold {fold} training split too small for threshold fitting")

        fold_trainer = TrainerConfig(
            learning_rate=trainer.learning_rate,
            beta1=trainer.beta1,
            beta2=trainer.beta2,
            epochs=trainer.epochs,
            batch_size=trainer.batch_size,
            dropout=trainer.dropout,
            seed=seed + 7919 * fold,
        )
        model = characterizer.train(train_split, ref, plan, fold_trainer, bins=bins)

        train_labels = {}
        for s in train_split:
            match = match_of(matrix_from_history(s.history, s.task))
            scores = score_session(s.history, match, ref, seed=seed)
            train_labels[s.matcher_id] = labels_from_scores(scores, model.thresholds)

        for s in test_split:
            match = match_of(matrix_from_history(s.history, s.task))
            scores = score_session(s.history, match, ref, seed=seed)
            all_scores[s.matcher_id] = scores
            truths[s.matcher_id] = labels_from_scores(scores, model.thresholds)
            predictions["mexi"][s.matcher_id] = characterizer.predict(model, s)[0]

        for bi, name in enumerate(baselines):
            fold_preds = run_baseline(
                name, train_split, train_labels, test_split, ref,
                seed=seed + 104729 * fold + 1009 * bi,
                trainer=fold_trainer, bins=bins,
            )
            for s, p in zip(test_split, fold_preds):
                predictions[name][s.matcher_id] = p

        median_dec = int(np.median([len(s.history) for s in test_split]))
        early_preds.update(early_identification(model, test_split, median_dec))

    ordered_ids = [s.matcher_id for s in sessions]
    truth_list = [truths[m] for m in ordered_ids]
    accuracies = {}
    for method, preds in predictions.items():
        pred_list = [preds[m] for m in ordered_ids]
        accuracies[method] = _method_accuracies(pred_list, truth_list)

    bootstrap_p = {}
    mexi_list = [predictions["mexi"][m] for m in ordered_ids]
    for name in baselines:
        base_list = [predictions[name][m] for m in ordered_ids]
        bootstrap_p[f"mexi_vs_{name}"] = bootstrap_compare(
            mexi_list, base_list, truth_list, accuracy_multilabel,
            n_samples=bootstrap_samples, seed=seed + 15485863,
        )

    selection_methods = ("mexi", "conf", "qual_test", "self_assess")
    selections = {
        method: [m for m in ordered_ids if _all_positive(predictions[method][m])]
        for method in selection_methods
        if method in predictions
    }
    utilization = utilization_analysis(selections, by_id, all_scores)
    early_selection = {"mexi_early": [m for m in ordered_ids if _all_positive(early_preds[m])]}
    early_utilization = utilization_analysis(early_selection, by_id, all_scores)

    predictions["mexi_early"] = early_preds
    return EvalReport(
        variant=variant,
        k_folds=k,
        seed=seed,
        fold_assignments=folds,
        accuracies=accuracies,
        bootstrap_p=bootstrap_p,
        utilization=utilization,
        early_utilization=early_utilization,
        predictions={
            method: {m: list(p.as_tuple()) for m, p in preds.items()}
            for method, preds in predictions.items()
        },
        truths={m: list(t.as_tuple()) for m, t in truths.items()},
        config={
            "baselines": list(baselines),
            "bins": list(bins),
            "bootstrap_samples": bootstrap_samples,
            "trainer": {
                "learning_rate": trainer.learning_rate,
                "epochs": trainer.epochs,
                "batch_size": trainer.batch_size,
                "dropout": trainer.dropout,
            },
        },
    )
