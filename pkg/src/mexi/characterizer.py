"""The expert characterizer: binary-relevance multi-label classification
over the fused feature vector, with late fusion of the sequence and
spatial net coefficients.

Training stages: fit thresholds and labels, generate and label
sub-matchers, train the fusion nets on sessions plus sub-matchers,
extract fused features for the training sessions, then train one binary
classifier per label.  Prediction never touches a reference match.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .augment import AugmentPlan, label_sub_matcher, sub_matchers
from .behavior import (
    BEH_FEATURE_NAMES,
    MOU_FEATURE_NAMES,
    ConsensusTable,
    behavioral_features,
    build_consensus,
    mouse_features,
)
from .errors import ConfigurationError, PipelineOrderError
from .expertise import (
    LABEL_NAMES,
    LabelVector,
    ThresholdConfig,
    fit_thresholds,
    labels_from_scores,
    score_session,
)
from .neural.nets import (
    SequenceSample,
    SeqModel,
    SpatialModel,
    TrainerConfig,
    encode_sequence,
    train_seq,
    train_spatial,
)
from .predictors import LRSM_FEATURE_NAMES, lrsm_features
from .session import (
    DEFAULT_BINS,
    EVENT_KINDS,
    MatcherSession,
    ReferenceMatch,
    TaskSpec,
    heatmaps_from_map,
    match_of,
    matrix_from_history,
)

SEQ_COEF_NAMES = tuple(f"seq.coef[{i}]" for i in range(4))
SPA_COEF_NAMES = tuple(
    f"spa.{kind}.coef[{i}]" for kind in EVENT_KINDS for i in range(4)
)

FULL_SCHEMA = LRSM_FEATURE_NAMES + BEH_FEATURE_NAMES + MOU_FEATURE_NAMES + SEQ_COEF_NAMES + SPA_COEF_NAMES

AGGREGATE_PREFIXES = ("lrsm.", "beh.", "mou.")


def targets_from_labels(labels: LabelVector) -> np.ndarray:
    """Map a ±1 label vector to {0,1} targets for the nets/classifiers."""
    return np.array([(v + 1) // 2 for v in labels.as_tuple()], dtype=np.float64)


class LogisticClassifier:
    """L2-regularized linear-logistic classifier trained by full-batch
    gradient descent; small, deterministic and self-contained."""

    family = "logistic"

    def __init__(self, l2: float = 0.01, learning_rate: float = 0.5, iterations: int = 800):
        self.l2 = l2
        self.learning_rate = learning_rate
        self.iterations = iterations
        self.w: np.ndarray | None = None
        self.b = 0.0

    def fit(self, x: np.ndarray, y: np.ndarray):
        n, d = x.shape
        self.w = np.zeros(d)
        self.b = float(np.log((y.mean() + 1e-9) / (1 - y.mean() + 1e-9)))
        for _ in range(self.iterations):
            p = 1.0 / (1.0 + np.exp(-(x @ self.w + self.b)))
            err = p - y
            grad_w = x.T @ err / n + self.l2 * self.w
            grad_b = float(err.mean())
            self.w -= self.learning_rate * grad_w
            self.b -= self.learning_rate * grad_b
        return self

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-(x @ self.w + self.b)))

    def to_jsonable(self):
        return {"family": self.family, "w": self.w.tolist(), "b": self.b, "l2": self.l2}

    @classmethod
    def from_jsonable(cls, doc):
        clf = cls(l2=doc["l2"])
        clf.w = np.array(doc["w"])
        clf.b = float(doc["b"])
        return clf


class ConstantClassifier:
    """Fallback when a label has a single class in training: always
    predicts the recorded prior."""

    family = "constant"

    def __init__(self, prior: float):
        self.prior = prior

    def fit(self, x, y):
        return self

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return np.full(len(x), self.prior)

    def to_jsonable(self):
        return {"family": self.family, "prior": self.prior}

    @classmethod
    def from_jsonable(cls, doc):
        return cls(prior=float(doc["prior"]))


def _classifier_from_jsonable(doc):
    if doc["family"] == "logistic":
        return LogisticClassifier.from_jsonable(doc)
    if doc["family"] == "constant":
        return ConstantClassifier.from_jsonable(doc)
    raise ConfigurationError(f"unknown classifier family '{doc['family']}'")


@dataclass
class CharacterizerModel:
    task: TaskSpec
    thresholds: ThresholdConfig
    consensus: ConsensusTable
    seq_model: SeqModel | None
    spatial_models: dict[str, SpatialModel] | None
    schema: tuple[str, ...]
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    classifiers: dict[str, object]
    bins: tuple[int, int]
    metadata: dict

    @property
    def uses_fusion(self) -> bool:
        return any(n.startswith(("seq.", "spa.")) for n in self.schema)


def _aggregate_features(session: MatcherSession) -> dict[str, float]:
    matrix = matrix_from_history(session.history, session.task)
    features = {}
    features.update(lrsm_features(matrix))
    features.update(behavioral_features(session.history))
    features.update(mouse_features(session.movement))
    return features


def extract_features(session: MatcherSession, model: CharacterizerModel) -> np.ndarray:
    """Raw (unstandardized) feature vector in schema order."""
    features = _aggregate_features(session)
    if model.uses_fusion:
        if model.seq_model is None or model.spatial_models is None:
            raise PipelineOrderError("fusion nets must be trained before feature extraction")
        seq_coef = model.seq_model.predict_coefficients(
            encode_sequence(session, model.consensus)
        )
        features.update({name: seq_coef[i] for i, name in enumerate(SEQ_COEF_NAMES)})
        heatmaps = heatmaps_from_map(session.movement, session.screen, model.bins)
        for kind in EVENT_KINDS:
            coef = model.spatial_models[kind].predict_coefficients(heatmaps.grids[kind])
            for i in range(4):
                features[f"spa.{kind}.coef[{i}]"] = coef[i]
    return np.array([features[name] for name in model.schema])


def standardize(model: CharacterizerModel, raw: np.ndarray) -> np.ndarray:
    return (raw - model.feature_mean) / model.feature_scale


def _restrict_schema(prefixes: tuple[str, ...] | None) -> tuple[str, ...]:
    if prefixes is None:
        return FULL_SCHEMA
    return tuple(n for n in FULL_SCHEMA if n.startswith(prefixes))


def train(
    train_sessions: list[MatcherSession],
    ref: ReferenceMatch,
    plan: AugmentPlan,
    trainer: TrainerConfig,
    bins: tuple[int, int] = DEFAULT_BINS,
    feature_prefixes: tuple[str, ...] | None = None,
    thresholds: ThresholdConfig | None = None,
) -> CharacterizerModel:
    """Full training pipeline for one task.

    ``feature_prefixes`` restricts the schema (used by the restricted
    baselines); fusion nets are only trained when the schema needs them.
    ``thresholds`` overrides the fitted population thresholds.
    """
    if len(train_sessions) < 2:
        raise ConfigurationError("training needs at least 2 sessions")
    task = train_sessions[0].task
    seed = trainer.seed

    # stage 1: population thresholds and ground-truth labels
    matches = {s.matcher_id: match_of(matrix_from_history(s.history, s.task)) for s in train_sessions}
    scores = {
        s.matcher_id: score_session(s.history, matches[s.matcher_id], ref, seed=seed)
        for s in train_sessions
    }
    if thresholds is None:
        thresholds = fit_thresholds(list(scores.values()))
    labels = {mid: labels_from_scores(sc, thresholds) for mid, sc in scores.items()}

    consensus = build_consensus([matches[s.matcher_id] for s in train_sessions], task)

    schema = _restrict_schema(feature_prefixes)
    uses_fusion = any(n.startswith(("seq.", "spa.")) for n in schema)

    seq_model = None
    spatial_models = None
    if uses_fusion:
        # stage 2: sub-matchers, relabeled from their windowed performance
        fusion_sessions = [(s, labels[s.matcher_id]) for s in train_sessions]
        for session in train_sessions:
            for sub in sub_matchers(session, plan):
                fusion_sessions.append((sub, label_sub_matcher(sub, ref, thresholds, seed=seed)))

        # stage 3: fusion nets on sessions + sub-matchers
        seq_samples = [
            SequenceSample(
                steps=encode_sequence(s, consensus).steps, target=targets_from_labels(lab)
            )
            for s, lab in fusion_sessions
        ]
        seq_model = train_seq(seq_samples, TrainerConfig(
            learning_rate=trainer.learning_rate,
            beta1=trainer.beta1,
            beta2=trainer.beta2,
            epochs=trainer.epochs,
            batch_size=trainer.batch_size,
            dropout=trainer.dropout,
            seed=seed,
        ))
        spatial_models = {}
        for offset, kind in enumerate(EVENT_KINDS):
            samples = [
                (heatmaps_from_map(s.movement, s.screen, bins).grids[kind], targets_from_labels(lab))
                for s, lab in fusion_sessions
            ]
            spatial_models[kind] = train_spatial(
                samples,
                TrainerConfig(
                    learning_rate=trainer.learning_rate,
                    beta1=trainer.beta1,
                    beta2=trainer.beta2,
                    epochs=trainer.epochs,
                    batch_size=trainer.batch_size,
                    dropout=0.0,
                    seed=seed + 1000 * (offset + 1),
                ),
                bins=bins,
            )

    model = CharacterizerModel(
        task=task,
        thresholds=thresholds,
        consensus=consensus,
        seq_model=seq_model,
        spatial_models=spatial_models,
        schema=schema,
        feature_mean=np.zeros(len(schema)),
        feature_scale=np.ones(len(schema)),
        classifiers={},
        bins=bins,
        metadata={
            "variant": plan.variant_name,
            "seed": seed,
            "bins": list(bins),
            "feature_prefixes": list(feature_prefixes) if feature_prefixes else None,
            "percentile_method": "nearest-rank",
        },
    )

    # stage 4: fused features for the training sessions
    raw = np.array([extract_features(s, model) for s in train_sessions])
    model.feature_mean = raw.mean(axis=0)
    scale = raw.std(axis=0)
    scale[scale == 0] = 1.0  # zero-variance guard: standardizes to 0
    model.feature_scale = scale
    x = standardize(model, raw)

    # stage 5: one binary classifier per label
    targets = np.array([targets_from_labels(labels[s.matcher_id]) for s in train_sessions])
    chosen = {}
    for i, name in enumerate(LABEL_NAMES):
        y = targets[:, i]
        if len(np.unique(y)) < 2:
            clf = ConstantClassifier(prior=float(y.mean()))
        else:
            clf = LogisticClassifier().fit(x, y)
        model.classifiers[name] = clf
        chosen[name] = {
            "family": clf.family,
            "train_accuracy": float(((clf.predict_proba(x) >= 0.5) == (y == 1)).mean()),
        }
    model.metadata["classifier_selection"] = chosen
    return model


ARTIFACT_FORMAT = "mexi-model/1"


def model_to_jsonable(model: CharacterizerModel) -> dict:
    """Self-describing model artifact (architecture metadata, seeds,
    normalization constants and weights)."""
    from .neural.nets import params_to_jsonable

    def net_doc(net):
        return {"params": params_to_jsonable(net.params), "metadata": net.metadata}

    return {
        "format": ARTIFACT_FORMAT,
        "task": {"task_id": model.task.task_id, "n": model.task.n, "m": model.task.m},
        "thresholds": {
            "delta_p": model.thresholds.delta_p,
            "delta_r": model.thresholds.delta_r,
            "delta_res": model.thresholds.delta_res,
            "delta_cal": model.thresholds.delta_cal,
            "p_significance": model.thresholds.p_significance,
        },
        "consensus": {
            "counts": model.consensus.counts.tolist(),
            "train_size": model.consensus.train_size,
        },
        "seq_model": net_doc(model.seq_model) if model.seq_model else None,
        "spatial_models": (
            {kind: net_doc(net) for kind, net in model.spatial_models.items()}
            if model.spatial_models
            else None
        ),
        "schema": list(model.schema),
        "feature_mean": model.feature_mean.tolist(),
        "feature_scale": model.feature_scale.tolist(),
        "classifiers": {name: clf.to_jsonable() for name, clf in model.classifiers.items()},
        "bins": list(model.bins),
        "metadata": model.metadata,
    }


def model_from_jsonable(doc: dict) -> CharacterizerModel:
    from .neural.nets import params_from_jsonable

    if doc.get("format") != ARTIFACT_FORMAT:
        raise ConfigurationError(f"unsupported model artifact format {doc.get('format')!r}")
    bins = tuple(doc["bins"])
    seq_model = None
    if doc["seq_model"]:
        seq_model = SeqModel(seed=0)
        seq_model.params = params_from_jsonable(doc["seq_model"]["params"])
        seq_model.metadata = doc["seq_model"]["metadata"]
    spatial_models = None
    if doc["spatial_models"]:
        spatial_models = {}
        for kind, net_doc in doc["spatial_models"].items():
            net = SpatialModel(bins=bins, seed=0)
            net.params = params_from_jsonable(net_doc["params"])
            net.metadata = net_doc["metadata"]
            spatial_models[kind] = net
    task_doc = doc["task"]
    return CharacterizerModel(
        task=TaskSpec(task_id=task_doc["task_id"], n=task_doc["n"], m=task_doc["m"]),
        thresholds=ThresholdConfig(**doc["thresholds"]),
        consensus=ConsensusTable(
            counts=np.array(doc["consensus"]["counts"]),
            train_size=int(doc["consensus"]["train_size"]),
        ),
        seq_model=seq_model,
        spatial_models=spatial_models,
        schema=tuple(doc["schema"]),
        feature_mean=np.array(doc["feature_mean"]),
        feature_scale=np.array(doc["feature_scale"]),
        classifiers={n: _classifier_from_jsonable(c) for n, c in doc["classifiers"].items()},
        bins=bins,
        metadata=doc["metadata"],
    )


def predict(model: CharacterizerModel, session: MatcherSession) -> tuple[LabelVector, np.ndarray]:
    """Characterize a session: ±1 labels at probability threshold 0.5,
    with the per-label probabilities alongside."""
    x = standardize(model, extract_features(session, model))[None, :]
    probs = np.array([float(model.classifiers[name].predict_proba(x)[0]) for name in LABEL_NAMES])
    labels = LabelVector.from_tuple(tuple(+1 if p >= 0.5 else -1 for p in probs))
    return labels, probs
