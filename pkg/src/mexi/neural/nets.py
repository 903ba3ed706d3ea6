"""Small from-scratch neural models producing the fused label coefficients.

SeqModel: LSTM (hidden 64) over per-decision triples, 0.5 dropout, dense
100 ReLU, 4-sigmoid head.  SpatialModel: two 3x3 conv blocks (8 then 16
filters, ReLU, 2x2 max-pool) over one binned heat-map channel, 4-sigmoid
head.  Both train with Adam on mean binary cross-entropy over the four
labels, deterministically under a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..behavior import ConsensusTable
from ..errors import ModelInputError
from ..session import EVENT_KINDS, MatcherSession
from . import backend

SEQ_INPUT_SIZE = 3
SEQ_HIDDEN = 64
SEQ_DENSE = 100
N_LABELS = 4

SPA_FILTERS_1 = 8
SPA_FILTERS_2 = 16


@dataclass(frozen=True)
class TrainerConfig:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epochs: int = 50
    batch_size: int = 8
    dropout: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("invalid optimizer hyperparameters")


@dataclass(frozen=True)
class SequenceSample:
    """Per-decision triples (confidence, normalized time delta,
    normalized consensus) plus the {0,1} targets for the four labels."""

    steps: np.ndarray  # (T, 3)
    target: np.ndarray | None = None  # (4,) in {0,1}


def encode_sequence(session: MatcherSession, consensus: ConsensusTable) -> SequenceSample:
    """Encode a decision history; time deltas are normalized by the
    session's largest delta (first delta is 0), consensus by train size."""
    history = session.history
    if not history:
        raise ModelInputError("cannot encode an empty history")
    times = np.array([d.t for d in history])
    deltas = np.concatenate([[0.0], np.diff(times)])
    max_delta = deltas.max()
    if max_delta > 0:
        deltas = deltas / max_delta
    steps = np.column_stack(
        [
            [d.confidence for d in history],
            deltas,
            [consensus.agreement(d.row, d.col) for d in history],
        ]
    )
    return SequenceSample(steps=steps)


def _glorot(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Adam:
    """Standard Adam over a dict of named parameter arrays."""

    def __init__(self, params: dict[str, np.ndarray], config: TrainerConfig):
        self.config = config
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        cfg = self.config
        self.t += 1
        lr_t = cfg.learning_rate * np.sqrt(1 - cfg.beta2**self.t) / (1 - cfg.beta1**self.t)
        for k, g in grads.items():
            self.m[k] = cfg.beta1 * self.m[k] + (1 - cfg.beta1) * g
            self.v[k] = cfg.beta2 * self.v[k] + (1 - cfg.beta2) * g * g
            params[k] -= lr_t * self.m[k] / (np.sqrt(self.v[k]) + 1e-8)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _bce(prob, target):
    eps = 1e-12
    return float(-np.mean(target * np.log(prob + eps) + (1 - target) * np.log(1 - prob + eps)))


class SeqModel:
    def __init__(self, seed: int = 0, hidden: int = SEQ_HIDDEN, dense: int = SEQ_DENSE):
        rng = np.random.default_rng(seed)
        self.hidden = hidden
        self.dense = dense
        self.params = {
            "wx": _glorot(rng, (4 * hidden, SEQ_INPUT_SIZE), SEQ_INPUT_SIZE + hidden, hidden),
            "wh": _glorot(rng, (4 * hidden, hidden), SEQ_INPUT_SIZE + hidden, hidden),
            "b_lstm": np.zeros(4 * hidden),
            "w1": _glorot(rng, (dense, hidden), hidden, dense),
            "b1": np.zeros(dense),
            "w2": _glorot(rng, (N_LABELS, dense), dense, N_LABELS),
            "b2": np.zeros(N_LABELS),
        }
        self.metadata: dict = {"seed": seed}

    def forward(self, steps: np.ndarray, dropout_mask: np.ndarray | None = None):
        if steps.ndim != 2 or steps.shape[1] != SEQ_INPUT_SIZE:
            raise ModelInputError(f"sequence input must be (T, {SEQ_INPUT_SIZE})")
        p = self.params
        x = np.ascontiguousarray(steps, dtype=np.float64)
        h, c, gates = backend.lstm_forward(x, p["wx"], p["wh"], p["b_lstm"])
        h_last = h[-1]
        h_drop = h_last * dropout_mask if dropout_mask is not None else h_last
        z1 = p["w1"] @ h_drop + p["b1"]
        a1 = np.maximum(z1, 0.0)
        prob = _sigmoid(p["w2"] @ a1 + p["b2"])
        cache = (x, h, c, gates, h_drop, dropout_mask, z1, a1, prob)
        return prob, cache

    def loss_and_grads(self, steps, target, dropout_mask=None):
        p = self.params
        prob, cache = self.forward(steps, dropout_mask)
        x, h, c, gates, h_drop, mask, z1, a1, _ = cache
        loss = _bce(prob, target)
        dlogits = (prob - target) / N_LABELS
        grads = {
            "w2": np.outer(dlogits, a1),
            "b2": dlogits,
        }
        da1 = p["w2"].T @ dlogits
        dz1 = da1 * (z1 > 0)
        grads["w1"] = np.outer(dz1, h_drop)
        grads["b1"] = dz1
        dh_last = p["w1"].T @ dz1
        if mask is not None:
            dh_last = dh_last * mask
        dwx, dwh, db = backend.lstm_backward(
            x, p["wx"], p["wh"], h, c, gates, np.ascontiguousarray(dh_last)
        )
        grads["wx"] = dwx
        grads["wh"] = dwh
        grads["b_lstm"] = db
        return loss, grads

    def predict_coefficients(self, sample: SequenceSample) -> np.ndarray:
        prob, _ = self.forward(sample.steps)
        return prob


class SpatialModel:
    def __init__(self, bins: tuple[int, int], seed: int = 0):
        bx, by = bins
        self.bins = (bx, by)
        h1, w1 = by - 2, bx - 2
        h1p, w1p = h1 // 2, w1 // 2
        h2, w2 = h1p - 2, w1p - 2
        if min(h1, w1, h2, w2) < 2:
            raise ModelInputError(f"bin resolution {bins} too small for two conv blocks")
        self.flat = SPA_FILTERS_2 * (h2 // 2) * (w2 // 2)
        rng = np.random.default_rng(seed)
        self.params = {
            "wc1": _glorot(rng, (SPA_FILTERS_1, 1, 3, 3), 9, SPA_FILTERS_1 * 9),
            "bc1": np.zeros(SPA_FILTERS_1),
            "wc2": _glorot(
                rng, (SPA_FILTERS_2, SPA_FILTERS_1, 3, 3), SPA_FILTERS_1 * 9, SPA_FILTERS_2 * 9
            ),
            "bc2": np.zeros(SPA_FILTERS_2),
            "wd": _glorot(rng, (N_LABELS, self.flat), self.flat, N_LABELS),
            "bd": np.zeros(N_LABELS),
        }
        self.metadata: dict = {"seed": seed, "bins": list(bins)}

    @staticmethod
    def prepare_input(grid: np.ndarray) -> np.ndarray:
        """Max-normalize a heat-map grid into a single float64 channel."""
        peak = grid.max()
        scaled = grid / peak if peak > 0 else grid
        return np.ascontiguousarray(scaled[None, :, :], dtype=np.float64)

    def forward(self, channel: np.ndarray):
        bx, by = self.bins
        if channel.shape != (1, by, bx):
            raise ModelInputError(
                f"spatial input must be (1, {by}, {bx}), got {channel.shape}"
            )
        p = self.params
        z1 = backend.conv2d_forward(channel, p["wc1"], p["bc1"])
        a1 = np.maximum(z1, 0.0)
        p1, idx1 = backend.maxpool2_forward(a1)
        z2 = backend.conv2d_forward(np.ascontiguousarray(p1), p["wc2"], p["bc2"])
        a2 = np.maximum(z2, 0.0)
        p2, idx2 = backend.maxpool2_forward(a2)
        flat = p2.ravel()
        prob = _sigmoid(p["wd"] @ flat + p["bd"])
        cache = (channel, z1, a1, p1, idx1, z2, a2, p2, idx2, flat, prob)
        return prob, cache

    def loss_and_grads(self, channel, target):
        p = self.params
        prob, cache = self.forward(channel)
        channel, z1, a1, p1, idx1, z2, a2, p2, idx2, flat, _ = cache
        loss = _bce(prob, target)
        dlogits = (prob - target) / N_LABELS
        grads = {"wd": np.outer(dlogits, flat), "bd": dlogits}
        dp2 = (p["wd"].T @ dlogits).reshape(p2.shape)
        da2 = backend.maxpool2_backward(
            np.ascontiguousarray(dp2), idx2, a2.shape[1], a2.shape[2]
        )
        dz2 = da2 * (z2 > 0)
        dp1, dwc2, dbc2 = backend.conv2d_backward(
            np.ascontiguousarray(p1), p["wc2"], np.ascontiguousarray(dz2)
        )
        grads["wc2"] = dwc2
        grads["bc2"] = dbc2
        da1 = backend.maxpool2_backward(
            np.ascontiguousarray(dp1), idx1, a1.shape[1], a1.shape[2]
        )
        dz1 = da1 * (z1 > 0)
        _, dwc1, dbc1 = backend.conv2d_backward(channel, p["wc1"], np.ascontiguousarray(dz1))
        grads["wc1"] = dwc1
        grads["bc1"] = dbc1
        return loss, grads

    def predict_coefficients(self, grid: np.ndarray) -> np.ndarray:
        prob, _ = self.forward(self.prepare_input(grid))
        return prob


def _degenerate_labels(targets: list[np.ndarray]) -> list[int]:
    stacked = np.array(targets)
    return [i for i in range(N_LABELS) if len(np.unique(stacked[:, i])) < 2]


def train_seq(samples: list[SequenceSample], config: TrainerConfig) -> SeqModel:
    """Train a SeqModel on full-length sequences, one sample per step,
    gradients accumulated over ``batch_size`` samples.  Dropout masks
    come from a seeded stream so training is reproducible."""
    model = SeqModel(seed=config.seed)
    if any(s.target is None for s in samples):
        raise ModelInputError("all training samples need targets")
    model.metadata["degenerate_labels"] = _degenerate_labels([s.target for s in samples])
    _train(
        model,
        [(s.steps, s.target) for s in samples],
        config,
        dropout_dim=model.hidden,
    )
    return model


def train_spatial(
    samples: list[tuple[np.ndarray, np.ndarray]],
    config: TrainerConfig,
    bins: tuple[int, int],
) -> SpatialModel:
    """Train one SpatialModel from (heat-map grid, target) pairs."""
    model = SpatialModel(bins=bins, seed=config.seed)
    model.metadata["degenerate_labels"] = _degenerate_labels([t for _, t in samples])
    prepared = [(SpatialModel.prepare_input(grid), target) for grid, target in samples]
    _train(model, prepared, config, dropout_dim=None)
    return model


def _train(model, pairs, config: TrainerConfig, dropout_dim: int | None):
    optimizer = Adam(model.params, config)
    mask_rng = np.random.default_rng(config.seed + 1)
    loss_history = []
    for _ in range(config.epochs):
        epoch_loss = 0.0
        acc_grads = None
        acc_count = 0
        for inputs, target in pairs:
            if dropout_dim is not None and config.dropout > 0:
                keep = 1.0 - config.dropout
                mask = (mask_rng.random(dropout_dim) < keep) / keep
                loss, grads = model.loss_and_grads(inputs, target, dropout_mask=mask)
            else:
                loss, grads = model.loss_and_grads(inputs, target)
            epoch_loss += loss
            if acc_grads is None:
                acc_grads = grads
            else:
                for k in grads:
                    acc_grads[k] += grads[k]
            acc_count += 1
            if acc_count == config.batch_size:
                optimizer.step(model.params, {k: v / acc_count for k, v in acc_grads.items()})
                acc_grads, acc_count = None, 0
        if acc_count:
            optimizer.step(model.params, {k: v / acc_count for k, v in acc_grads.items()})
        loss_history.append(epoch_loss / max(len(pairs), 1))
    model.metadata["loss_history"] = loss_history
    model.metadata["trainer"] = {
        "learning_rate": config.learning_rate,
        "beta1": config.beta1,
        "beta2": config.beta2,
        "epochs": config.epochs,
        "batch_size": config.batch_size,
        "dropout": config.dropout,
        "seed": config.seed,
    }


def heatmap_coefficients(model_by_kind: dict[str, SpatialModel], heatmaps) -> np.ndarray:
    """Concatenate the four spatial models' coefficient vectors in the
    canonical event-kind order."""
    parts = [model_by_kind[kind].predict_coefficients(heatmaps.grids[kind]) for kind in EVENT_KINDS]
    return np.concatenate(parts)


def params_to_jsonable(params: dict[str, np.ndarray]) -> dict:
    return {k: v.tolist() for k, v in params.items()}


def params_from_jsonable(doc: dict) -> dict[str, np.ndarray]:
    return {k: np.array(v, dtype=np.float64) for k, v in doc.items()}
