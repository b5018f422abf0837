# Copyright 2026 The lite-diag Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Losses, Adam, plateau scheduling, the fit loop and classification metrics."""

from __future__ import annotations

import dataclasses
import json
import logging
import math
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from sklearn import metrics as skmetrics

from lite_diag import tensor_core as tc
from lite_diag.errors import (
    ConfigError,
    DataError,
    NumericalError,
    TrainingDivergedError,
)
from lite_diag.tensor_core import Tensor

logger = logging.getLogger(__name__)

_BETA1 = 0.9
_BETA2 = 0.999
_ADAM_EPS = 1e-8
_PLATEAU_TOLERANCE = 1e-8


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    weight_decay: float = 1e-4
    batch_size: int = 32
    max_epochs: int = 30
    clip_norm: float = 1.0
    plateau_factor: float = 0.5
    plateau_patience: int = 10
    min_lr: float = 1e-7
    early_stop_patience: int | None = None
    # "macro_f1" for identification, "recall" (anomalous class) for detection
    selection_metric: str = "macro_f1"
    history_path: str | None = None
    eval_batch_size: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.clip_norm <= 0 or self.min_lr <= 0:
            raise ConfigError("learning_rate, clip_norm and min_lr must be > 0")
        if self.weight_decay < 0:
            raise ConfigError("weight_decay must be >= 0")
        if not 0.0 < self.plateau_factor < 1.0:
            raise ConfigError("plateau_factor must lie in (0, 1)")
        if self.plateau_patience < 1 or self.batch_size < 1:
            raise ConfigError("plateau_patience and batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.selection_metric not in ("macro_f1", "recall"):
            raise ConfigError(
                f"unknown selection_metric {self.selection_metric!r}"
            )


@dataclasses.dataclass(frozen=True)
class DistillConfig:
    temperature: float = 8.0
    alpha: float = 0.7
    teacher: Any = dataclasses.field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.temperature <= 0:
            raise ConfigError(
                f"temperature must be > 0, got {self.temperature}"
            )
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")


# Losses


def _batched(logits: Tensor) -> Tensor:
    return logits.reshape(1, -1) if logits.ndim == 1 else logits


def cross_entropy(logits: Tensor, labels: Any) -> Tensor:
    """Mean of -log softmax(logits)[label] over the batch."""
    logits = _batched(tc.as_tensor(logits))
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    classes = logits.shape[-1]
    if labels.shape[0] != logits.shape[0]:
        raise DataError(
            f"{labels.shape[0]} labels for {logits.shape[0]} logit rows"
        )
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise DataError(f"labels must lie in [0, {classes}), got {labels}")
    log_probs = tc.log_softmax(logits)
    picked = log_probs[np.arange(labels.shape[0]), labels]
    return -picked.mean()


def _np_log_softmax(z: np.ndarray, tau: float) -> np.ndarray:
    scaled = z / tau
    shifted = scaled - scaled.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def kd_loss(teacher_logits: Any, student_logits: Tensor, tau: float) -> Tensor:
    """tau^2 * KL(softmax(z_t / tau) || softmax(z_s / tau)), batch mean.

    The teacher side is a constant; gradients reach only the student logits.
    """
    if tau <= 0:
        raise ConfigError(f"temperature must be > 0, got {tau}")
    student_logits = _batched(tc.as_tensor(student_logits))
    z_t = np.asarray(
        (
            teacher_logits.data
            if isinstance(teacher_logits, Tensor)
            else teacher_logits
        ),
        dtype=np.float64,
    ).reshape(student_logits.shape)
    if not np.all(np.isfinite(z_t)):
        raise NumericalError("teacher logits contain NaN or infinite values")

    log_p = _np_log_softmax(z_t, tau)
    p = np.exp(log_p)
    entropy_term = float(np.sum(p * log_p)) / student_logits.shape[0]
    log_q = tc.log_softmax(student_logits, tau)
    weights = p.astype(log_q.dtype)
    cross = (log_q * weights).sum() / float(student_logits.shape[0])
    return (entropy_term - cross) * (tau * tau)


def total_distill_loss(
    teacher_logits: Any,
    student_logits: Tensor,
    labels: Any,
    cfg: DistillConfig,
) -> Tensor:
    soft = kd_loss(teacher_logits, student_logits, cfg.temperature)
    hard = cross_entropy(student_logits, labels)
    return soft * cfg.alpha + hard * (1.0 - cfg.alpha)


# Optimization


@dataclasses.dataclass
class AdamState:
    step: int
    first: list[np.ndarray]
    second: list[np.ndarray]

    @classmethod
    def initial(cls, params: Sequence[Tensor]) -> AdamState:
        return cls(
            0,
            [np.zeros_like(p.data) for p in params],
            [np.zeros_like(p.data) for p in params],
        )


def adam_step(
    params: Sequence[Tensor],
    grads: Sequence[np.ndarray],
    state: AdamState,
    cfg: TrainConfig,
    lr: float | None = None,
) -> None:
    """One bias-corrected Adam step; weight decay is added to the gradient."""
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError(
                f"non-finite gradient for parameter {i}; step aborted"
            )
    lr = cfg.learning_rate if lr is None else lr
    state.step += 1
    correction1 = 1.0 - _BETA1**state.step
    correction2 = 1.0 - _BETA2**state.step
    for i, (param, grad) in enumerate(zip(params, grads)):
        g = grad + cfg.weight_decay * param.data
        state.first[i] = _BETA1 * state.first[i] + (1.0 - _BETA1) * g
        state.second[i] = _BETA2 * state.second[i] + (1.0 - _BETA2) * g * g
        m_hat = state.first[i] / correction1
        v_hat = state.second[i] / correction2
        update = lr * m_hat / (np.sqrt(v_hat) + _ADAM_EPS)
        param.data = (param.data - update).astype(param.dtype, copy=False)


def clip_global_norm(
    grads: Sequence[np.ndarray], max_norm: float = 1.0
) -> tuple[list[np.ndarray], float]:
    """Returns the (possibly rescaled) gradients and their pre-clip norm."""
    if max_norm <= 0:
        raise ConfigError(f"max_norm must be > 0, got {max_norm}")
    norm = math.sqrt(sum(float(np.sum(np.square(g))) for g in grads))
    if norm <= max_norm:
        return list(grads), norm
    scale = max_norm / norm
    return [g * scale for g in grads], norm


@dataclasses.dataclass
class PlateauState:
    lr: float
    best: float = math.inf
    bad_epochs: int = 0


def plateau_step(
    state: PlateauState, monitored: float, cfg: TrainConfig
) -> float:
    """Halves (by `plateau_factor`) the rate after `patience` flat epochs."""
    if monitored < state.best - _PLATEAU_TOLERANCE:
        state.best = monitored
        state.bad_epochs = 0
        return state.lr
    state.bad_epochs += 1
    if state.bad_epochs >= cfg.plateau_patience:
        reduced = max(state.lr * cfg.plateau_factor, cfg.min_lr)
        if reduced < state.lr:
            logger.info(
                "plateau: learning rate %.3g -> %.3g", state.lr, reduced
            )
        state.lr = reduced
        state.bad_epochs = 0
    return state.lr


# Metrics


@dataclasses.dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: list[float]
    recall: list[float]
    f1: list[float]
    support: list[int]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: list[list[int]]

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def evaluate_metrics(
    predictions: Any, labels: Any, classes: int
) -> MetricsReport:
    predictions = np.asarray(predictions, dtype=np.int64).reshape(-1)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.size == 0:
        raise DataError("cannot evaluate metrics on an empty set")
    if predictions.shape != labels.shape:
        raise DataError(
            f"{predictions.size} predictions for {labels.size} labels"
        )
    for name, values in (("labels", labels), ("predictions", predictions)):
        if values.min() < 0 or values.max() >= classes:
            raise DataError(f"{name} must lie in [0, {classes})")

    class_ids = list(range(classes))
    precision, recall, f1, support = skmetrics.precision_recall_fscore_support(
        labels, predictions, labels=class_ids, zero_division=0
    )
    confusion = skmetrics.confusion_matrix(
        labels, predictions, labels=class_ids
    )
    return MetricsReport(
        accuracy=float(skmetrics.accuracy_score(labels, predictions)),
        precision=[float(v) for v in precision],
        recall=[float(v) for v in recall],
        f1=[float(v) for v in f1],
        support=[int(v) for v in support],
        macro_precision=float(np.mean(precision)),
        macro_recall=float(np.mean(recall)),
        macro_f1=float(np.mean(f1)),
        confusion=confusion.astype(int).tolist(),
    )


def mean_prediction_entropy(probabilities: Any) -> float:
    """Average Shannon entropy (nats) of predicted class distributions."""
    p = np.asarray(probabilities, dtype=np.float64)
    logs = np.log(np.where(p > 0, p, 1.0))
    return float(np.mean(-np.sum(p * logs, axis=-1)))


def precision_recall_shift(
    baseline: MetricsReport, candidate: MetricsReport
) -> dict[str, float]:
    """Macro precision/recall/F1 of `candidate` minus `baseline`."""
    return {
        "macro_precision": candidate.macro_precision - baseline.macro_precision,
        "macro_recall": candidate.macro_recall - baseline.macro_recall,
        "macro_f1": candidate.macro_f1 - baseline.macro_f1,
        "accuracy": candidate.accuracy - baseline.accuracy,
    }


# Fit loop


@dataclasses.dataclass
class FitResult:
    model: Any
    history: list[dict[str, Any]]
    best_epoch: int
    best_score: float


def split_arrays(split: Any) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(split, "x") and hasattr(split, "y"):
        x, y = split.x, split.y
    else:
        x, y = split
    x = np.asarray(x)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 3 or len(x) != len(y):
        raise DataError(
            f"expected (N, T, C) samples with N labels, got {x.shape}"
        )
    if len(x) == 0:
        raise DataError("empty training or validation split")
    return x, y


def _selection_score(report: MetricsReport, metric: str) -> float:
    if metric == "recall":
        return report.recall[1] if len(report.recall) > 1 else report.recall[0]
    return report.macro_f1


def _validation_loss(logits: np.ndarray, labels: np.ndarray) -> float:
    with tc.no_grad():
        return cross_entropy(Tensor(logits, dtype=np.float64), labels).item()


def fit(
    model: Any,
    train: Any,
    val: Any,
    cfg: TrainConfig,
    distill: DistillConfig | None = None,
) -> FitResult:
    """Trains `model` in place and restores its best validation checkpoint."""
    x_train, y_train = split_arrays(train)
    x_val, y_val = split_arrays(val)
    classes = model.classes
    rng = np.random.default_rng(cfg.seed)
    model.set_dropout_rng(np.random.default_rng(cfg.seed + 1))

    teacher_logits = None
    if distill is not None:
        if distill.teacher is None:
            raise ConfigError("distillation needs a teacher model")
        teacher_logits = distill.teacher.predict_logits(
            x_train, cfg.eval_batch_size
        )

    params = model.parameters()
    adam = AdamState.initial(params)
    plateau = PlateauState(cfg.learning_rate)
    history: list[dict[str, Any]] = []
    best_score, best_epoch, best_state = -math.inf, 0, model.state_dict()

    history_file = None
    if cfg.history_path:
        Path(cfg.history_path).parent.mkdir(parents=True, exist_ok=True)
        history_file = open(cfg.history_path, "w", encoding="utf-8")

    try:
        for epoch in range(1, cfg.max_epochs + 1):
            model.train()
            order = rng.permutation(len(x_train))
            losses = []
            for start in range(0, len(order), cfg.batch_size):
                index = order[start : start + cfg.batch_size]
                batch = Tensor(tc.to_channel_major(x_train[index]))
                for p in params:
                    p.grad = None
                with tc.Recording() as recording:
                    try:
                        logits = model(batch)
                        if teacher_logits is None:
                            loss = cross_entropy(logits, y_train[index])
                        else:
                            loss = total_distill_loss(
                                teacher_logits[index],
                                logits,
                                y_train[index],
                                distill,
                            )
                    except NumericalError as exc:
                        raise TrainingDivergedError(
                            f"non-finite logits at epoch {epoch}, batch "
                            f"starting at {start} (lr {plateau.lr:.3g})"
                        ) from exc
                    if not math.isfinite(loss.item()):
                        raise TrainingDivergedError(
                            f"loss became {loss.item()} at epoch {epoch}, "
                            f"batch starting at {start} (lr {plateau.lr:.3g})"
                        )
                    recording.backward(loss)
                grads = [
                    np.zeros_like(p.data) if p.grad is None else p.grad
                    for p in params
                ]
                grads, _ = clip_global_norm(grads, cfg.clip_norm)
                adam_step(params, grads, adam, cfg, plateau.lr)
                losses.append(loss.item())

            val_logits = model.predict_logits(x_val, cfg.eval_batch_size)
            val_loss = _validation_loss(val_logits, y_val)
            report = evaluate_metrics(val_logits.argmax(axis=1), y_val, classes)
            score = _selection_score(report, cfg.selection_metric)
            if score > best_score:
                best_score, best_epoch = score, epoch
                best_state = model.state_dict()

            record = {
                "epoch": epoch,
                "lr": plateau.lr,
                "train_loss": float(np.mean(losses)),
                "val_loss": val_loss,
                "val_accuracy": report.accuracy,
                "val_macro_precision": report.macro_precision,
                "val_macro_recall": report.macro_recall,
                "val_macro_f1": report.macro_f1,
                "val_score": score,
            }
            history.append(record)
            if history_file is not None:
                history_file.write(json.dumps(record, sort_keys=True) + "\n")
            logger.info(
                "epoch %d: train_loss=%.4f val_loss=%.4f val_acc=%.4f %s=%.4f",
                epoch,
                record["train_loss"],
                val_loss,
                report.accuracy,
                cfg.selection_metric,
                score,
            )

            plateau_step(plateau, val_loss, cfg)
            if (
                cfg.early_stop_patience is not None
                and epoch - best_epoch >= cfg.early_stop_patience
            ):
                logger.info(
                    "early stop at epoch %d (best %d)", epoch, best_epoch
                )
                break
    finally:
        if history_file is not None:
            history_file.close()

    model.load_state_dict(best_state)
    model.eval()
    return FitResult(model, history, best_epoch, best_score)
