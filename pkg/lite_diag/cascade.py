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

"""Two-stage screening: binary anomaly detector, then fault identification.

Stage 1 column 1 is P(anomalous). Final labels are 0 for normal and 1..K for
the stage-2 fault classes.
"""

from __future__ import annotations

import dataclasses
import logging
from pathlib import Path
from typing import Any, Protocol, Sequence

import numpy as np
import pandas as pd
from sklearn import metrics as skmetrics

from lite_diag import training
from lite_diag.errors import ConfigError, DataError, ShapeError

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLDS = tuple(round(0.05 * i, 2) for i in range(1, 20))


class ProbabilityModel(Protocol):
    def predict_proba(self, x: np.ndarray, batch_size: int = 64) -> np.ndarray:
        ...


@dataclasses.dataclass(frozen=True)
class CascadeConfig:
    stage1: ProbabilityModel
    stage2: ProbabilityModel
    threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(
                f"threshold must lie in [0, 1], got {self.threshold}"
            )


@dataclasses.dataclass(frozen=True)
class StageTrace:
    anomaly_probability: float
    stage2_ran: bool
    stage2_probabilities: np.ndarray | None
    label: int


@dataclasses.dataclass(frozen=True)
class CascadeBatch:
    labels: np.ndarray
    traces: tuple[StageTrace, ...]

    @property
    def stage2_fraction(self) -> float:
        if not self.traces:
            return 0.0
        return sum(t.stage2_ran for t in self.traces) / len(self.traces)


def _check_input(model: Any, x: np.ndarray, stage: str) -> None:
    expected = getattr(model, "input_channels", None)
    if expected is not None and x.shape[-1] != expected:
        raise ShapeError(
            f"{stage} expects {expected} channels, got input {x.shape}"
        )


def _anomaly_probability(stage1: ProbabilityModel, x: np.ndarray) -> np.ndarray:
    probs = np.asarray(stage1.predict_proba(x))
    if probs.ndim != 2 or probs.shape[1] != 2:
        raise ShapeError(
            f"stage 1 must emit (B, 2) probabilities, got {probs.shape}"
        )
    return probs[:, 1]


def cascade_predict_batch(x: Any, cfg: CascadeConfig) -> CascadeBatch:
    """Runs stage 2 only on samples whose P(anomalous) reaches the threshold."""
    x = np.asarray(x)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3:
        raise ShapeError(f"expected (B, T, C) input, got {x.shape}")
    _check_input(cfg.stage1, x, "stage 1")
    _check_input(cfg.stage2, x, "stage 2")

    anomaly = _anomaly_probability(cfg.stage1, x)
    flagged = np.flatnonzero(anomaly >= cfg.threshold)
    stage2 = {}
    if flagged.size:
        probs = np.asarray(cfg.stage2.predict_proba(x[flagged]))
        stage2 = dict(zip(flagged.tolist(), probs))

    labels = np.zeros(len(x), dtype=np.int64)
    traces = []
    for i, p in enumerate(anomaly):
        fault = stage2.get(i)
        label = 0 if fault is None else int(np.argmax(fault)) + 1
        labels[i] = label
        traces.append(StageTrace(float(p), fault is not None, fault, label))
    logger.debug("stage 2 ran on %d of %d samples", flagged.size, len(x))
    return CascadeBatch(labels, tuple(traces))


def cascade_predict(x: Any, cfg: CascadeConfig) -> tuple[int, StageTrace]:
    """Label for one (T, C) sample and the trace of both stages."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise ShapeError(f"expected one (T, C) sample, got {x.shape}")
    batch = cascade_predict_batch(x, cfg)
    return int(batch.labels[0]), batch.traces[0]


@dataclasses.dataclass(frozen=True)
class CostModel:
    stage1_cost: float
    stage2_cost: float
    normal_fraction: float

    def __post_init__(self):
        if self.stage1_cost < 0 or self.stage2_cost < 0:
            raise ConfigError("stage costs must be >= 0")
        if not 0.0 <= self.normal_fraction <= 1.0:
            raise ConfigError(
                "normal fraction must lie in [0, 1], "
                f"got {self.normal_fraction}"
            )


def expected_cost(model: CostModel) -> float:
    return model.stage1_cost + (1.0 - model.normal_fraction) * model.stage2_cost


@dataclasses.dataclass(frozen=True)
class SweepRow:
    threshold: float
    precision: float
    recall: float
    f1: float
    flagged_fraction: float


def threshold_sweep(
    stage1: ProbabilityModel,
    x: Any,
    y_binary: Any,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> list[SweepRow]:
    """Anomaly-class precision, recall and F1 at each stage-1 threshold."""
    thresholds = [float(t) for t in thresholds]
    if not thresholds:
        raise ConfigError("threshold grid is empty")
    if any(not 0.0 < t < 1.0 for t in thresholds):
        raise ConfigError(f"thresholds must lie in (0, 1): {thresholds}")
    if thresholds != sorted(thresholds):
        raise ConfigError(f"thresholds must be sorted: {thresholds}")
    y_binary = np.asarray(y_binary)
    if len(np.unique(y_binary)) < 2:
        raise DataError(
            "threshold sweep needs both normal and anomalous samples"
        )

    anomaly = _anomaly_probability(stage1, np.asarray(x))
    rows = []
    for threshold in thresholds:
        predicted = (anomaly >= threshold).astype(np.int64)
        precision, recall, f1, _ = skmetrics.precision_recall_fscore_support(
            y_binary,
            predicted,
            labels=[1],
            average=None,
            zero_division=0,
        )
        rows.append(
            SweepRow(
                threshold,
                float(precision[0]),
                float(recall[0]),
                float(f1[0]),
                float(predicted.mean()),
            )
        )
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([dataclasses.asdict(r) for r in rows])
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


@dataclasses.dataclass(frozen=True)
class CascadeEvaluation:
    metrics: training.MetricsReport
    stage2_fraction: float
    threshold: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "metrics": self.metrics.to_dict(),
            "stage2_fraction": self.stage2_fraction,
            "threshold": self.threshold,
        }


def evaluate_cascade(
    x: Any, labels: Any, cfg: CascadeConfig
) -> CascadeEvaluation:
    """End-to-end metrics over labels 0 (normal) and 1..K (faults)."""
    labels = np.asarray(labels)
    batch = cascade_predict_batch(x, cfg)
    classes = int(max(labels.max(), batch.labels.max())) + 1
    report = training.evaluate_metrics(batch.labels, labels, classes)
    logger.info(
        "cascade accuracy %.4f, stage 2 ran on %.1f%% of samples",
        report.accuracy,
        100.0 * batch.stage2_fraction,
    )
    return CascadeEvaluation(report, batch.stage2_fraction, cfg.threshold)
