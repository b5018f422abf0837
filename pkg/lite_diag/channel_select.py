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

"""Channel importance from mutual information, input gradients and SE weights.

The three estimators are ranked per method and fused: a channel is kept when
its median rank is in the top half and it is top-half in at least two
methods. Domain overrides then force channels in or out.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from sklearn import metrics as skmetrics

from lite_diag import tensor_core as tc
from lite_diag import training
from lite_diag import utils
from lite_diag.errors import (
    ConfigError,
    DataError,
    OverrideConflictError,
    SpecError,
)
from lite_diag.models import ModelSpec, Network, build_model
from lite_diag.tensor_core import Tensor

logger = logging.getLogger(__name__)

METHODS = ("mi", "gradient", "se")

_ACTIONS = ("force_in", "force_out")
_CRITERIA = {
    "causality": "causality-override",
    "redundancy": "redundancy-override",
    "domain": "domain-override",
}


@dataclasses.dataclass(frozen=True)
class ChannelScores:
    mi: np.ndarray
    gradient: np.ndarray
    se: np.ndarray

    def __post_init__(self):
        sizes = {len(self.mi), len(self.gradient), len(self.se)}
        if len(sizes) != 1:
            raise DataError(f"estimators disagree on channel count: {sizes}")

    @property
    def channels(self) -> int:
        return len(self.mi)

    def by_method(self) -> dict[str, np.ndarray]:
        return {"mi": self.mi, "gradient": self.gradient, "se": self.se}

    @property
    def ranks(self) -> dict[str, np.ndarray]:
        return {name: rank_scores(v) for name, v in self.by_method().items()}


@dataclasses.dataclass(frozen=True)
class Override:
    channel: int
    action: str
    criterion: str
    reason: str = ""

    def __post_init__(self):
        if self.action not in _ACTIONS:
            raise ConfigError(f"override action must be one of {_ACTIONS}")
        if self.criterion not in _CRITERIA:
            raise ConfigError(
                f"override criterion must be one of {sorted(_CRITERIA)}"
            )


@dataclasses.dataclass(frozen=True)
class ChannelVerdict:
    channel: int
    name: str
    retained: bool
    criterion: str
    median_rank: float
    top_half_methods: int
    reason: str


@dataclasses.dataclass(frozen=True)
class SelectionReport:
    scores: ChannelScores
    retained: tuple[int, ...]
    verdicts: tuple[ChannelVerdict, ...]
    overrides: tuple[Override, ...]

    @property
    def excluded(self) -> tuple[int, ...]:
        return tuple(v.channel for v in self.verdicts if not v.retained)

    def to_dict(self) -> dict[str, Any]:
        return {
            "retained": list(self.retained),
            "excluded": list(self.excluded),
            "scores": utils.to_jsonable(self.scores.by_method()),
            "ranks": utils.to_jsonable(self.scores.ranks),
            "verdicts": utils.to_jsonable(list(self.verdicts)),
            "overrides": utils.to_jsonable(list(self.overrides)),
        }


# Estimators


def stat_features(series: Any) -> np.ndarray:
    """[mean, population std, max, min] of one channel."""
    series = np.asarray(series, dtype=np.float64)
    if series.size == 0:
        raise DataError("statistical features of an empty series")
    return np.array([series.mean(), series.std(), series.max(), series.min()])


def _batch_features(x: np.ndarray) -> np.ndarray:
    """(N, T, C) -> (N, C, 4) statistical features."""
    x = np.asarray(x, dtype=np.float64)
    return np.stack(
        [x.mean(axis=1), x.std(axis=1), x.max(axis=1), x.min(axis=1)], axis=-1
    )


def binned_mutual_information(
    feature: Any, labels: Any, bins: int = 16
) -> float:
    """Plug-in MI (nats) between an equal-width binned feature and labels."""
    if bins < 2:
        raise ConfigError(f"bins must be >= 2, got {bins}")
    feature = np.asarray(feature, dtype=np.float64)
    low, high = feature.min(), feature.max()
    if high == low:
        return 0.0
    edges = np.linspace(low, high, bins + 1)
    codes = np.digitize(feature, edges[1:-1])
    return float(skmetrics.mutual_info_score(labels, codes))


def mi_scores(x: Any, labels: Any, bins: int = 16) -> np.ndarray:
    """Per channel: mean MI of its four statistical features with the label."""
    labels = np.asarray(labels)
    features = _batch_features(x)
    channels = features.shape[1]
    if len(np.unique(labels)) < 2:
        logger.warning("single-class labels; mutual information set to 0")
        return np.zeros(channels)
    return np.array(
        [
            np.mean(
                [
                    binned_mutual_information(features[:, c, i], labels, bins)
                    for i in range(4)
                ]
            )
            for c in range(channels)
        ]
    )


def grad_importance(
    model: Network, x: Any, labels: Any, batch_size: int = 64
) -> np.ndarray:
    """Mean |dL/dx| per channel, L being each sample's cross-entropy."""
    x = np.asarray(x)
    labels = np.asarray(labels)
    total = np.zeros(x.shape[2])
    with model.evaluation():
        for start in range(0, len(x), batch_size):
            chunk = x[start : start + batch_size]
            with tc.Recording() as recording:
                inputs = Tensor(tc.to_channel_major(chunk), requires_grad=True)
                loss = training.cross_entropy(
                    model(inputs), labels[start : start + batch_size]
                )
                recording.backward(loss * float(len(chunk)))
            total += np.abs(inputs.grad).sum(axis=(0, 2))
    return total / (x.shape[0] * x.shape[1])


def se_channel_weights(
    model: Network, x: Any, batch_size: int = 64
) -> np.ndarray:
    """Mean input-gate weight per channel over `x`."""
    if model.input_gate is None:
        raise SpecError("the model has no input SE gate")
    x = np.asarray(x)
    weights = []
    with model.inference():
        for start in range(0, len(x), batch_size):
            chunk = tc.to_channel_major(x[start : start + batch_size])
            model.forward(Tensor(chunk))
            weights.append(model.input_gate.last_weights)
    return np.concatenate(weights).astype(np.float64).mean(axis=0)


# Fusion


def rank_scores(scores: Any) -> np.ndarray:
    """Rank 1 = highest score; ties go to the lower channel index."""
    scores = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((np.arange(len(scores)), -scores))
    ranks = np.empty(len(scores), dtype=np.int64)
    ranks[order] = np.arange(1, len(scores) + 1)
    return ranks


def _index_overrides(
    overrides: Sequence[Override], channels: int
) -> dict[int, Override]:
    indexed: dict[int, Override] = {}
    for override in overrides:
        if not 0 <= override.channel < channels:
            raise ConfigError(
                f"override for channel {override.channel} "
                f"outside 0..{channels - 1}"
            )
        previous = indexed.get(override.channel)
        if previous is not None and previous.action != override.action:
            raise OverrideConflictError(
                f"channel {override.channel}: {previous.action} "
                f"({previous.criterion}) conflicts with {override.action} "
                f"({override.criterion})"
            )
        indexed.setdefault(override.channel, override)
    return indexed


def fuse_select(
    scores: ChannelScores,
    overrides: Sequence[Override] = (),
    channel_names: Sequence[str] | None = None,
) -> SelectionReport:
    channels = scores.channels
    names = list(channel_names) if channel_names else [
        f"ch{c}" for c in range(channels)
    ]
    ranks = np.stack(list(scores.ranks.values()))
    half = channels / 2.0
    median = np.median(ranks, axis=0)
    top_half = (ranks <= half).sum(axis=0)
    indexed = _index_overrides(overrides, channels)

    verdicts = []
    for c in range(channels):
        override = indexed.get(c)
        if override is not None:
            verdicts.append(
                ChannelVerdict(
                    c,
                    names[c],
                    override.action == "force_in",
                    _CRITERIA[override.criterion],
                    float(median[c]),
                    int(top_half[c]),
                    override.reason,
                )
            )
            continue
        keep = bool(median[c] <= half and top_half[c] >= 2)
        verdicts.append(
            ChannelVerdict(
                c,
                names[c],
                keep,
                "consistency",
                float(median[c]),
                int(top_half[c]),
                f"median rank {median[c]:g}, "
                f"top-half in {top_half[c]}/3 methods",
            )
        )
    retained = tuple(v.channel for v in verdicts if v.retained)
    logger.info(
        "retained %d of %d channels: %s", len(retained), channels, retained
    )
    return SelectionReport(scores, retained, tuple(verdicts), tuple(overrides))


# Override files


def _parse_overrides(document: Any) -> list[Override]:
    entries = (
        document.get("overrides") if isinstance(document, dict) else document
    )
    if not isinstance(entries, list):
        raise ConfigError("override file must hold a list of overrides")
    try:
        return [
            Override(
                int(e["channel"]),
                e["action"],
                e["criterion"],
                e.get("reason", ""),
            )
            for e in entries
        ]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed override entry: {exc}") from exc


def load_overrides(path: str | Path) -> list[Override]:
    with open(path, encoding="utf-8") as f:
        return _parse_overrides(json.load(f))


def load_ngafid_overrides() -> list[Override]:
    """Exclusions and domain includes for the 23-channel NGAFID layout."""
    with utils.get_ngafid_overrides_filepath().open(encoding="utf-8") as f:
        return _parse_overrides(json.load(f))


# Pipeline


def select_channels(
    train: Any,
    val: Any,
    spec: ModelSpec,
    train_cfg: training.TrainConfig,
    overrides: Sequence[Override] = (),
    bins: int = 16,
    channel_names: Sequence[str] | None = None,
) -> tuple[SelectionReport, training.FitResult]:
    """Trains an input-gated network on `train` and fuses the three estimators.

    MI is computed on the training split; gradient and SE estimates are read
    on the validation split at the best-validation checkpoint.
    """
    if not spec.input_gate:
        spec = dataclasses.replace(spec, input_gate=True)
    model = build_model(spec)
    result = training.fit(model, train, val, train_cfg)
    x_train, y_train = training.split_arrays(train)
    x_val, y_val = training.split_arrays(val)
    scores = ChannelScores(
        mi=mi_scores(x_train, y_train, bins),
        gradient=grad_importance(
            model, x_val, y_val, train_cfg.eval_batch_size
        ),
        se=se_channel_weights(model, x_val, train_cfg.eval_batch_size),
    )
    report = fuse_select(scores, overrides, channel_names)
    return report, result
