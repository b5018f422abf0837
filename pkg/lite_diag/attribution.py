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

"""Input gradients, occlusion, Grad-CAM and integrated gradients.

All methods take one time-major sample `x` of shape (T, C) and a target class.
Logit gradients use the pre-softmax score; occlusion and integrated gradients
use the softmax probability of the target class.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import pandas as pd

from lite_diag import tensor_core as tc
from lite_diag import utils
from lite_diag.errors import DataError, ShapeError
from lite_diag.models import Network
from lite_diag.tensor_core import Tensor

logger = logging.getLogger(__name__)

METHODS = ("input_gradient", "occlusion", "grad_cam", "integrated_gradients")
DEFAULT_NOISE_LEVELS = (0.0, 0.01, 0.03)


@dataclasses.dataclass(frozen=True)
class AttributionMap:
    """Importance over time and channels.

    `grid` is (T, C) when the method scores individual cells; occlusion
    measures time windows and whole channels separately and has no grid.
    """

    method: str
    target: int
    grid: np.ndarray | None
    channel: np.ndarray
    time: np.ndarray

    @classmethod
    def from_grid(
        cls, method: str, target: int, grid: np.ndarray, signed: bool = False
    ) -> AttributionMap:
        grid = np.asarray(grid, dtype=np.float64)
        magnitude = np.abs(grid) if signed else grid
        return cls(
            method, target, grid, magnitude.sum(axis=0), magnitude.sum(axis=1)
        )

    def to_dict(self) -> dict[str, Any]:
        """Aggregations only; grids go to delimited-text exports."""
        return {
            "method": self.method,
            "target": self.target,
            "channel": utils.to_jsonable(self.channel),
            "time": utils.to_jsonable(self.time),
        }


def aggregate(attribution: AttributionMap) -> tuple[np.ndarray, np.ndarray]:
    """(S^ch, S^time) as axis sums of |grid|."""
    if attribution.grid is None:
        raise ShapeError(f"{attribution.method} map carries no grid")
    magnitude = np.abs(attribution.grid)
    return magnitude.sum(axis=0), magnitude.sum(axis=1)


def _sample(x: Any) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 2:
        raise ShapeError(f"expected one (T, C) sample, got {x.shape}")
    return x


def _probabilities(
    model: Network, batch: np.ndarray, target: int
) -> np.ndarray:
    return model.predict_proba(batch)[:, target].astype(np.float64)


# Gradient methods


def _output_gradients(
    model: Network,
    batch: np.ndarray,
    target: int,
    probability: bool,
    batch_size: int = 64,
) -> np.ndarray:
    """d(score_target)/dx for each (T, C) sample of `batch`."""
    grads = []
    with model.evaluation():
        for start in range(0, len(batch), batch_size):
            chunk = batch[start : start + batch_size]
            with tc.Recording() as recording:
                inputs = Tensor(tc.to_channel_major(chunk), requires_grad=True)
                scores = model(inputs)
                if probability:
                    scores = tc.softmax_t(scores, 1.0)
                recording.backward(scores[:, target].sum())
            grads.append(tc.to_time_major(inputs.grad))
    return np.concatenate(grads).astype(np.float64)


def input_gradient(model: Network, x: Any, target: int) -> AttributionMap:
    """|d logit_target / dx| per cell."""
    x = _sample(x)
    grad = _output_gradients(model, x[None], target, probability=False)[0]
    return AttributionMap.from_grid("input_gradient", target, np.abs(grad))


def path_integral(
    grad_fn: Callable[[np.ndarray], np.ndarray],
    x: Any,
    baseline: Any = None,
    steps: int = 50,
) -> np.ndarray:
    """(x - x') times the trapezoidal mean of grad_fn on the straight path.

    `grad_fn` maps a stack of path points (m + 1, *x.shape) to gradients of
    the same shape.
    """
    if steps < 1:
        raise DataError(f"steps must be >= 1, got {steps}")
    x = np.asarray(x, dtype=np.float64)
    baseline = (
        np.zeros_like(x)
        if baseline is None
        else np.asarray(baseline, dtype=np.float64)
    )
    alphas = np.linspace(0.0, 1.0, steps + 1)
    shape = (-1,) + (1,) * x.ndim
    points = baseline[None] + alphas.reshape(shape) * (x - baseline)[None]
    grads = np.asarray(grad_fn(points), dtype=np.float64)
    weights = np.ones(steps + 1)
    weights[0] = weights[-1] = 0.5
    mean_grad = np.tensordot(weights, grads, axes=1) / steps
    return (x - baseline) * mean_grad


def integrated_gradients(
    model: Network,
    x: Any,
    target: int,
    steps: int = 50,
    baseline: Any = None,
    batch_size: int = 64,
) -> AttributionMap:
    """Signed path attributions of the target probability.

    The baseline defaults to zeros.
    """
    x = _sample(x)

    def grad_fn(points):
        return _output_gradients(model, points, target, True, batch_size)

    grid = path_integral(grad_fn, x, baseline, steps)
    return AttributionMap.from_grid(
        "integrated_gradients", target, grid, signed=True
    )


def _cam_curve(
    feature_maps: np.ndarray, feature_grads: np.ndarray, length: int
) -> np.ndarray:
    """ReLU(sum_k alpha_k A^k) interpolated from T' to `length` steps.

    `feature_maps` and `feature_grads` are (K, T').
    """
    alpha = feature_grads.mean(axis=1)
    cam = np.maximum(alpha @ feature_maps, 0.0)
    mapped = cam.shape[0]
    if mapped == length:
        return cam
    if mapped == 1:
        return np.full(length, cam[0])
    positions = np.linspace(0.0, mapped - 1, length)
    return np.interp(positions, np.arange(mapped), cam)


def _grad_cam_pass(
    model: Network, x: np.ndarray, target: int
) -> tuple[np.ndarray, np.ndarray]:
    with model.evaluation():
        with tc.Recording() as recording:
            inputs = Tensor(tc.to_channel_major(x[None]), requires_grad=True)
            logits = model(inputs)
            features = model.last_features
            recording.backward(logits[0, target])
    maps = features.data[0].astype(np.float64)
    grads = (
        np.zeros_like(maps)
        if features.grad is None
        else features.grad[0].astype(np.float64)
    )
    curve = _cam_curve(maps, grads, x.shape[0])
    return curve, tc.to_time_major(inputs.grad).astype(np.float64)


def grad_cam(model: Network, x: Any, target: int) -> np.ndarray:
    """Class activation curve over the T input steps."""
    curve, _ = _grad_cam_pass(model, _sample(x), target)
    return curve


def grad_cam_map(model: Network, x: Any, target: int) -> AttributionMap:
    """Grad-CAM curve spread over channels by their share of |input grad|."""
    x = _sample(x)
    curve, input_grad = _grad_cam_pass(model, x, target)
    magnitude = np.abs(input_grad)
    totals = magnitude.sum(axis=1, keepdims=True)
    share = np.where(
        totals > 0,
        magnitude / np.where(totals > 0, totals, 1.0),
        1.0 / x.shape[1],
    )
    return AttributionMap.from_grid("grad_cam", target, curve[:, None] * share)


# Occlusion


def _window_starts(length: int, window: int, stride: int) -> list[int]:
    starts = list(range(0, length - window + 1, stride))
    if starts[-1] + window < length:
        starts.append(length - window)
    return starts


def occlusion_sensitivity(
    model: Network,
    x: Any,
    target: int,
    window: int | None = None,
    stride: int | None = None,
    baseline: Any = 0.0,
    batch_size: int = 64,
) -> AttributionMap:
    """Probability drops from masking time windows and whole channels."""
    x = _sample(x)
    length, channels = x.shape
    window = max(1, length // 16) if window is None else window
    stride = max(1, window // 2) if stride is None else stride
    if not 1 <= window <= length:
        raise ShapeError(f"window must lie in [1, {length}], got {window}")
    if stride < 1:
        raise ShapeError(f"stride must be >= 1, got {stride}")
    fill = np.broadcast_to(np.asarray(baseline, dtype=x.dtype), x.shape)

    starts = _window_starts(length, window, stride)
    occluded = np.repeat(x[None], len(starts) + channels, axis=0)
    for i, start in enumerate(starts):
        occluded[i, start : start + window] = fill[start : start + window]
    for j in range(channels):
        occluded[len(starts) + j, :, j] = fill[:, j]

    reference = _probabilities(model, x[None], target)[0]
    probs = []
    for begin in range(0, len(occluded), batch_size):
        probs.append(
            _probabilities(model, occluded[begin : begin + batch_size], target)
        )
    drops = reference - np.concatenate(probs)

    totals = np.zeros(length)
    covers = np.zeros(length)
    for i, start in enumerate(starts):
        totals[start : start + window] += drops[i]
        covers[start : start + window] += 1
    time = totals / np.maximum(covers, 1)
    channel = drops[len(starts) :]
    return AttributionMap("occlusion", target, None, channel, time)


# Evidence


@dataclasses.dataclass(frozen=True)
class Segment:
    start: int
    end: int
    start_pct: float
    end_pct: float


def key_segments(
    curve: Any, percentile: float = 90.0, merge_gap: float | None = None
) -> list[Segment]:
    """Maximal runs strictly above the percentile threshold.

    Runs separated by fewer than T/64 steps are merged.
    """
    curve = np.asarray(curve, dtype=np.float64)
    length = curve.shape[0]
    if length < 10:
        raise ShapeError(f"key segments need T >= 10, got {length}")
    merge_gap = length / 64.0 if merge_gap is None else merge_gap
    threshold = np.percentile(curve, percentile)
    above = np.concatenate([[False], curve > threshold, [False]])
    edges = np.flatnonzero(np.diff(above.astype(np.int8)))
    runs = [[int(s), int(e)] for s, e in zip(edges[0::2], edges[1::2])]

    merged: list[list[int]] = []
    for run in runs:
        if merged and run[0] - merged[-1][1] < merge_gap:
            merged[-1][1] = run[1]
        else:
            merged.append(run)
    return [
        Segment(s, e, 100.0 * s / length, 100.0 * e / length) for s, e in merged
    ]


def top_channels(scores: Any, k: int = 5) -> list[int]:
    """Indices of the k highest scores; ties go to the lower index."""
    scores = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((np.arange(len(scores)), -scores))
    return [int(c) for c in order[:k]]


def consensus_sensors(channel_scores: Sequence[Any], k: int = 5) -> list[int]:
    """Channels present in every method's top-k."""
    sizes = {len(np.asarray(v)) for v in channel_scores}
    if len(sizes) > 1:
        raise ShapeError(f"channel vectors differ in length: {sorted(sizes)}")
    sets = [set(top_channels(v, k)) for v in channel_scores]
    return sorted(set.intersection(*sets)) if sets else []


def normalize_channel_scores(scores: Any) -> np.ndarray:
    """Divides by the largest magnitude; all-zero vectors stay zero."""
    scores = np.asarray(scores, dtype=np.float64)
    peak = np.abs(scores).max() if scores.size else 0.0
    return scores / peak if peak > 0 else np.zeros_like(scores)


def normalized_entropy(values: Any) -> tuple[float, bool]:
    """H(p) / ln T for p = |v| / sum|v|; (1.0, True) when the sum is zero."""
    values = np.abs(np.asarray(values, dtype=np.float64))
    total = values.sum()
    if total == 0:
        return 1.0, True
    if values.size < 2:
        return 0.0, False
    p = values / total
    nonzero = p[p > 0]
    entropy = -np.sum(nonzero * np.log(nonzero)) / math.log(values.size)
    return float(entropy), False


@dataclasses.dataclass(frozen=True)
class AttributionSettings:
    steps: int = 50
    window: int | None = None
    stride: int | None = None
    baseline: float = 0.0
    batch_size: int = 64


def attribute(
    model: Network,
    x: Any,
    target: int,
    method: str,
    settings: AttributionSettings = AttributionSettings(),
) -> AttributionMap:
    if method == "input_gradient":
        return input_gradient(model, x, target)
    if method == "occlusion":
        return occlusion_sensitivity(
            model,
            x,
            target,
            settings.window,
            settings.stride,
            settings.baseline,
            settings.batch_size,
        )
    if method == "grad_cam":
        return grad_cam_map(model, x, target)
    if method == "integrated_gradients":
        baseline = np.full(np.shape(x), settings.baseline)
        return integrated_gradients(
            model, x, target, settings.steps, baseline, settings.batch_size
        )
    raise ValueError(f"unknown attribution method {method!r}")


@dataclasses.dataclass(frozen=True)
class NoiseLevel:
    sigma: float
    confidence: float
    entropy: dict[str, float]
    degenerate: dict[str, bool]
    time: dict[str, np.ndarray]


@dataclasses.dataclass(frozen=True)
class NoiseStudyResult:
    target: int
    levels: tuple[NoiseLevel, ...]

    @property
    def sigmas(self) -> list[float]:
        return [level.sigma for level in self.levels]

    def to_dict(self) -> dict[str, Any]:
        return {
            "target": self.target,
            "levels": [
                {
                    "sigma": level.sigma,
                    "confidence": level.confidence,
                    "entropy": level.entropy,
                    "degenerate": level.degenerate,
                }
                for level in self.levels
            ],
        }


def noise_perturbation_study(
    model: Network,
    x: Any,
    target: int,
    sigmas: Sequence[float] = DEFAULT_NOISE_LEVELS,
    seed: int = 0,
    methods: Sequence[str] = METHODS,
    settings: AttributionSettings = AttributionSettings(),
) -> NoiseStudyResult:
    """Confidence and attribution entropy under additive Gaussian noise."""
    x = _sample(x)
    rng = utils.make_rng(seed)
    levels = []
    for sigma in sigmas:
        noisy = x
        if sigma != 0:
            noisy = x + rng.normal(0.0, sigma, x.shape).astype(x.dtype)
        confidence = float(_probabilities(model, noisy[None], target)[0])
        entropy, degenerate, time = {}, {}, {}
        for method in methods:
            curve = attribute(model, noisy, target, method, settings).time
            entropy[method], degenerate[method] = normalized_entropy(curve)
            time[method] = curve
        levels.append(
            NoiseLevel(float(sigma), confidence, entropy, degenerate, time)
        )
    return NoiseStudyResult(target, tuple(levels))


@dataclasses.dataclass(frozen=True)
class EvidenceChain:
    target: int
    sample_count: int
    sample_indices: tuple[int, ...]
    maps: dict[str, AttributionMap]
    top_channels: dict[str, list[int]]
    consensus: list[int]
    segments: dict[str, list[Segment]]
    normalized_channels: dict[str, np.ndarray]
    noise_study: NoiseStudyResult | None = None

    def to_dict(
        self, channel_names: Sequence[str] | None = None
    ) -> dict[str, Any]:
        document = {
            "target": self.target,
            "sample_count": self.sample_count,
            "sample_indices": list(self.sample_indices),
            "top_channels": self.top_channels,
            "consensus": self.consensus,
            "segments": utils.to_jsonable(self.segments),
            "normalized_channels": utils.to_jsonable(self.normalized_channels),
            "maps": {m: a.to_dict() for m, a in self.maps.items()},
            "noise_study": None
            if self.noise_study is None
            else self.noise_study.to_dict(),
        }
        if channel_names is not None:
            document["consensus_names"] = [
                channel_names[c] for c in self.consensus
            ]
        return document


def _mean_map(maps: Sequence[AttributionMap]) -> AttributionMap:
    first = maps[0]
    if first.grid is not None:
        grid = np.mean([m.grid for m in maps], axis=0)
        signed = first.method == "integrated_gradients"
        return AttributionMap.from_grid(
            first.method, first.target, grid, signed
        )
    return AttributionMap(
        first.method,
        first.target,
        None,
        np.mean([m.channel for m in maps], axis=0),
        np.mean([m.time for m in maps], axis=0),
    )


def evidence_chain(
    model: Network,
    x: Any,
    target: int,
    samples: int = 30,
    k: int = 5,
    percentile: float = 90.0,
    seed: int = 0,
    settings: AttributionSettings = AttributionSettings(),
    noise_levels: Sequence[float] = (),
    labels: Any = None,
) -> EvidenceChain:
    """Averages the four methods over up to `samples` samples of class `target`.

    Samples qualify when predicted as `target`; with `labels` they must also
    carry that label.
    """
    x = np.asarray(x)
    if x.ndim != 3:
        raise ShapeError(f"expected (N, T, C) samples, got {x.shape}")
    probs = model.predict_proba(x, settings.batch_size)
    correct = probs.argmax(axis=1) == target
    if labels is not None:
        correct &= np.asarray(labels) == target
    qualifying = np.flatnonzero(correct)
    if qualifying.size == 0:
        raise DataError(f"no samples are predicted as class {target}")
    if qualifying.size < samples:
        logger.warning(
            "class %d: only %d qualifying samples (wanted %d)",
            target,
            qualifying.size,
            samples,
        )
        chosen = qualifying
    else:
        rng = utils.make_rng(seed)
        chosen = np.sort(rng.choice(qualifying, size=samples, replace=False))

    maps = {}
    for method in METHODS:
        per_sample = [
            attribute(model, x[i], target, method, settings) for i in chosen
        ]
        maps[method] = _mean_map(per_sample)

    tops = {m: top_channels(a.channel, k) for m, a in maps.items()}
    segments = {m: key_segments(a.time, percentile) for m, a in maps.items()}
    noise = None
    if noise_levels:
        best = chosen[int(np.argmax(probs[chosen, target]))]
        noise = noise_perturbation_study(
            model, x[best], target, noise_levels, seed, METHODS, settings
        )
    return EvidenceChain(
        target=target,
        sample_count=int(len(chosen)),
        sample_indices=tuple(int(i) for i in chosen),
        maps=maps,
        top_channels=tops,
        consensus=consensus_sensors([a.channel for a in maps.values()], k),
        segments=segments,
        normalized_channels={
            m: normalize_channel_scores(a.channel) for m, a in maps.items()
        },
        noise_study=noise,
    )


def write_grid_csv(
    attribution: AttributionMap,
    path: str | Path,
    channel_names: Sequence[str] | None = None,
) -> Path:
    """T rows by C columns, one header row of channel names."""
    if attribution.grid is None:
        raise ShapeError(f"{attribution.method} map carries no grid")
    columns = (
        list(channel_names)
        if channel_names is not None
        else [f"ch{c}" for c in range(attribution.grid.shape[1])]
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(attribution.grid, columns=columns)
    frame.to_csv(path, index=False, float_format="%.17g")
    return path
