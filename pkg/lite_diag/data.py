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

"""Flight ingestion, preprocessing, augmentation, splitting and synthesis.

Samples are stored time-major as `(N, T, C)` float32 arrays with values in
[0, 1]. The on-disk container is a directory holding `manifest.json`,
`data.f32` (N x C x T little-endian float32) and `labels.i32`.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import json
import logging
import math
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import pandas as pd

from lite_diag import utils
from lite_diag.errors import DataError

logger = logging.getLogger(__name__)

DEFAULT_LENGTH = 2048
MIN_FLIGHT_LENGTH = 2000
MAX_MISSING_FRACTION = 0.2

_MANIFEST = "manifest.json"
_DATA = "data.f32"
_LABELS = "labels.i32"
_FORMAT = "lite-diag-dataset"
_FORMAT_VERSION = 1


# Types


@dataclasses.dataclass
class RawFlight:
    """One flight as recorded; NaN marks a missing entry."""

    channel_names: list[str]
    values: np.ndarray
    source: str
    label: int | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != len(
            self.channel_names
        ):
            raise DataError(
                f"{self.source}: rows must have {len(self.channel_names)} "
                f"channels, got shape {self.values.shape}"
            )


@dataclasses.dataclass(frozen=True)
class Annotation:
    """Ground truth of a synthetic fault: channels and [start, end) steps."""

    channels: tuple[int, ...]
    start: int
    end: int
    kind: str


@dataclasses.dataclass(frozen=True)
class TimeSeriesSample:
    grid: np.ndarray
    label: int
    source: str
    annotation: Annotation | None = None


@dataclasses.dataclass
class DatasetManifest:
    sample_count: int
    length: int
    channel_names: list[str]
    class_counts: dict[int, int]
    provenance: dict[str, Any] = dataclasses.field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        if sum(self.class_counts.values()) != self.sample_count:
            raise DataError(
                f"class counts {self.class_counts} do not sum to "
                f"{self.sample_count}"
            )


def _class_counts(labels: np.ndarray) -> dict[int, int]:
    values, counts = np.unique(labels, return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}


@dataclasses.dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    channel_names: list[str]
    sources: list[str]
    annotations: list[Annotation | None]
    provenance: dict[str, Any] = dataclasses.field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float32)
        self.y = np.asarray(self.y, dtype=np.int32)
        if self.x.ndim != 3:
            raise DataError(f"samples must be (N, T, C), got {self.x.shape}")
        n = len(self.x)
        if not len(self.y) == len(self.sources) == len(self.annotations) == n:
            raise DataError(
                "labels, sources and annotations must match samples"
            )
        if self.x.shape[2] != len(self.channel_names):
            raise DataError(
                f"{len(self.channel_names)} channel names for "
                f"{self.x.shape[2]} channels"
            )

    def __len__(self) -> int:
        return len(self.x)

    def __getitem__(self, index: int) -> TimeSeriesSample:
        return TimeSeriesSample(
            self.x[index],
            int(self.y[index]),
            self.sources[index],
            self.annotations[index],
        )

    @property
    def length(self) -> int:
        return self.x.shape[1]

    @property
    def channels(self) -> int:
        return self.x.shape[2]

    @property
    def classes(self) -> int:
        return int(self.y.max()) + 1 if len(self.y) else 0

    @property
    def manifest(self) -> DatasetManifest:
        return DatasetManifest(
            sample_count=len(self),
            length=self.length,
            channel_names=list(self.channel_names),
            class_counts=_class_counts(self.y),
            provenance=dict(self.provenance),
            seed=self.seed,
        )

    def subset(self, indices: Sequence[int]) -> Dataset:
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.x[indices],
            self.y[indices],
            list(self.channel_names),
            [self.sources[i] for i in indices],
            [self.annotations[i] for i in indices],
            dict(self.provenance),
            self.seed,
        )

    def select_channels(self, channels: Sequence[int]) -> Dataset:
        channels = list(channels)
        return dataclasses.replace(
            self,
            x=self.x[:, :, channels],
            channel_names=[self.channel_names[c] for c in channels],
            sources=list(self.sources),
            annotations=list(self.annotations),
        )

    def validate(self) -> None:
        """Raises DataError unless every sample is finite and within [0, 1]."""
        if not np.all(np.isfinite(self.x)):
            raise DataError("dataset contains missing or non-finite values")
        if len(self) and (self.x.min() < 0.0 or self.x.max() > 1.0):
            raise DataError("dataset values fall outside [0, 1]")


# Preprocessing


def read_flight_csv(path: str | Path, label: int | None = None) -> RawFlight:
    """Header row = channel names, one row per second, empty cell = missing."""
    frame = pd.read_csv(path)
    return RawFlight(
        [str(c) for c in frame.columns],
        frame.to_numpy(dtype=np.float64),
        source=str(path),
        label=label,
    )


def fill_missing(values: np.ndarray) -> tuple[np.ndarray, int]:
    """Linear interpolation inside, nearest value at the edges.

    Returns the filled (L, C) array and the number of filled entries.
    """
    frame = pd.DataFrame(values)
    missing = int(frame.isna().to_numpy().sum())
    if missing == 0:
        return np.array(values, dtype=np.float64), 0
    filled = frame.interpolate(method="linear", limit_area="inside")
    filled = filled.ffill().bfill()
    return filled.to_numpy(dtype=np.float64), missing


def resample_linear(values: np.ndarray, length: int) -> np.ndarray:
    """Linear resampling of every column of an (L, C) array to `length` rows."""
    source_len = values.shape[0]
    if source_len == length:
        return np.array(values, dtype=np.float64)
    if source_len < 2:
        return np.repeat(values[:1], length, axis=0).astype(np.float64)
    positions = np.linspace(0.0, source_len - 1, length)
    grid = np.arange(source_len)
    return np.stack(
        [
            np.interp(positions, grid, values[:, c])
            for c in range(values.shape[1])
        ],
        axis=1,
    )


def minmax_normalize(values: np.ndarray) -> np.ndarray:
    """Per-channel min-max to [0, 1]; constant channels map to 0.5."""
    low = values.min(axis=0)
    high = values.max(axis=0)
    span = high - low
    flat = span == 0
    out = (values - low) / np.where(flat, 1.0, span)
    out[:, flat] = 0.5
    return out


@dataclasses.dataclass(frozen=True)
class _Processed:
    grid: np.ndarray | None
    filled: int
    reason: str | None


def _preprocess_flight(
    flight: RawFlight, length: int, min_length: int, max_missing: float
) -> _Processed:
    values = flight.values
    rows = values.shape[0]
    missing_fraction = float(np.isnan(values).mean()) if values.size else 1.0
    if missing_fraction > max_missing:
        return _Processed(None, 0, f"missing fraction {missing_fraction:.3f}")
    if rows < min_length:
        return _Processed(None, 0, f"length {rows} < {min_length}")
    filled, count = fill_missing(values)
    if np.isnan(filled).any():
        return _Processed(None, 0, "channel with no recorded values")
    grid = minmax_normalize(resample_linear(filled, length))
    return _Processed(grid, count, None)


def ingest_and_preprocess(
    flights: Sequence[RawFlight],
    length: int = DEFAULT_LENGTH,
    min_length: int = MIN_FLIGHT_LENGTH,
    max_missing: float = MAX_MISSING_FRACTION,
    workers: int = 1,
) -> Dataset:
    """Drop, fill, resample and normalize flights into a Dataset."""
    if not flights:
        raise DataError("no flights to ingest")
    names = flights[0].channel_names
    for flight in flights:
        if len(flight.channel_names) != len(names):
            raise DataError(
                f"{flight.source}: {len(flight.channel_names)} channels, "
                f"expected {len(names)}"
            )

    def work(flight):
        return _preprocess_flight(flight, length, min_length, max_missing)

    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, flights))
    else:
        results = [work(f) for f in flights]

    grids, labels, sources = [], [], []
    dropped, interpolated = [], {}
    for flight, result in zip(flights, results):
        if result.grid is None:
            logger.info("dropping %s: %s", flight.source, result.reason)
            dropped.append({"source": flight.source, "reason": result.reason})
            continue
        if result.filled:
            interpolated[flight.source] = result.filled
        grids.append(result.grid)
        labels.append(0 if flight.label is None else flight.label)
        sources.append(flight.source)

    if not grids:
        raise DataError(f"all {len(flights)} flights were dropped")
    logger.info(
        "ingested %d of %d flights (%d dropped)",
        len(grids),
        len(flights),
        len(dropped),
    )
    return Dataset(
        np.stack(grids),
        np.asarray(labels),
        list(names),
        sources,
        [None] * len(grids),
        provenance={
            "dropped": dropped,
            "interpolated": interpolated,
            "length": length,
        },
    )


# Augmentation


def timewarp_augment(
    x: np.ndarray,
    intensity: float,
    rng: np.random.Generator,
    knots: int = 4,
    max_retries: int = 100,
) -> np.ndarray:
    """Resamples all channels of a (T, C) grid through one monotone time map.

    Interior knots move by N(0, intensity * T); the endpoints stay fixed.
    """
    if intensity < 0:
        raise DataError(f"intensity must be >= 0, got {intensity}")
    x = np.asarray(x)
    if intensity == 0:
        return x.copy()
    length = x.shape[0]
    anchors = np.linspace(0.0, length - 1, knots + 2)
    for _ in range(max_retries):
        moved = anchors.copy()
        moved[1:-1] += rng.normal(0.0, intensity * length, size=knots)
        if np.all(np.diff(moved) > 0):
            break
    else:
        logger.warning(
            "no monotone warp after %d draws; returning the input", max_retries
        )
        return x.copy()

    steps = np.arange(length, dtype=np.float64)
    time_map = np.interp(steps, anchors, moved)
    warped = np.stack(
        [np.interp(time_map, steps, x[:, c]) for c in range(x.shape[1])],
        axis=1,
    )
    return warped.astype(x.dtype, copy=False)


def smooth_augment(
    x: np.ndarray, intensity: float, rng: np.random.Generator
) -> np.ndarray:
    """Moving average over a window of `intensity * T` steps (at least 1)."""
    del rng
    window = max(1, int(round(intensity * x.shape[0])))
    if window == 1:
        return np.array(x, copy=True)
    kernel = np.ones(window) / window
    left = window // 2
    padded = np.pad(x, ((left, window - 1 - left), (0, 0)), mode="edge")
    out = np.stack(
        [
            np.convolve(padded[:, c], kernel, mode="valid")
            for c in range(x.shape[1])
        ],
        axis=1,
    )
    return out.astype(x.dtype, copy=False)


def window_slice_augment(
    x: np.ndarray, intensity: float, rng: np.random.Generator
) -> np.ndarray:
    """Crops (1 - intensity) of the series at a random start; stretches back."""
    length = x.shape[0]
    keep = max(2, int(math.ceil((1.0 - intensity) * length)))
    if keep >= length:
        return np.array(x, copy=True)
    start = int(rng.integers(0, length - keep + 1))
    return resample_linear(x[start : start + keep], length).astype(
        x.dtype, copy=False
    )


def gaussian_noise_augment(
    x: np.ndarray, intensity: float, rng: np.random.Generator
) -> np.ndarray:
    noisy = x + rng.normal(0.0, intensity, size=x.shape)
    return np.clip(noisy, 0.0, 1.0).astype(x.dtype, copy=False)


def magnitude_shift_augment(
    x: np.ndarray, intensity: float, rng: np.random.Generator
) -> np.ndarray:
    shift = rng.normal(0.0, intensity, size=(1, x.shape[1]))
    return np.clip(x + shift, 0.0, 1.0).astype(x.dtype, copy=False)


def magnitude_scale_augment(
    x: np.ndarray, intensity: float, rng: np.random.Generator
) -> np.ndarray:
    scale = 1.0 + rng.normal(0.0, intensity, size=(1, x.shape[1]))
    return np.clip(x * scale, 0.0, 1.0).astype(x.dtype, copy=False)


Augmentation = Callable[[np.ndarray, float, np.random.Generator], np.ndarray]

# name -> (function, default intensity)
AUGMENTATIONS: dict[str, tuple[Augmentation, float]] = {
    "timewarp": (timewarp_augment, 0.03),
    "smooth": (smooth_augment, 0.01),
    "window_slice": (window_slice_augment, 0.1),
    "gaussian_noise": (gaussian_noise_augment, 0.01),
    "magnitude_shift": (magnitude_shift_augment, 0.05),
    "magnitude_scale": (magnitude_scale_augment, 0.1),
}


def get_augmentation(name: str) -> tuple[Augmentation, float]:
    try:
        return AUGMENTATIONS[name]
    except KeyError:
        raise DataError(
            f"unknown augmentation {name!r}; "
            f"expected one of {sorted(AUGMENTATIONS)}"
        ) from None


def balance_dataset(
    dataset: Dataset,
    seed: int = 0,
    augmentation: str = "timewarp",
    intensity: float | None = None,
    copies_per_visit: int = 2,
) -> Dataset:
    """Adds augmented copies until every class reaches the largest count.

    Originals are visited in order, `copies_per_visit` copies each, cycling
    until the class is full. Originals are never removed.
    """
    augment, default_intensity = get_augmentation(augmentation)
    intensity = default_intensity if intensity is None else intensity
    rng = utils.make_rng(seed)
    counts = _class_counts(dataset.y)
    target = max(counts.values())

    grids, labels, sources, annotations = [], [], [], []
    for label, count in counts.items():
        originals = np.flatnonzero(dataset.y == label)
        visit = 0
        while count < target:
            original = originals[visit % len(originals)]
            for _ in range(copies_per_visit):
                if count >= target:
                    break
                grids.append(augment(dataset.x[original], intensity, rng))
                labels.append(label)
                sources.append(f"{dataset.sources[original]}#aug{count}")
                annotations.append(dataset.annotations[original])
                count += 1
            visit += 1

    if not grids:
        return dataset
    logger.info(
        "balanced %d classes with %d augmented copies", len(counts), len(grids)
    )
    provenance = dict(dataset.provenance)
    provenance["augmented"] = provenance.get("augmented", 0) + len(grids)
    provenance["augmentation"] = augmentation
    return Dataset(
        np.concatenate([dataset.x, np.stack(grids)]),
        np.concatenate([dataset.y, np.asarray(labels)]),
        list(dataset.channel_names),
        list(dataset.sources) + sources,
        list(dataset.annotations) + annotations,
        provenance,
        dataset.seed,
    )


def stratified_split(
    dataset: Dataset, train_fraction: float = 0.8, seed: int = 0
) -> tuple[Dataset, Dataset]:
    """Per-class seeded split; each class trains on round(fraction * n)."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError(
            f"train fraction must lie in (0, 1), got {train_fraction}"
        )
    rng = utils.make_rng(seed)
    train_idx, test_idx = [], []
    for label in sorted(_class_counts(dataset.y)):
        members = rng.permutation(np.flatnonzero(dataset.y == label))
        if len(members) < 2:
            logger.warning(
                "class %d has %d sample(s); all go to the training split",
                label,
                len(members),
            )
            train_idx.extend(members)
            continue
        n_train = int(math.floor(train_fraction * len(members) + 0.5))
        train_idx.extend(members[:n_train])
        test_idx.extend(members[n_train:])
    return (
        dataset.subset(sorted(train_idx)),
        dataset.subset(sorted(test_idx)),
    )


def binary_view(dataset: Dataset) -> Dataset:
    """Stage-1 labels: 0 normal, 1 any fault."""
    return dataclasses.replace(
        dataset,
        y=(dataset.y > 0).astype(np.int32),
        sources=list(dataset.sources),
        annotations=list(dataset.annotations),
    )


def fault_view(dataset: Dataset) -> Dataset:
    """Stage-2 samples: fault classes only, relabelled 0..K-1."""
    faults = np.flatnonzero(dataset.y > 0)
    view = dataset.subset(faults)
    view.y = (view.y - 1).astype(np.int32)
    return view


# Synthetic generator


@dataclasses.dataclass(frozen=True)
class FaultDefinition:
    """Signature of one fault class, window given as fractions of T."""

    channels: tuple[int, ...]
    window: tuple[float, float]
    kind: str = "bump"

    def __post_init__(self):
        if not self.channels or min(self.channels) < 0:
            raise DataError(
                f"fault channels must be non-empty and >= 0: {self.channels}"
            )
        start, end = self.window
        if not 0.0 <= start < end <= 1.0:
            raise DataError(
                "fault window must satisfy 0 <= start < end <= 1: "
                f"{self.window}"
            )
        if self.kind not in _SIGNATURES:
            raise DataError(f"unknown fault kind {self.kind!r}")


def _bump(width: int) -> np.ndarray:
    return np.hanning(width + 2)[1:-1]


def _ramp(width: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, width)


def _frequency(width: int) -> np.ndarray:
    return np.sin(2.0 * np.pi * np.arange(width) / 8.0)


_SIGNATURES: dict[str, Callable[[int], np.ndarray]] = {
    "bump": _bump,
    "ramp": _ramp,
    "frequency": _frequency,
}

_DEFAULT_KINDS = ("bump", "ramp", "frequency")
_DEFAULT_STARTS = (0.2, 0.45, 0.7)


@dataclasses.dataclass(frozen=True)
class SynthSpec:
    classes: int = 4
    channels: int = 8
    length: int = 256
    per_class: int = 250
    noise: float = 0.1
    amplitude: float = 1.0
    distractors: int = 0
    faults: tuple[FaultDefinition, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.classes < 1 or self.channels < 1 or self.per_class < 1:
            raise DataError("classes, channels and per_class must be >= 1")
        if self.length < 16:
            raise DataError(f"length must be >= 16, got {self.length}")
        if self.amplitude < 3.0 * self.noise:
            raise DataError(
                f"fault amplitude {self.amplitude} "
                f"is below 3x noise {self.noise}"
            )
        if self.faults is not None and len(self.faults) != self.classes - 1:
            raise DataError(
                f"{len(self.faults)} fault definitions for {self.classes - 1} "
                "fault classes"
            )

    def fault_definitions(self) -> tuple[FaultDefinition, ...]:
        """Explicit faults, or one per class cycling channels and windows."""
        if self.faults is not None:
            return self.faults
        faults = []
        for k in range(1, self.classes):
            i = k - 1
            start = _DEFAULT_STARTS[i % len(_DEFAULT_STARTS)]
            faults.append(
                FaultDefinition(
                    (i % self.channels,),
                    (start, start + 0.2),
                    _DEFAULT_KINDS[i % len(_DEFAULT_KINDS)],
                )
            )
        return tuple(faults)


def _steps(window: tuple[float, float], length: int) -> tuple[int, int]:
    start = int(round(window[0] * length))
    end = max(start + 1, int(round(window[1] * length)))
    return start, min(end, length)


def _collisions(faults: Sequence[FaultDefinition]) -> list[list[int]]:
    flagged = []
    for i, a in enumerate(faults):
        for j in range(i + 1, len(faults)):
            b = faults[j]
            shared = set(a.channels) & set(b.channels)
            overlap = a.window[0] < b.window[1] and b.window[0] < a.window[1]
            if shared and overlap:
                flagged.append([i + 1, j + 1])
    return flagged


def synth_generate(spec: SynthSpec) -> Dataset:
    """Sinusoidal base signals with class-specific injected faults.

    Class 0 is normal. Each channel is a sum of two sinusoids with per-sample
    random phase plus Gaussian noise; distractor channels are pure noise.
    Every sample is min-max normalized per channel.
    """
    rng = utils.make_rng(spec.seed)
    faults = spec.fault_definitions()
    for fault in faults:
        if max(fault.channels) >= spec.channels:
            raise DataError(f"fault channel outside 0..{spec.channels - 1}")
    collisions = _collisions(faults)
    if collisions:
        logger.warning(
            "overlapping fault definitions for classes %s", collisions
        )

    length, channels = spec.length, spec.channels
    t = np.arange(length) / length
    cycles = rng.uniform(8.0, 20.0, size=(channels, 2))

    total = spec.classes * spec.per_class
    width = channels + spec.distractors
    x = np.empty((total, length, width), dtype=np.float32)
    y = np.repeat(np.arange(spec.classes), spec.per_class)
    annotations: list[Annotation | None] = []
    for n, label in enumerate(y):
        phase = rng.uniform(0.0, 2.0 * np.pi, size=(channels, 2))
        base = 0.5 * np.sin(
            2.0 * np.pi * cycles[:, None, :] * t[None, :, None]
            + phase[:, None, :]
        ).sum(axis=2)
        signal = base.T + rng.normal(0.0, spec.noise, size=(length, channels))
        annotation = None
        if label > 0:
            fault = faults[label - 1]
            start, end = _steps(fault.window, length)
            shape = spec.amplitude * _SIGNATURES[fault.kind](end - start)
            for c in fault.channels:
                signal[start:end, c] += shape
            annotation = Annotation(
                tuple(fault.channels), start, end, fault.kind
            )
        if spec.distractors:
            noise = rng.normal(0.0, 1.0, size=(length, spec.distractors))
            signal = np.concatenate([signal, noise], axis=1)
        x[n] = minmax_normalize(signal)
        annotations.append(annotation)

    names = [f"ch{c}" for c in range(channels)]
    names += [f"noise{d}" for d in range(spec.distractors)]
    return Dataset(
        x,
        y,
        names,
        [f"synth-{n:06d}" for n in range(total)],
        annotations,
        provenance={
            "generator": "synthetic",
            "overlapping_faults": collisions,
            "noise": spec.noise,
            "amplitude": spec.amplitude,
        },
        seed=spec.seed,
    )


# Container


def _annotation_to_dict(annotation: Annotation | None) -> dict[str, Any] | None:
    return None if annotation is None else utils.to_jsonable(annotation)


def _annotation_from_dict(raw: dict[str, Any] | None) -> Annotation | None:
    if raw is None:
        return None
    return Annotation(
        tuple(raw["channels"]), raw["start"], raw["end"], raw["kind"]
    )


def save_dataset(dataset: Dataset, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = dataset.manifest
    document = {
        "format": _FORMAT,
        "version": _FORMAT_VERSION,
        "sample_count": manifest.sample_count,
        "length": manifest.length,
        "channel_names": manifest.channel_names,
        "class_counts": {str(k): v for k, v in manifest.class_counts.items()},
        "provenance": utils.to_jsonable(manifest.provenance),
        "seed": manifest.seed,
        "sources": list(dataset.sources),
        "annotations": [_annotation_to_dict(a) for a in dataset.annotations],
    }
    with open(directory / _MANIFEST, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=4, sort_keys=True)
        f.write("\n")
    channel_major = np.ascontiguousarray(dataset.x.transpose(0, 2, 1))
    with open(directory / _DATA, "wb") as f:
        f.write(channel_major.astype("<f4").tobytes())
    with open(directory / _LABELS, "wb") as f:
        f.write(dataset.y.astype("<i4").tobytes())
    logger.info("wrote %d samples to %s", len(dataset), directory)
    return directory


def load_dataset(directory: str | Path) -> Dataset:
    directory = Path(directory)
    try:
        with open(directory / _MANIFEST, encoding="utf-8") as f:
            document = json.load(f)
        with open(directory / _DATA, "rb") as f:
            raw = f.read()
        with open(directory / _LABELS, "rb") as f:
            raw_labels = f.read()
    except FileNotFoundError as exc:
        raise DataError(
            f"incomplete dataset directory {directory}: {exc}"
        ) from exc
    if document.get("format") != _FORMAT:
        raise DataError(f"{directory} is not a {_FORMAT} container")

    n = document["sample_count"]
    length = document["length"]
    channels = len(document["channel_names"])
    expected = n * channels * length * 4
    if len(raw) != expected or len(raw_labels) != n * 4:
        raise DataError(
            f"{directory}: data block has {len(raw)} bytes, expected {expected}"
        )
    x = np.frombuffer(raw, dtype="<f4").reshape(n, channels, length)
    y = np.frombuffer(raw_labels, dtype="<i4")
    return Dataset(
        np.ascontiguousarray(x.transpose(0, 2, 1)),
        y.copy(),
        list(document["channel_names"]),
        list(document["sources"]),
        [_annotation_from_dict(a) for a in document["annotations"]],
        dict(document.get("provenance", {})),
        document.get("seed"),
    )
