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

"""Run configuration: YAML sections resolved over dataclass defaults.

Resolution order is defaults, then the YAML file, then command-line flags.
Unknown sections or keys are rejected.
"""

from __future__ import annotations

import dataclasses
import logging
from pathlib import Path
from typing import Any, Mapping

import yaml

from lite_diag import training
from lite_diag.errors import ConfigError
from lite_diag.models import (
    BackboneSpec,
    EncoderSpec,
    ModelSpec,
    module_spec_for,
)

logger = logging.getLogger(__name__)


@dataclasses.dataclass
class DataSection:
    # container directory written by gen-data; None generates synthetic data
    dataset: str | None = None
    # directory of <label>/<flight>.csv files to ingest
    flights: str | None = None
    classes: int = 4
    channels: int = 8
    length: int = 256
    per_class: int = 250
    noise: float = 0.1
    amplitude: float = 1.0
    distractors: int = 0
    train_fraction: float = 0.8
    # share of the training split held out for model selection
    val_fraction: float = 0.1
    balance: bool = False
    augmentation: str = "timewarp"
    workers: int = 4


@dataclasses.dataclass
class ModelSection:
    kind: str = "backbone"
    branches: str = "1+1"
    depth: int = 6
    filters: int = 128
    bottleneck: int = 64
    residual_period: int = 3
    kernel: int | None = None
    use_residual: bool = True
    input_gate: bool = False
    se_reduction: int = 4
    d_model: int = 128
    heads: int = 4
    encoder_layers: int = 2
    ff_width: int = 256
    dropout: float = 0.1
    attn_downsample: int = 8

    def to_spec(
        self,
        in_channels: int,
        classes: int,
        seed: int,
        branches: str | None = None,
        kind: str | None = None,
    ) -> ModelSpec:
        kind = kind or self.kind
        module = module_spec_for(
            branches or self.branches,
            in_channels,
            self.filters,
            self.bottleneck,
            self.kernel,
        )
        backbone = BackboneSpec(
            module,
            self.depth,
            self.residual_period,
            classes,
            self.use_residual,
        )
        encoder = None
        if kind == "hybrid":
            encoder = EncoderSpec(
                self.d_model,
                self.heads,
                self.encoder_layers,
                self.ff_width,
                self.dropout,
                self.attn_downsample,
            )
        return ModelSpec(
            kind, backbone, encoder, self.input_gate, self.se_reduction, seed
        )


@dataclasses.dataclass
class TrainSection:
    learning_rate: float = 1e-4
    weight_decay: float = 1e-4
    batch_size: int = 32
    max_epochs: int = 30
    clip_norm: float = 1.0
    plateau_factor: float = 0.5
    plateau_patience: int = 10
    min_lr: float = 1e-7
    early_stop_patience: int | None = None
    selection_metric: str = "macro_f1"
    eval_batch_size: int = 64

    def to_train_config(
        self, seed: int, history_path: str | None = None, **changes: Any
    ) -> training.TrainConfig:
        values = dataclasses.asdict(self)
        values.update(changes)
        return training.TrainConfig(
            seed=seed, history_path=history_path, **values
        )


@dataclasses.dataclass
class DistillSection:
    temperature: float = 8.0
    alpha: float = 0.7
    # teacher checkpoint; without one a teacher is trained first
    teacher: str | None = None
    teacher_branches: str = "3+1"

    def to_distill_config(self, teacher: Any) -> training.DistillConfig:
        return training.DistillConfig(self.temperature, self.alpha, teacher)


@dataclasses.dataclass
class SelectSection:
    bins: int = 16
    overrides: str | None = None
    ngafid_overrides: bool = False


@dataclasses.dataclass
class ExplainSection:
    checkpoint: str | None = None
    # None explains every fault class
    target: int | None = None
    samples: int = 30
    top_k: int = 5
    percentile: float = 90.0
    steps: int = 50
    window: int | None = None
    stride: int | None = None
    baseline: float = 0.0
    noise_levels: list[float] = dataclasses.field(
        default_factory=lambda: [0.0, 0.01, 0.03]
    )
    export_grids: bool = False


@dataclasses.dataclass
class CascadeSection:
    stage1: str | None = None
    stage2: str | None = None
    stage1_kind: str = "hybrid"
    threshold: float = 0.5
    thresholds: list[float] = dataclasses.field(
        default_factory=lambda: [round(0.05 * i, 2) for i in range(1, 20)]
    )
    # per-sample stage costs; None uses measured latencies
    stage1_cost: float | None = None
    stage2_cost: float | None = None


@dataclasses.dataclass
class BenchSection:
    runs: int = 100
    warmup: int = 10
    length: int = 2048
    channels: int = 15
    classes: int = 19
    branches: list[str] = dataclasses.field(
        default_factory=lambda: ["1+1", "3+1"]
    )


@dataclasses.dataclass
class AblateSection:
    seeds: list[int] = dataclasses.field(default_factory=lambda: [0])
    branches: list[str] = dataclasses.field(
        default_factory=lambda: ["1+0", "1+1", "2+1", "3+1"]
    )
    augmentations: list[str] = dataclasses.field(
        default_factory=lambda: [
            "none",
            "timewarp",
            "smooth",
            "window_slice",
            "gaussian_noise",
            "magnitude_shift",
            "magnitude_scale",
        ]
    )
    # fraction of each fault class kept before rebalancing
    imbalance: float = 0.25
    temperatures: list[float] = dataclasses.field(
        default_factory=lambda: [2.0, 4.0, 6.0, 8.0]
    )
    alphas: list[float] = dataclasses.field(
        default_factory=lambda: [0.3, 0.5, 0.7, 0.9]
    )
    depths: list[int] = dataclasses.field(default_factory=lambda: [3, 6, 9, 12])
    kernels: list[int] = dataclasses.field(
        default_factory=lambda: [3, 9, 21, 39]
    )


_SECTIONS: dict[str, type] = {
    "data": DataSection,
    "model": ModelSection,
    "train": TrainSection,
    "distill": DistillSection,
    "select": SelectSection,
    "explain": ExplainSection,
    "cascade": CascadeSection,
    "bench": BenchSection,
    "ablate": AblateSection,
}
_GLOBALS = ("seed", "precision", "out")


@dataclasses.dataclass
class RunConfig:
    seed: int = 0
    precision: int = 32
    out: str = "runs"
    data: DataSection = dataclasses.field(default_factory=DataSection)
    model: ModelSection = dataclasses.field(default_factory=ModelSection)
    train: TrainSection = dataclasses.field(default_factory=TrainSection)
    distill: DistillSection = dataclasses.field(default_factory=DistillSection)
    select: SelectSection = dataclasses.field(default_factory=SelectSection)
    explain: ExplainSection = dataclasses.field(default_factory=ExplainSection)
    cascade: CascadeSection = dataclasses.field(default_factory=CascadeSection)
    bench: BenchSection = dataclasses.field(default_factory=BenchSection)
    ablate: AblateSection = dataclasses.field(default_factory=AblateSection)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def _build_section(name: str, raw: Any) -> Any:
    cls = _SECTIONS[name]
    if raw is None:
        return cls()
    if not isinstance(raw, Mapping):
        raise ConfigError(f"section {name!r} must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown keys in section {name!r}: {unknown}")
    return cls(**raw)


def from_mapping(raw: Mapping[str, Any] | None) -> RunConfig:
    raw = dict(raw or {})
    unknown = sorted(set(raw) - set(_SECTIONS) - set(_GLOBALS))
    if unknown:
        raise ConfigError(f"unknown configuration sections: {unknown}")
    sections = {name: _build_section(name, raw.get(name)) for name in _SECTIONS}
    values = {key: raw[key] for key in _GLOBALS if key in raw}
    return _validated(RunConfig(**values, **sections))


def _validated(cfg: RunConfig) -> RunConfig:
    if cfg.precision not in (32, 64):
        raise ConfigError(f"precision must be 32 or 64, got {cfg.precision}")
    if not isinstance(cfg.seed, int) or cfg.seed < 0:
        raise ConfigError(
            f"seed must be a non-negative integer, got {cfg.seed!r}"
        )
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    """Parses a YAML run configuration; None yields the defaults."""
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if raw is not None and not isinstance(raw, Mapping):
        raise ConfigError(f"{path}: top level must be a mapping")
    logger.info("loaded configuration from %s", path)
    return from_mapping(raw)


def resolve(
    path: str | Path | None,
    seed: int | None = None,
    precision: int | None = None,
    out: str | None = None,
) -> RunConfig:
    """File values with command-line flags applied on top."""
    cfg = load_config(path)
    changes = {
        key: value
        for key, value in (
            ("seed", seed),
            ("precision", precision),
            ("out", out),
        )
        if value is not None
    }
    return _validated(dataclasses.replace(cfg, **changes))


def dump_yaml(cfg: RunConfig) -> str:
    return yaml.safe_dump(
        cfg.to_dict(), sort_keys=True, default_flow_style=False
    )
