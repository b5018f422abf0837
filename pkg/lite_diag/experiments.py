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

"""Latency benchmarks and ablation runners.

Every runner trains fresh models and returns plain dict rows, ready for
`reports.write_table`.
"""

from __future__ import annotations

import dataclasses
import logging
import time
from typing import Any, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from lite_diag import data
from lite_diag import training
from lite_diag import utils
from lite_diag.config import ModelSection
from lite_diag.errors import ConfigError
from lite_diag.models import (
    BRANCH_PRESETS,
    BackboneSpec,
    ModelSpec,
    Network,
    build_model,
    count_flops,
    count_params,
    module_spec_for,
    receptive_field,
)

logger = logging.getLogger(__name__)

MIN_BENCH_RUNS = 100


@dataclasses.dataclass(frozen=True)
class LatencyReport:
    runs: int
    threads: int
    mean_ms: float
    p95_ms: float


def benchmark_latency(
    model: Network,
    length: int,
    runs: int = MIN_BENCH_RUNS,
    warmup: int = 10,
    threads: int = 1,
    seed: int = 0,
) -> LatencyReport:
    """Per-sample inference latency over warm runs with a capped BLAS pool."""
    if runs < MIN_BENCH_RUNS:
        raise ConfigError(
            f"latency needs at least {MIN_BENCH_RUNS} runs, got {runs}"
        )
    rng = utils.make_rng(seed)
    x = rng.random((1, length, model.input_channels)).astype(np.float32)
    timings = []
    with threadpool_limits(limits=threads):
        for _ in range(warmup):
            model.predict_logits(x, batch_size=1)
        for _ in range(runs):
            start = time.perf_counter()
            model.predict_logits(x, batch_size=1)
            timings.append(time.perf_counter() - start)
    millis = np.asarray(timings) * 1e3
    return LatencyReport(
        runs, threads, float(millis.mean()), utils.percentile_p95(millis)
    )


def backbone_spec(
    branches: str,
    depth: int = 6,
    filters: int = 128,
    bottleneck: int = 64,
    channels: int = 15,
    classes: int = 19,
    seed: int = 0,
) -> ModelSpec:
    module = module_spec_for(branches, channels, filters, bottleneck)
    return ModelSpec(
        "backbone", BackboneSpec(module, depth, classes=classes), seed=seed
    )


def compare_backbones(
    branches: Sequence[str] = ("1+1", "3+1"),
    depth: int = 6,
    filters: int = 128,
    bottleneck: int = 64,
    channels: int = 15,
    classes: int = 19,
    length: int = 2048,
    runs: int = MIN_BENCH_RUNS,
    warmup: int = 10,
    seed: int = 0,
) -> dict[str, Any]:
    """Param, FLOP and latency counters per preset, with first/last ratios."""
    rows = []
    for preset in branches:
        model = build_model(
            backbone_spec(
                preset, depth, filters, bottleneck, channels, classes, seed
            )
        )
        latency = benchmark_latency(model, length, runs, warmup, seed=seed)
        rows.append(
            {
                "branches": preset,
                "params": count_params(model).total,
                "flops": count_flops(model, length).total,
                "mean_ms": latency.mean_ms,
                "p95_ms": latency.p95_ms,
            }
        )
        logger.info(
            "%s: %d params, %d FLOPs, %.2f ms mean",
            preset,
            rows[-1]["params"],
            rows[-1]["flops"],
            latency.mean_ms,
        )
    summary: dict[str, Any] = {"rows": rows}
    if len(rows) > 1:
        first, last = rows[0], rows[-1]
        summary["param_ratio"] = first["params"] / last["params"]
        summary["flop_ratio"] = first["flops"] / last["flops"]
        summary["speedup"] = last["mean_ms"] / first["mean_ms"]
    return summary


# Ablations


def _train_and_score(
    spec: ModelSpec,
    train: data.Dataset,
    val: data.Dataset,
    test: data.Dataset,
    cfg: training.TrainConfig,
    distill: training.DistillConfig | None = None,
) -> tuple[Network, dict[str, Any]]:
    model = build_model(spec)
    training.fit(model, train, val, cfg, distill)
    probs = model.predict_proba(test.x, cfg.eval_batch_size)
    report = training.evaluate_metrics(
        probs.argmax(axis=1), test.y, model.classes
    )
    return model, {
        "accuracy": report.accuracy,
        "macro_precision": report.macro_precision,
        "macro_recall": report.macro_recall,
        "macro_f1": report.macro_f1,
        "entropy": training.mean_prediction_entropy(probs),
    }


def ablate_branches(
    train: data.Dataset,
    val: data.Dataset,
    test: data.Dataset,
    model: ModelSection,
    cfg: training.TrainConfig,
    branches: Sequence[str] = tuple(BRANCH_PRESETS),
    seeds: Sequence[int] = (0,),
) -> list[dict[str, Any]]:
    rows = []
    for preset in branches:
        for seed in seeds:
            spec = model.to_spec(
                train.channels, train.classes, seed, branches=preset
            )
            network, scores = _train_and_score(
                spec, train, val, test, dataclasses.replace(cfg, seed=seed)
            )
            rows.append(
                {
                    "branches": preset,
                    "seed": seed,
                    "params": count_params(network).total,
                    "flops": count_flops(network, train.length).total,
                    **scores,
                }
            )
    return rows


def _imbalanced(dataset: data.Dataset, keep: float, seed: int) -> data.Dataset:
    """Keeps class 0 whole and a `keep` fraction of every fault class."""
    rng = utils.make_rng(seed)
    indices = list(np.flatnonzero(dataset.y == 0))
    for label in range(1, dataset.classes):
        members = np.flatnonzero(dataset.y == label)
        count = max(1, int(round(keep * len(members))))
        indices.extend(rng.choice(members, size=count, replace=False))
    return dataset.subset(sorted(int(i) for i in indices))


def ablate_augment(
    train: data.Dataset,
    val: data.Dataset,
    test: data.Dataset,
    model: ModelSection,
    cfg: training.TrainConfig,
    augmentations: Sequence[str] = ("none",) + tuple(data.AUGMENTATIONS),
    imbalance: float = 0.25,
    seeds: Sequence[int] = (0,),
) -> list[dict[str, Any]]:
    """Rebalances a deliberately skewed training set with each augmentation."""
    if not 0.0 < imbalance <= 1.0:
        raise ConfigError(f"imbalance must lie in (0, 1], got {imbalance}")
    rows = []
    for seed in seeds:
        skewed = _imbalanced(train, imbalance, seed)
        for name in augmentations:
            balanced = (
                skewed
                if name == "none"
                else data.balance_dataset(skewed, seed, augmentation=name)
            )
            spec = model.to_spec(train.channels, train.classes, seed)
            _, scores = _train_and_score(
                spec, balanced, val, test, dataclasses.replace(cfg, seed=seed)
            )
            rows.append(
                {
                    "augmentation": name,
                    "seed": seed,
                    "train_size": len(balanced),
                    **scores,
                }
            )
    return rows


def ablate_kd_grid(
    train: data.Dataset,
    val: data.Dataset,
    test: data.Dataset,
    model: ModelSection,
    cfg: training.TrainConfig,
    temperatures: Sequence[float] = (2.0, 4.0, 6.0, 8.0),
    alphas: Sequence[float] = (0.3, 0.5, 0.7, 0.9),
    seeds: Sequence[int] = (0,),
    teacher_branches: str = "3+1",
    student_branches: str = "1+1",
) -> list[dict[str, Any]]:
    """Distilled 1+1 students over a temperature x alpha grid.

    Each seed also reports the teacher and a hard-label student; their
    temperature and alpha cells are empty.
    """
    rows = []
    for seed in seeds:
        seeded = dataclasses.replace(cfg, seed=seed)
        teacher_spec = model.to_spec(
            train.channels, train.classes, seed, branches=teacher_branches
        )
        teacher, scores = _train_and_score(
            teacher_spec, train, val, test, seeded
        )
        rows.append({"role": "teacher", "seed": seed, **scores})
        student_spec = model.to_spec(
            train.channels, train.classes, seed, branches=student_branches
        )
        _, scores = _train_and_score(student_spec, train, val, test, seeded)
        rows.append({"role": "hard_label", "seed": seed, **scores})
        for tau in temperatures:
            for alpha in alphas:
                distill = training.DistillConfig(tau, alpha, teacher)
                _, scores = _train_and_score(
                    student_spec, train, val, test, seeded, distill
                )
                rows.append(
                    {
                        "role": "distilled",
                        "seed": seed,
                        "temperature": tau,
                        "alpha": alpha,
                        **scores,
                    }
                )
    return rows


def ablate_depth(
    train: data.Dataset,
    val: data.Dataset,
    test: data.Dataset,
    model: ModelSection,
    cfg: training.TrainConfig,
    depths: Sequence[int] = (3, 6, 9, 12),
    seeds: Sequence[int] = (0,),
) -> list[dict[str, Any]]:
    rows = []
    for depth in depths:
        section = dataclasses.replace(model, depth=depth)
        for seed in seeds:
            spec = section.to_spec(train.channels, train.classes, seed)
            network, scores = _train_and_score(
                spec, train, val, test, dataclasses.replace(cfg, seed=seed)
            )
            kernel = min(spec.backbone.module.conv_kernels)
            rows.append(
                {
                    "depth": depth,
                    "seed": seed,
                    "params": count_params(network).total,
                    "receptive_field": receptive_field(kernel, depth),
                    **scores,
                }
            )
    return rows


def ablate_kernel(
    train: data.Dataset,
    val: data.Dataset,
    test: data.Dataset,
    model: ModelSection,
    cfg: training.TrainConfig,
    kernels: Sequence[int] = (3, 9, 21, 39),
    seeds: Sequence[int] = (0,),
) -> list[dict[str, Any]]:
    rows = []
    for kernel in kernels:
        section = dataclasses.replace(model, kernel=kernel)
        for seed in seeds:
            spec = section.to_spec(train.channels, train.classes, seed)
            network, scores = _train_and_score(
                spec, train, val, test, dataclasses.replace(cfg, seed=seed)
            )
            rows.append(
                {
                    "kernel": kernel,
                    "seed": seed,
                    "params": count_params(network).total,
                    "receptive_field": receptive_field(kernel, model.depth),
                    **scores,
                }
            )
    return rows
