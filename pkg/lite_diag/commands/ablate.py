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

"""Ablation commands: branches, augment, kd-grid, depth and kernel."""

from typing import Any, Callable

import typer

from lite_diag import experiments
from lite_diag import reports
from lite_diag.commands import common
from lite_diag.config import AblateSection, DistillSection
from lite_diag.coordinator import ablate_app


def _run(
    name: str,
    ctx: common.RunContext,
    runner: Callable[..., list[dict[str, Any]]],
    **options: Any,
) -> None:
    cfg = ctx.cfg
    dataset = common.load_or_generate_dataset(cfg)
    splits = common.make_splits(dataset, cfg)
    train_cfg = cfg.train.to_train_config(cfg.seed)
    with ctx.timer.phase(name):
        rows = runner(
            splits.train,
            splits.val,
            splits.test,
            cfg.model,
            train_cfg,
            seeds=cfg.ablate.seeds,
            **options,
        )
    reports.write_table(rows, ctx.artifact(f"ablate-{name}.csv"))
    ctx.report.metrics = {"rows": rows}
    typer.echo(f"ablate {name}: {len(rows)} rows")
    common.finish_run(ctx)


@ablate_app.command("branches")
def branches(
    config: common.ConfigOption = None,
    seed: common.SeedOption = None,
    out: common.OutOption = None,
    precision: common.PrecisionOption = None,
) -> None:
    """Branch presets 1+0, 1+1, 2+1 and 3+1."""
    ctx = common.prepare_run("ablate branches", config, seed, out, precision)
    section: AblateSection = ctx.cfg.ablate
    _run(
        "branches", ctx, experiments.ablate_branches, branches=section.branches
    )


@ablate_app.command("augment")
def augment(
    config: common.ConfigOption = None,
    seed: common.SeedOption = None,
    out: common.OutOption = None,
    precision: common.PrecisionOption = None,
) -> None:
    """Rebalancing an imbalanced training set with each augmentation."""
    ctx = common.prepare_run("ablate augment", config, seed, out, precision)
    section: AblateSection = ctx.cfg.ablate
    _run(
        "augment",
        ctx,
        experiments.ablate_augment,
        augmentations=section.augmentations,
        imbalance=section.imbalance,
    )


@ablate_app.command("kd-grid")
def kd_grid(
    config: common.ConfigOption = None,
    seed: common.SeedOption = None,
    out: common.OutOption = None,
    precision: common.PrecisionOption = None,
) -> None:
    """Distillation temperature x alpha grid."""
    ctx = common.prepare_run("ablate kd-grid", config, seed, out, precision)
    section: AblateSection = ctx.cfg.ablate
    distill: DistillSection = ctx.cfg.distill
    _run(
        "kd-grid",
        ctx,
        experiments.ablate_kd_grid,
        temperatures=section.temperatures,
        alphas=section.alphas,
        teacher_branches=distill.teacher_branches,
        student_branches=ctx.cfg.model.branches,
    )


@ablate_app.command("depth")
def depth(
    config: common.ConfigOption = None,
    seed: common.SeedOption = None,
    out: common.OutOption = None,
    precision: common.PrecisionOption = None,
) -> None:
    """Number of stacked Inception modules."""
    ctx = common.prepare_run("ablate depth", config, seed, out, precision)
    _run("depth", ctx, experiments.ablate_depth, depths=ctx.cfg.ablate.depths)


@ablate_app.command("kernel")
def kernel(
    config: common.ConfigOption = None,
    seed: common.SeedOption = None,
    out: common.OutOption = None,
    precision: common.PrecisionOption = None,
) -> None:
    """Size of the convolution kernel."""
    ctx = common.prepare_run("ablate kernel", config, seed, out, precision)
    _run(
        "kernel", ctx, experiments.ablate_kernel, kernels=ctx.cfg.ablate.kernels
    )
