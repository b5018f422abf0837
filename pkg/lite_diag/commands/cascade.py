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

"""Two-stage cascade evaluation and stage-1 threshold sweep commands."""

import numpy as np
import typer

from lite_diag import cascade as cascade_lib
from lite_diag import data
from lite_diag import experiments
from lite_diag.commands import common
from lite_diag.coordinator import app


def _stage1(ctx: common.RunContext, splits: common.Splits):
    section = ctx.cfg.cascade
    if section.stage1:
        return common.load_model(section.stage1)
    binary = common.Splits(
        data.binary_view(splits.train),
        data.binary_view(splits.val),
        data.binary_view(splits.test),
    )
    return common.train_model(
        ctx,
        binary,
        "stage1",
        kind=section.stage1_kind,
        selection_metric="recall",
    )


def _stage2(ctx: common.RunContext, splits: common.Splits):
    section = ctx.cfg.cascade
    if section.stage2:
        return common.load_model(section.stage2)
    faults = common.Splits(
        data.fault_view(splits.train),
        data.fault_view(splits.val),
        data.fault_view(splits.test),
    )
    return common.train_model(ctx, faults, "stage2", kind="backbone")


@app.command("cascade")
def cascade(
    config: common.ConfigOption = None,
    seed: common.SeedOption = None,
    out: common.OutOption = None,
    precision: common.PrecisionOption = None,
) -> None:
    """Trains (or loads) both stages and evaluates the cascade end to end."""
    ctx = common.prepare_run("cascade", config, seed, out, precision)
    cfg = ctx.cfg
    section = cfg.cascade
    dataset = common.load_or_generate_dataset(cfg)
    splits = common.make_splits(dataset, cfg)
    stage1 = _stage1(ctx, splits)
    stage2 = _stage2(ctx, splits)

    cascade_cfg = cascade_lib.CascadeConfig(stage1, stage2, section.threshold)
    with ctx.timer.phase("evaluate"):
        evaluation = cascade_lib.evaluate_cascade(
            splits.test.x, splits.test.y, cascade_cfg
        )

    costs = {"stage1": section.stage1_cost, "stage2": section.stage2_cost}
    for name, model in (("stage1", stage1), ("stage2", stage2)):
        common.record_counters(ctx, name, model, dataset.length)
        if costs[name] is None:
            with ctx.timer.phase(f"latency_{name}"):
                latency = experiments.benchmark_latency(
                    model,
                    dataset.length,
                    cfg.bench.runs,
                    cfg.bench.warmup,
                    seed=cfg.seed,
                )
            ctx.report.timings[f"{name}_latency_mean_ms"] = latency.mean_ms
            ctx.report.timings[f"{name}_latency_p95_ms"] = latency.p95_ms
            costs[name] = latency.mean_ms
    cost_model = cascade_lib.CostModel(
        costs["stage1"],
        costs["stage2"],
        float(np.mean(splits.test.y == 0)),
    )

    ctx.report.metrics = evaluation.to_dict()
    ctx.report.metrics["expected_cost"] = cascade_lib.expected_cost(cost_model)
    ctx.report.metrics["cost_model"] = cost_model
    typer.echo(
        f"cascade accuracy {evaluation.metrics.accuracy:.4f}, "
        f"stage 2 on {100 * evaluation.stage2_fraction:.1f}% of samples"
    )
    common.finish_run(ctx)


@app.command("sweep-threshold")
def sweep_threshold(
    config: common.ConfigOption = None,
    seed: common.SeedOption = None,
    out: common.OutOption = None,
    precision: common.PrecisionOption = None,
) -> None:
    """Stage-1 precision, recall and F1 across anomaly thresholds."""
    ctx = common.prepare_run("sweep-threshold", config, seed, out, precision)
    cfg = ctx.cfg
    dataset = common.load_or_generate_dataset(cfg)
    splits = common.make_splits(dataset, cfg)
    stage1 = _stage1(ctx, splits)
    test = data.binary_view(splits.test)
    with ctx.timer.phase("sweep"):
        rows = cascade_lib.threshold_sweep(
            stage1, test.x, test.y, cfg.cascade.thresholds
        )
    cascade_lib.write_sweep_csv(rows, ctx.artifact("sweep.csv"))
    ctx.report.metrics = {"sweep": rows}
    best = max(rows, key=lambda r: r.f1)
    typer.echo(f"best F1 {best.f1:.4f} at threshold {best.threshold}")
    common.finish_run(ctx)
