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

"""Supervised training command."""

import enum
from typing import Annotated

import typer

from lite_diag import data
from lite_diag.commands import common
from lite_diag.coordinator import app


class Task(str, enum.Enum):
    full = "full"
    detect = "detect"
    identify = "identify"


@app.command("train")
def train(
    config: common.ConfigOption = None,
    seed: common.SeedOption = None,
    out: common.OutOption = None,
    precision: common.PrecisionOption = None,
    task: Annotated[
        Task,
        typer.Option(
            "--task",
            help="full: every class; detect: normal vs. fault; "
            "identify: fault classes only.",
        ),
    ] = Task.full,
) -> None:
    """Trains one network and reports its test metrics."""
    ctx = common.prepare_run("train", config, seed, out, precision)
    dataset = common.load_or_generate_dataset(ctx.cfg)
    changes = {}
    if task is Task.detect:
        dataset = data.binary_view(dataset)
        changes["selection_metric"] = "recall"
    elif task is Task.identify:
        dataset = data.fault_view(dataset)
    splits = common.make_splits(dataset, ctx.cfg)

    model = common.train_model(ctx, splits, "model", **changes)
    with ctx.timer.phase("evaluate"):
        report, _ = common.evaluate(
            model, splits.test, ctx.cfg.train.eval_batch_size
        )
    ctx.report.metrics = {"task": task.value, "test": report.to_dict()}
    common.record_counters(ctx, "model", model, dataset.length)
    typer.echo(
        f"test accuracy {report.accuracy:.4f}, "
        f"macro F1 {report.macro_f1:.4f}"
    )
    common.finish_run(ctx)
