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

"""Knowledge distillation command.

Trains a teacher, a hard-label student and a distilled student.
"""

import typer

from lite_diag import training
from lite_diag.commands import common
from lite_diag.coordinator import app


@app.command("distill")
def distill(
    config: common.ConfigOption = None,
    seed: common.SeedOption = None,
    out: common.OutOption = None,
    precision: common.PrecisionOption = None,
) -> None:
    """Distills a 3+1 teacher into the configured lightweight student."""
    ctx = common.prepare_run("distill", config, seed, out, precision)
    cfg = ctx.cfg
    dataset = common.load_or_generate_dataset(cfg)
    splits = common.make_splits(dataset, cfg)
    batch_size = cfg.train.eval_batch_size

    if cfg.distill.teacher:
        teacher = common.load_model(cfg.distill.teacher)
    else:
        teacher = common.train_model(
            ctx, splits, "teacher", branches=cfg.distill.teacher_branches
        )
    hard = common.train_model(ctx, splits, "student-hard")
    student = common.train_model(
        ctx,
        splits,
        "student",
        distill=cfg.distill.to_distill_config(teacher),
    )

    metrics = {}
    entropy = {}
    for name, model in (
        ("teacher", teacher),
        ("student_hard", hard),
        ("student", student),
    ):
        report, probs = common.evaluate(model, splits.test, batch_size)
        metrics[name] = report
        entropy[name] = training.mean_prediction_entropy(probs)
        common.record_counters(ctx, name, model, dataset.length)

    ctx.report.metrics = {
        name: report.to_dict() for name, report in metrics.items()
    }
    ctx.report.metrics["entropy"] = entropy
    ctx.report.metrics["shift_vs_hard_label"] = training.precision_recall_shift(
        metrics["student_hard"], metrics["student"]
    )
    ctx.report.metrics["gap_to_teacher"] = (
        metrics["teacher"].accuracy - metrics["student"].accuracy
    )
    typer.echo(
        f"teacher {metrics['teacher'].accuracy:.4f}, "
        f"hard-label {metrics['student_hard'].accuracy:.4f}, "
        f"distilled {metrics['student'].accuracy:.4f}"
    )
    common.finish_run(ctx)
