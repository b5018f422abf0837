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

"""Parameter, FLOP and CPU latency benchmark command."""

import typer

from lite_diag import experiments
from lite_diag.commands import common
from lite_diag.coordinator import app


@app.command("bench")
def bench(
    config: common.ConfigOption = None,
    seed: common.SeedOption = None,
    out: common.OutOption = None,
    precision: common.PrecisionOption = None,
) -> None:
    """Compares backbone presets on counters and single-thread latency."""
    ctx = common.prepare_run("bench", config, seed, out, precision)
    cfg = ctx.cfg
    section = cfg.bench
    with ctx.timer.phase("bench"):
        summary = experiments.compare_backbones(
            section.branches,
            cfg.model.depth,
            cfg.model.filters,
            cfg.model.bottleneck,
            section.channels,
            section.classes,
            section.length,
            section.runs,
            section.warmup,
            cfg.seed,
        )
    for row in summary["rows"]:
        ctx.report.counters[row["branches"]] = {
            "params": row["params"],
            "flops": row["flops"],
        }
        key = f"{row['branches']}_latency_mean_ms"
        ctx.report.timings[key] = row["mean_ms"]
        ctx.report.timings[f"{row['branches']}_latency_p95_ms"] = row["p95_ms"]
        typer.echo(
            f"{row['branches']}: {row['params']} params, {row['flops']} FLOPs, "
            f"{row['mean_ms']:.2f} ms (p95 {row['p95_ms']:.2f})"
        )
    ctx.report.metrics = {
        k: v for k, v in summary.items() if k != "rows"
    }
    common.finish_run(ctx)
