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

"""Channel selection command."""

import typer

from lite_diag import channel_select
from lite_diag.commands import common
from lite_diag.coordinator import app


@app.command("select-channels")
def select_channels(
    config: common.ConfigOption = None,
    seed: common.SeedOption = None,
    out: common.OutOption = None,
    precision: common.PrecisionOption = None,
) -> None:
    """Fuses MI, gradient and SE importance into a retained channel set."""
    ctx = common.prepare_run("select-channels", config, seed, out, precision)
    cfg = ctx.cfg
    dataset = common.load_or_generate_dataset(cfg)
    splits = common.make_splits(dataset, cfg)

    overrides = []
    if cfg.select.ngafid_overrides:
        overrides += channel_select.load_ngafid_overrides()
    if cfg.select.overrides:
        overrides += channel_select.load_overrides(cfg.select.overrides)

    spec = cfg.model.to_spec(dataset.channels, dataset.classes, cfg.seed)
    train_cfg = cfg.train.to_train_config(
        cfg.seed, history_path=str(ctx.artifact("select-history.jsonl"))
    )
    with ctx.timer.phase("select"):
        selection, result = channel_select.select_channels(
            splits.train,
            splits.val,
            spec,
            train_cfg,
            overrides,
            cfg.select.bins,
            dataset.channel_names,
        )
    ctx.report.metrics = {
        "retained": list(selection.retained),
        "excluded": list(selection.excluded),
        "best_epoch": result.best_epoch,
        "best_score": result.best_score,
    }
    ctx.report.extra["selection"] = selection.to_dict()
    names = [dataset.channel_names[c] for c in selection.retained]
    typer.echo(
        f"retained {len(names)} of {dataset.channels}: {', '.join(names)}"
    )
    common.finish_run(ctx)
