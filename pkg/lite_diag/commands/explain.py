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

"""Attribution and evidence-chain command."""

import logging

import typer

from lite_diag import attribution
from lite_diag.commands import common
from lite_diag.coordinator import app
from lite_diag.errors import DataError

logger = logging.getLogger(__name__)


@app.command("explain")
def explain(
    config: common.ConfigOption = None,
    seed: common.SeedOption = None,
    out: common.OutOption = None,
    precision: common.PrecisionOption = None,
) -> None:
    """Builds evidence chains for fault classes on the test split."""
    ctx = common.prepare_run("explain", config, seed, out, precision)
    cfg = ctx.cfg
    section = cfg.explain
    dataset = common.load_or_generate_dataset(cfg)
    splits = common.make_splits(dataset, cfg)
    if section.checkpoint:
        model = common.load_model(section.checkpoint)
    else:
        model = common.train_model(ctx, splits, "model")

    targets = (
        [section.target]
        if section.target is not None
        else list(range(1, model.classes))
    )
    settings = attribution.AttributionSettings(
        steps=section.steps,
        window=section.window,
        stride=section.stride,
        baseline=section.baseline,
        batch_size=cfg.train.eval_batch_size,
    )
    chains = {}
    for target in targets:
        try:
            with ctx.timer.phase(f"explain_class_{target}"):
                chain = attribution.evidence_chain(
                    model,
                    splits.test.x,
                    target,
                    samples=section.samples,
                    k=section.top_k,
                    percentile=section.percentile,
                    seed=cfg.seed,
                    settings=settings,
                    noise_levels=section.noise_levels,
                    labels=splits.test.y,
                )
        except DataError:
            if section.target is not None:
                raise
            logger.warning("class %d: no correctly classified samples", target)
            continue
        chains[str(target)] = chain.to_dict(dataset.channel_names)
        if section.export_grids:
            for method, amap in chain.maps.items():
                if amap.grid is not None:
                    attribution.write_grid_csv(
                        amap,
                        ctx.artifact(f"grid-class{target}-{method}.csv"),
                        dataset.channel_names,
                    )
        consensus = [dataset.channel_names[c] for c in chain.consensus]
        typer.echo(f"class {target}: consensus {consensus}")

    ctx.report.metrics = {
        "classes_explained": sorted(int(t) for t in chains),
        "consensus": {t: c["consensus"] for t, c in chains.items()},
    }
    ctx.report.extra["evidence"] = chains
    common.finish_run(ctx)
