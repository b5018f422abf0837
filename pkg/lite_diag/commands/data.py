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

"""Dataset generation and ingestion command."""

from lite_diag import data
from lite_diag.commands import common
from lite_diag.coordinator import app


@app.command("gen-data")
def gen_data(
    config: common.ConfigOption = None,
    seed: common.SeedOption = None,
    out: common.OutOption = None,
    precision: common.PrecisionOption = None,
) -> None:
    """Generates (or ingests) a dataset and writes the packed container."""
    ctx = common.prepare_run("gen-data", config, seed, out, precision)
    with ctx.timer.phase("generate"):
        dataset = common.load_or_generate_dataset(ctx.cfg)
        dataset.validate()
    with ctx.timer.phase("write"):
        data.save_dataset(dataset, ctx.artifact("dataset"))
    manifest = dataset.manifest
    ctx.report.metrics = {
        "samples": manifest.sample_count,
        "length": manifest.length,
        "channels": len(manifest.channel_names),
        "class_counts": manifest.class_counts,
    }
    ctx.report.extra["provenance"] = manifest.provenance
    common.finish_run(ctx)
