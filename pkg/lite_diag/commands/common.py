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

"""Options and plumbing shared by every command."""

import dataclasses
import enum
import logging
from pathlib import Path
from typing import Annotated, Any, Optional

import typer

from lite_diag import config as config_lib
from lite_diag import data
from lite_diag import reports
from lite_diag import tensor_core as tc
from lite_diag import training
from lite_diag.checkpoint import load_checkpoint, save_checkpoint
from lite_diag.errors import DataError
from lite_diag.models import Network, build_model, count_flops, count_params

logger = logging.getLogger(__name__)


class Precision(str, enum.Enum):
    single = "32"
    double = "64"


ConfigOption = Annotated[
    Optional[Path],
    typer.Option("--config", help="YAML run configuration."),
]
SeedOption = Annotated[
    Optional[int],
    typer.Option("--seed", min=0, help="Seed for data, init and training."),
]
OutOption = Annotated[
    Optional[Path],
    typer.Option("--out", help="Directory for reports and artifacts."),
]
PrecisionOption = Annotated[
    Optional[Precision],
    typer.Option("--precision", help="Floating-point width of the engine."),
]


@dataclasses.dataclass
class RunContext:
    command: str
    cfg: config_lib.RunConfig
    out: Path
    timer: reports.PhaseTimer
    report: reports.RunReport

    def artifact(self, name: str) -> Path:
        path = self.out / name
        self.report.artifacts[name] = str(path)
        return path


def prepare_run(
    command: str,
    config: Optional[Path],
    seed: Optional[int],
    out: Optional[Path],
    precision: Optional[Precision],
) -> RunContext:
    """Resolves the configuration, echoes it and fixes the engine precision."""
    cfg = config_lib.resolve(
        config,
        seed=seed,
        precision=int(precision.value) if precision is not None else None,
        out=str(out) if out is not None else None,
    )
    tc.set_default_precision(cfg.precision)
    typer.echo(config_lib.dump_yaml(cfg), nl=False)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    logger.info("%s: writing to %s", command, out_dir)
    return RunContext(
        command,
        cfg,
        out_dir,
        reports.PhaseTimer(),
        reports.RunReport(command, cfg.to_dict()),
    )


def finish_run(ctx: RunContext) -> Path:
    ctx.report.timings.update(ctx.timer.timings)
    name = ctx.command.replace(" ", "-")
    path = reports.emit_report(ctx.report, ctx.out / f"{name}-report.json")
    typer.echo(f"report: {path}")
    return path


# Data


def _read_flights(directory: Path) -> list[data.RawFlight]:
    """`<directory>/<label>/*.csv`, label being the integer class."""
    flights = []
    for label_dir in sorted(p for p in directory.iterdir() if p.is_dir()):
        try:
            label = int(label_dir.name)
        except ValueError:
            raise DataError(
                f"{label_dir}: flight folders must be named by class label"
            ) from None
        for path in sorted(label_dir.glob("*.csv")):
            flights.append(data.read_flight_csv(path, label))
    if not flights:
        raise DataError(f"no flight files under {directory}")
    return flights


def load_or_generate_dataset(cfg: config_lib.RunConfig) -> data.Dataset:
    section = cfg.data
    if section.dataset:
        return data.load_dataset(section.dataset)
    if section.flights:
        dataset = data.ingest_and_preprocess(
            _read_flights(Path(section.flights)),
            length=section.length,
            workers=section.workers,
        )
        dataset.seed = cfg.seed
        return dataset
    return data.synth_generate(
        data.SynthSpec(
            classes=section.classes,
            channels=section.channels,
            length=section.length,
            per_class=section.per_class,
            noise=section.noise,
            amplitude=section.amplitude,
            distractors=section.distractors,
            seed=cfg.seed,
        )
    )


@dataclasses.dataclass
class Splits:
    train: data.Dataset
    val: data.Dataset
    test: data.Dataset


def make_splits(
    dataset: data.Dataset, cfg: config_lib.RunConfig, balance: bool = True
) -> Splits:
    """Stratified train/val/test; the train split is optionally rebalanced."""
    section = cfg.data
    train, test = data.stratified_split(
        dataset, section.train_fraction, cfg.seed
    )
    train, val = data.stratified_split(
        train, 1.0 - section.val_fraction, cfg.seed + 1
    )
    if balance and section.balance:
        train = data.balance_dataset(
            train, cfg.seed, augmentation=section.augmentation
        )
    return Splits(train, val, test)


# Models


def train_model(
    ctx: RunContext,
    splits: Splits,
    name: str,
    branches: Optional[str] = None,
    kind: Optional[str] = None,
    distill: Optional[training.DistillConfig] = None,
    **train_changes: Any,
) -> Network:
    """Fits a model on `splits` and saves its checkpoint as `<name>.litn`."""
    cfg = ctx.cfg
    spec = cfg.model.to_spec(
        splits.train.channels,
        splits.train.classes,
        cfg.seed,
        branches=branches,
        kind=kind,
    )
    train_cfg = cfg.train.to_train_config(
        cfg.seed,
        history_path=str(ctx.artifact(f"{name}-history.jsonl")),
        **train_changes,
    )
    model = build_model(spec)
    with ctx.timer.phase(f"train_{name}"):
        result = training.fit(
            model, splits.train, splits.val, train_cfg, distill
        )
    save_checkpoint(
        model,
        ctx.artifact(f"{name}.litn"),
        provenance={
            "command": ctx.command,
            "best_epoch": result.best_epoch,
            "best_score": result.best_score,
            "train_samples": len(splits.train),
            "dataset": splits.train.provenance,
        },
    )
    return model


def load_model(path: str) -> Network:
    return load_checkpoint(path).model


def evaluate(model: Network, dataset: data.Dataset, batch_size: int = 64):
    probs = model.predict_proba(dataset.x, batch_size)
    report = training.evaluate_metrics(
        probs.argmax(axis=1), dataset.y, model.classes
    )
    return report, probs


def record_counters(ctx: RunContext, name: str, model: Network, length: int):
    ctx.report.counters[name] = {
        "params": count_params(model).total,
        "flops": count_flops(model, length).total,
    }
