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

"""Run reports as JSON documents or delimited text."""

from __future__ import annotations

import contextlib
import dataclasses
import json
import logging
import time
from pathlib import Path
from typing import Any, Iterator, Mapping, Sequence

import pandas as pd

from lite_diag import utils

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv")


@dataclasses.dataclass
class RunReport:
    command: str
    config: dict[str, Any]
    metrics: dict[str, Any] = dataclasses.field(default_factory=dict)
    timings: dict[str, float] = dataclasses.field(default_factory=dict)
    counters: dict[str, Any] = dataclasses.field(default_factory=dict)
    artifacts: dict[str, str] = dataclasses.field(default_factory=dict)
    extra: dict[str, Any] = dataclasses.field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return utils.to_jsonable(self)

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> RunReport:
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in raw.items() if k in names})


class PhaseTimer:
    """Accumulates wall-clock seconds per named phase."""

    def __init__(self):
        self.timings: dict[str, float] = {}

    @contextlib.contextmanager
    def phase(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self.timings[name] = self.timings.get(name, 0.0) + elapsed
            logger.info("%s took %.3fs", name, elapsed)


def dumps_report(report: RunReport) -> str:
    return json.dumps(report.to_dict(), indent=4, sort_keys=True) + "\n"


def _flatten(value: Any, prefix: str = "") -> Iterator[tuple[str, Any]]:
    if isinstance(value, Mapping):
        for key in sorted(value, key=str):
            name = f"{prefix}.{key}" if prefix else str(key)
            yield from _flatten(value[key], name)
    elif isinstance(value, list):
        for i, item in enumerate(value):
            yield from _flatten(item, f"{prefix}[{i}]")
    else:
        yield prefix, value


def emit_report(
    report: RunReport, path: str | Path, fmt: str = "json"
) -> Path:
    """Writes the report with stable key order and full-precision numbers."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown report format {fmt!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        with open(path, "w", encoding="utf-8") as f:
            f.write(dumps_report(report))
    else:
        frame = pd.DataFrame(
            list(_flatten(report.to_dict())), columns=["key", "value"]
        )
        frame.to_csv(path, index=False)
    logger.info("wrote %s report to %s", report.command, path)
    return path


def load_report(path: str | Path) -> RunReport:
    with open(path, encoding="utf-8") as f:
        return RunReport.from_dict(json.load(f))


def write_table(
    rows: Sequence[Mapping[str, Any]] | Sequence[Any], path: str | Path
) -> Path:
    """Delimited-text table of dicts or dataclass rows."""
    records = [
        dataclasses.asdict(r) if dataclasses.is_dataclass(r) else dict(r)
        for r in rows
    ]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(utils.to_jsonable(records)).to_csv(
        path, index=False, float_format="%.17g"
    )
    return path
