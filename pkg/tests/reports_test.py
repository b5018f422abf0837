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

"""Test cases for the reports module."""

import json
import os
import tempfile
import unittest

import numpy as np
import pandas as pd
from pyfakefs import fake_filesystem_unittest

from lite_diag import reports


def _report():
    return reports.RunReport(
        command="train",
        config={"seed": 0, "train": {"learning_rate": 1e-4}},
        metrics={"accuracy": np.float64(0.75), "f1": np.array([0.5, 1.0])},
        timings={"fit": 1.5},
        artifacts={"checkpoint": "runs/model.litn"},
    )


class TestJsonReports(fake_filesystem_unittest.TestCase):
    """JSON report files."""

    def setUp(self):
        self.setUpPyfakefs()

    def test_emit_and_load(self):
        path = reports.emit_report(_report(), "/runs/train-report.json")
        loaded = reports.load_report(path)
        self.assertEqual(loaded.command, "train")
        self.assertEqual(loaded.metrics, {"accuracy": 0.75, "f1": [0.5, 1.0]})
        self.assertEqual(loaded.artifacts["checkpoint"], "runs/model.litn")
        self.assertEqual(loaded.counters, {})

    def test_stable_key_order(self):
        text = reports.dumps_report(_report())
        keys = list(json.loads(text))
        self.assertEqual(keys, sorted(keys))
        self.assertEqual(text, reports.dumps_report(_report()))

    def test_full_precision(self):
        report = reports.RunReport("bench", {}, metrics={"ratio": 1 / 3})
        loaded = json.loads(reports.dumps_report(report))
        self.assertEqual(loaded["metrics"]["ratio"], 1 / 3)

    def test_unknown_format(self):
        with self.assertRaises(ValueError):
            reports.emit_report(_report(), "/runs/r.xml", fmt="xml")

    def test_unknown_keys_are_ignored_on_load(self):
        self.fs.create_file(
            "/runs/old.json",
            contents=json.dumps({"command": "explain", "config": {}, "v": 2}),
        )
        report = reports.load_report("/runs/old.json")
        self.assertEqual(report.command, "explain")


class TestDelimitedReports(unittest.TestCase):
    """Delimited-text reports and tables."""

    def test_flattened_report(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = reports.emit_report(
                _report(), os.path.join(tmp, "r.csv"), fmt="csv"
            )
            frame = pd.read_csv(path)
        values = dict(zip(frame["key"], frame["value"]))
        self.assertEqual(float(values["metrics.f1[1]"]), 1.0)
        self.assertEqual(values["command"], "train")
        self.assertEqual(float(values["config.train.learning_rate"]), 1e-4)

    def test_table(self):
        rows = [
            {"branches": "1+1", "params": 10},
            {"branches": "3+1", "params": 30},
        ]
        with tempfile.TemporaryDirectory() as tmp:
            path = reports.write_table(
                rows, os.path.join(tmp, "t", "table.csv")
            )
            frame = pd.read_csv(path)
        self.assertEqual(list(frame["params"]), [10, 30])


class TestPhaseTimer(unittest.TestCase):
    """Phase timing."""

    def test_accumulates(self):
        timer = reports.PhaseTimer()
        with self.assertLogs("lite_diag.reports", level="INFO"):
            with timer.phase("fit"):
                pass
            with timer.phase("fit"):
                pass
        self.assertEqual(list(timer.timings), ["fit"])
        self.assertGreaterEqual(timer.timings["fit"], 0.0)

    def test_records_on_error(self):
        timer = reports.PhaseTimer()
        with self.assertRaises(RuntimeError):
            with timer.phase("load"):
                raise RuntimeError("boom")
        self.assertIn("load", timer.timings)


if __name__ == "__main__":
    unittest.main()
