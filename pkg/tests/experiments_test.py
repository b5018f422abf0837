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

"""Test cases for the experiments module."""

import unittest

from lite_diag import config
from lite_diag import data
from lite_diag import experiments
from lite_diag import models
from lite_diag import training
from lite_diag.errors import ConfigError

_SMALL = dict(depth=1, filters=4, bottleneck=2, channels=3, classes=2)


def _splits():
    dataset = data.synth_generate(
        data.SynthSpec(classes=3, channels=3, length=32, per_class=12)
    )
    train, test = data.stratified_split(dataset, 0.75, seed=0)
    train, val = data.stratified_split(train, 0.75, seed=0)
    return train, val, test


class TestLatency(unittest.TestCase):
    """Latency and counter comparisons."""

    def test_minimum_runs(self):
        model = models.build_model(experiments.backbone_spec("1+1", **_SMALL))
        with self.assertRaises(ConfigError):
            experiments.benchmark_latency(model, 16, runs=10)

    def test_latency_report(self):
        model = models.build_model(experiments.backbone_spec("1+1", **_SMALL))
        report = experiments.benchmark_latency(model, 16, warmup=1)
        self.assertEqual(report.runs, 100)
        self.assertEqual(report.threads, 1)
        self.assertGreater(report.mean_ms, 0.0)
        self.assertGreaterEqual(report.p95_ms, 0.0)

    def test_compare_backbones(self):
        summary = experiments.compare_backbones(length=16, warmup=1, **_SMALL)
        self.assertEqual(
            [row["branches"] for row in summary["rows"]], ["1+1", "3+1"]
        )
        self.assertLess(summary["param_ratio"], 1.0)
        self.assertLess(summary["flop_ratio"], 1.0)
        self.assertIn("speedup", summary)


class TestAblations(unittest.TestCase):
    """Ablation runners on a tiny synthetic set."""

    def setUp(self):
        self.train, self.val, self.test = _splits()
        self.model = config.ModelSection(filters=4, bottleneck=2, depth=1)
        self.cfg = training.TrainConfig(
            learning_rate=1e-2, batch_size=8, max_epochs=1
        )

    def test_branches(self):
        rows = experiments.ablate_branches(
            self.train,
            self.val,
            self.test,
            self.model,
            self.cfg,
            branches=("1+0", "3+1"),
        )
        self.assertEqual([r["branches"] for r in rows], ["1+0", "3+1"])
        self.assertLess(rows[0]["params"], rows[1]["params"])
        for row in rows:
            self.assertGreaterEqual(row["macro_f1"], 0.0)
            self.assertLessEqual(row["macro_f1"], 1.0)

    def test_depth_reports_receptive_field(self):
        rows = experiments.ablate_depth(
            self.train, self.val, self.test, self.model, self.cfg, depths=(1, 2)
        )
        self.assertEqual([r["receptive_field"] for r in rows], [3, 5])

    def test_kernel(self):
        rows = experiments.ablate_kernel(
            self.train, self.val, self.test, self.model, self.cfg, kernels=(5,)
        )
        self.assertEqual(rows[0]["receptive_field"], 5)

    def test_augment(self):
        rows = experiments.ablate_augment(
            self.train,
            self.val,
            self.test,
            self.model,
            self.cfg,
            augmentations=("none", "timewarp"),
            imbalance=0.5,
        )
        self.assertLess(rows[0]["train_size"], rows[1]["train_size"])

    def test_augment_imbalance_range(self):
        with self.assertRaises(ConfigError):
            experiments.ablate_augment(
                self.train,
                self.val,
                self.test,
                self.model,
                self.cfg,
                imbalance=0.0,
            )

    def test_kd_grid(self):
        rows = experiments.ablate_kd_grid(
            self.train,
            self.val,
            self.test,
            self.model,
            self.cfg,
            temperatures=(4.0,),
            alphas=(0.5, 0.7),
        )
        self.assertEqual(
            [r["role"] for r in rows],
            ["teacher", "hard_label", "distilled", "distilled"],
        )
        self.assertEqual(rows[3]["alpha"], 0.7)


if __name__ == "__main__":
    unittest.main()
