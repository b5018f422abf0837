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

"""Test cases for the cascade module."""

import os
import tempfile
import unittest

import numpy as np
import pandas as pd

from lite_diag import cascade
from lite_diag.errors import ConfigError, DataError, ShapeError


class _AnomalyStub:
    """P(anomalous) is the first value of channel 0."""

    input_channels = 2

    def __init__(self):
        self.calls = []

    def predict_proba(self, x, batch_size=64):
        self.calls.append(len(x))
        p = np.clip(x[:, 0, 0], 0.0, 1.0)
        return np.stack([1.0 - p, p], axis=1)


class _FaultStub:
    """Fault 2 when the first value of channel 1 is positive, else fault 1."""

    input_channels = 2

    def __init__(self):
        self.calls = []

    def predict_proba(self, x, batch_size=64):
        self.calls.append(len(x))
        second = (x[:, 0, 1] > 0).astype(np.float64)
        return np.stack([1.0 - second, second], axis=1)


def _samples(anomaly, fault_sign):
    x = np.zeros((len(anomaly), 4, 2))
    x[:, 0, 0] = anomaly
    x[:, 0, 1] = fault_sign
    return x


class TestCascadePredict(unittest.TestCase):
    """Gated two-stage prediction."""

    def setUp(self):
        self.stage1 = _AnomalyStub()
        self.stage2 = _FaultStub()
        self.cfg = cascade.CascadeConfig(self.stage1, self.stage2, 0.5)

    def test_below_threshold_is_normal(self):
        x = _samples([0.2], [1.0])[0]
        label, trace = cascade.cascade_predict(x, self.cfg)
        self.assertEqual(label, 0)
        self.assertFalse(trace.stage2_ran)
        self.assertIsNone(trace.stage2_probabilities)
        self.assertEqual(self.stage2.calls, [])

    def test_above_threshold_runs_stage2(self):
        x = _samples([0.8], [1.0])[0]
        label, trace = cascade.cascade_predict(x, self.cfg)
        self.assertEqual(label, 2)
        self.assertTrue(trace.stage2_ran)
        self.assertAlmostEqual(trace.anomaly_probability, 0.8)

    def test_threshold_is_inclusive(self):
        label, _ = cascade.cascade_predict(_samples([0.5], [-1.0])[0], self.cfg)
        self.assertEqual(label, 1)

    def test_batch_matches_sample_by_sample(self):
        rng = np.random.default_rng(0)
        x = _samples(rng.uniform(size=40), rng.normal(size=40))
        batch = cascade.cascade_predict_batch(x, self.cfg)
        for i in range(len(x)):
            anomaly = self.stage1.predict_proba(x[i : i + 1])[0, 1]
            if anomaly >= 0.5:
                fault = self.stage2.predict_proba(x[i : i + 1])[0]
                expected = int(np.argmax(fault)) + 1
            else:
                expected = 0
            self.assertEqual(batch.labels[i], expected)
        flagged = int(np.sum(x[:, 0, 0] >= 0.5))
        self.assertAlmostEqual(batch.stage2_fraction, flagged / 40)

    def test_stage2_sees_only_flagged_samples(self):
        x = _samples([0.1, 0.9, 0.3, 0.7], [1.0, 1.0, 1.0, -1.0])
        batch = cascade.cascade_predict_batch(x, self.cfg)
        np.testing.assert_array_equal(batch.labels, [0, 2, 0, 1])
        self.assertEqual(self.stage2.calls, [2])

    def test_extreme_thresholds(self):
        x = _samples([0.0, 0.4, 1.0], [1.0, 1.0, 1.0])
        always = cascade.CascadeConfig(self.stage1, self.stage2, 0.0)
        np.testing.assert_array_equal(
            cascade.cascade_predict_batch(x, always).labels, [2, 2, 2]
        )
        never = cascade.CascadeConfig(self.stage1, self.stage2, 1.0)
        np.testing.assert_array_equal(
            cascade.cascade_predict_batch(x, never).labels, [0, 0, 2]
        )

    def test_threshold_range(self):
        with self.assertRaises(ConfigError):
            cascade.CascadeConfig(self.stage1, self.stage2, 1.5)

    def test_channel_mismatch(self):
        with self.assertRaises(ShapeError):
            cascade.cascade_predict_batch(np.zeros((1, 4, 3)), self.cfg)

    def test_single_sample_shape(self):
        with self.assertRaises(ShapeError):
            cascade.cascade_predict(np.zeros((1, 4, 2)), self.cfg)

    def test_evaluate(self):
        x = _samples([0.1, 0.9, 0.3, 0.7], [1.0, 1.0, 1.0, -1.0])
        evaluation = cascade.evaluate_cascade(x, [0, 2, 1, 1], self.cfg)
        self.assertAlmostEqual(evaluation.metrics.accuracy, 0.75)
        self.assertAlmostEqual(evaluation.stage2_fraction, 0.5)
        self.assertEqual(evaluation.to_dict()["threshold"], 0.5)


class TestCost(unittest.TestCase):
    """Expected per-sample cost."""

    def test_expected_cost(self):
        model = cascade.CostModel(1.0, 2.0, 0.5)
        self.assertEqual(cascade.expected_cost(model), 2.0)

    def test_all_normal_costs_stage1_only(self):
        model = cascade.CostModel(3.0, 9.0, 1.0)
        self.assertEqual(cascade.expected_cost(model), 3.0)

    def test_validation(self):
        with self.assertRaises(ConfigError):
            cascade.CostModel(-1.0, 1.0, 0.5)
        with self.assertRaises(ConfigError):
            cascade.CostModel(1.0, 1.0, 1.5)


class TestThresholdSweep(unittest.TestCase):
    """Stage-1 threshold sweep."""

    def setUp(self):
        self.x = _samples([0.1, 0.4, 0.6, 0.9], [0.0] * 4)
        self.y = [0, 0, 1, 1]

    def test_rows(self):
        rows = cascade.threshold_sweep(
            _AnomalyStub(), self.x, self.y, [0.3, 0.5]
        )
        self.assertEqual([r.threshold for r in rows], [0.3, 0.5])
        self.assertAlmostEqual(rows[0].precision, 2 / 3)
        self.assertAlmostEqual(rows[0].recall, 1.0)
        self.assertAlmostEqual(rows[0].flagged_fraction, 0.75)
        self.assertAlmostEqual(rows[1].f1, 1.0)

    def test_default_grid(self):
        rows = cascade.threshold_sweep(_AnomalyStub(), self.x, self.y)
        self.assertEqual(len(rows), 19)
        self.assertEqual(rows[0].threshold, 0.05)
        self.assertEqual(rows[-1].threshold, 0.95)

    def test_grid_validation(self):
        for grid in ([], [0.0, 0.5], [0.6, 0.4]):
            with self.assertRaises(ConfigError):
                cascade.threshold_sweep(_AnomalyStub(), self.x, self.y, grid)

    def test_single_class(self):
        with self.assertRaises(DataError):
            cascade.threshold_sweep(_AnomalyStub(), self.x, [1, 1, 1, 1])

    def test_csv(self):
        rows = cascade.threshold_sweep(_AnomalyStub(), self.x, self.y, [0.5])
        with tempfile.TemporaryDirectory() as tmp:
            path = cascade.write_sweep_csv(rows, os.path.join(tmp, "sweep.csv"))
            frame = pd.read_csv(path)
        self.assertEqual(
            list(frame.columns),
            ["threshold", "precision", "recall", "f1", "flagged_fraction"],
        )
        self.assertEqual(len(frame), 1)


if __name__ == "__main__":
    unittest.main()
