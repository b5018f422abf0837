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

"""Test cases for the data module."""

import os
import tempfile
import unittest

import numpy as np
from pyfakefs import fake_filesystem_unittest

from lite_diag import data
from lite_diag.errors import DataError


def _small_synth(**changes):
    values = dict(classes=3, channels=4, length=64, per_class=20, seed=0)
    values.update(changes)
    return data.synth_generate(data.SynthSpec(**values))


def _flight(rows, channels=2, label=1, source="f", missing=0):
    values = np.tile(np.linspace(0.0, 10.0, rows)[:, None], (1, channels))
    values[:missing, 0] = np.nan
    return data.RawFlight(
        [f"c{i}" for i in range(channels)], values, source, label
    )


class TestPreprocessing(unittest.TestCase):
    """Gap filling, resampling and normalization."""

    def test_fill_inside_and_at_edges(self):
        values = np.array([[np.nan], [1.0], [np.nan], [3.0], [np.nan]])
        filled, count = data.fill_missing(values)
        np.testing.assert_allclose(filled.reshape(-1), [1, 1, 2, 3, 3])
        self.assertEqual(count, 3)

    def test_fill_nothing_missing(self):
        values = np.ones((4, 2))
        filled, count = data.fill_missing(values)
        self.assertEqual(count, 0)
        np.testing.assert_array_equal(filled, values)

    def test_resample(self):
        out = data.resample_linear(np.array([[1.0], [3.0]]), 4)
        np.testing.assert_allclose(out.reshape(-1), [1, 5 / 3, 7 / 3, 3])

    def test_resample_same_length(self):
        values = np.arange(6.0).reshape(3, 2)
        np.testing.assert_array_equal(data.resample_linear(values, 3), values)

    def test_minmax(self):
        values = np.array([[0.0, 4.0], [5.0, 4.0], [10.0, 4.0]])
        out = data.minmax_normalize(values)
        np.testing.assert_allclose(out[:, 0], [0.0, 0.5, 1.0])
        np.testing.assert_allclose(out[:, 1], [0.5, 0.5, 0.5])

    def test_ingest_drops_and_fills(self):
        flights = [
            _flight(40, source="ok", missing=2),
            _flight(10, source="short"),
            _flight(40, source="gappy", missing=30),
        ]
        dataset = data.ingest_and_preprocess(
            flights, length=16, min_length=20, max_missing=0.2, workers=2
        )
        self.assertEqual(len(dataset), 1)
        self.assertEqual(dataset.sources, ["ok"])
        self.assertEqual(dataset.x.shape, (1, 16, 2))
        self.assertEqual(dataset.provenance["interpolated"], {"ok": 2})
        dropped = {d["source"] for d in dataset.provenance["dropped"]}
        self.assertEqual(dropped, {"short", "gappy"})
        dataset.validate()

    def test_preprocessing_is_idempotent(self):
        values = np.column_stack(
            [np.sin(np.linspace(0.0, 6.0, 50)), np.full(50, 7.0)]
        )
        values[3, 0] = np.nan
        first = data.ingest_and_preprocess(
            [data.RawFlight(["a", "b"], values, "f", 1)],
            length=32,
            min_length=20,
        )
        again = data.ingest_and_preprocess(
            [data.RawFlight(["a", "b"], first.x[0], "f", 1)],
            length=32,
            min_length=20,
        )
        np.testing.assert_array_equal(again.x, first.x)
        np.testing.assert_array_equal(first.x[0, :, 1], 0.5)

    def test_ingest_everything_dropped(self):
        with self.assertRaises(DataError):
            data.ingest_and_preprocess([_flight(5)], length=16, min_length=20)

    def test_ingest_channel_mismatch(self):
        with self.assertRaises(DataError):
            data.ingest_and_preprocess(
                [_flight(40), _flight(40, channels=3)], length=16, min_length=20
            )

    def test_read_flight_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "flight.csv")
            with open(path, "w", encoding="utf-8") as f:
                f.write("alt,ias\n1,2\n,4\n5,6\n")
            flight = data.read_flight_csv(path, label=3)
        self.assertEqual(flight.channel_names, ["alt", "ias"])
        self.assertEqual(flight.label, 3)
        self.assertTrue(np.isnan(flight.values[1, 0]))

    def test_raw_flight_shape_check(self):
        with self.assertRaises(DataError):
            data.RawFlight(["a", "b"], np.zeros((5, 3)), "bad")


class TestAugmentation(unittest.TestCase):
    """Augmentations and class balancing."""

    def setUp(self):
        rng = np.random.default_rng(0)
        self.x = rng.uniform(0.0, 1.0, (64, 3)).astype(np.float32)

    def test_shapes_and_range(self):
        for name, (augment, intensity) in data.AUGMENTATIONS.items():
            out = augment(self.x, intensity, np.random.default_rng(1))
            self.assertEqual(out.shape, self.x.shape, name)
            self.assertGreaterEqual(out.min(), 0.0, name)
            self.assertLessEqual(out.max(), 1.0, name)

    def test_timewarp_keeps_endpoints(self):
        out = data.timewarp_augment(self.x, 0.03, np.random.default_rng(2))
        np.testing.assert_allclose(out[0], self.x[0], rtol=1e-6)
        np.testing.assert_allclose(out[-1], self.x[-1], rtol=1e-6)

    def test_zero_intensity_timewarp_is_identity(self):
        out = data.timewarp_augment(self.x, 0.0, np.random.default_rng(2))
        np.testing.assert_array_equal(out, self.x)

    def test_smooth_constant_series(self):
        x = np.full((32, 2), 0.25, dtype=np.float32)
        out = data.smooth_augment(x, 0.2, np.random.default_rng(0))
        np.testing.assert_allclose(out, x, rtol=1e-6)

    def test_unknown_augmentation(self):
        with self.assertRaises(DataError):
            data.get_augmentation("mixup")

    def test_balance(self):
        dataset = _small_synth()
        uneven = dataset.subset(
            list(range(20)) + list(range(20, 25)) + list(range(40, 50))
        )
        balanced = data.balance_dataset(uneven, seed=1)
        self.assertEqual(balanced.manifest.class_counts, {0: 20, 1: 20, 2: 20})
        np.testing.assert_array_equal(balanced.x[: len(uneven)], uneven.x)
        self.assertEqual(balanced.provenance["augmented"], 25)

    def test_balance_already_even(self):
        dataset = _small_synth()
        self.assertIs(data.balance_dataset(dataset), dataset)


class TestSplitsAndViews(unittest.TestCase):
    """Stratified splitting and stage views."""

    def test_stratified_counts(self):
        train, test = data.stratified_split(_small_synth(), 0.8, seed=3)
        self.assertEqual(train.manifest.class_counts, {0: 16, 1: 16, 2: 16})
        self.assertEqual(test.manifest.class_counts, {0: 4, 1: 4, 2: 4})
        self.assertFalse(set(train.sources) & set(test.sources))

    def test_split_is_seeded(self):
        dataset = _small_synth()
        a, _ = data.stratified_split(dataset, 0.5, seed=7)
        b, _ = data.stratified_split(dataset, 0.5, seed=7)
        self.assertEqual(a.sources, b.sources)

    def test_split_fraction_range(self):
        with self.assertRaises(DataError):
            data.stratified_split(_small_synth(), 1.0)

    def test_binary_and_fault_views(self):
        dataset = _small_synth()
        binary = data.binary_view(dataset)
        self.assertEqual(binary.manifest.class_counts, {0: 20, 1: 40})
        faults = data.fault_view(dataset)
        self.assertEqual(faults.manifest.class_counts, {0: 20, 1: 20})
        self.assertEqual(dataset.classes, 3)


class TestSynthetic(unittest.TestCase):
    """The synthetic fault generator."""

    def test_shape_and_labels(self):
        dataset = _small_synth(distractors=2)
        self.assertEqual(dataset.x.shape, (60, 64, 6))
        self.assertEqual(dataset.channel_names[-1], "noise1")
        self.assertEqual(dataset.manifest.class_counts, {0: 20, 1: 20, 2: 20})
        dataset.validate()

    def test_annotations(self):
        dataset = _small_synth()
        self.assertIsNone(dataset[0].annotation)
        annotation = dataset[20].annotation
        self.assertEqual(annotation.channels, (0,))
        self.assertEqual((annotation.start, annotation.end), (13, 26))
        self.assertEqual(dataset[40].annotation.channels, (1,))

    def test_fault_raises_window_level(self):
        dataset = _small_synth(classes=2, channels=2, per_class=50)
        annotation = dataset[50].annotation
        window = slice(annotation.start, annotation.end)
        normal = dataset.x[:50, window, 0].mean()
        faulty = dataset.x[50:, window, 0].mean()
        self.assertGreater(faulty, normal + 0.05)

    def test_seeded(self):
        np.testing.assert_array_equal(_small_synth().x, _small_synth().x)
        other = _small_synth(seed=1)
        self.assertFalse(np.array_equal(_small_synth().x, other.x))

    def test_amplitude_below_noise(self):
        with self.assertRaises(DataError):
            data.SynthSpec(noise=0.5, amplitude=1.0)

    def test_explicit_faults(self):
        faults = (data.FaultDefinition((2, 3), (0.5, 0.75), "ramp"),)
        dataset = _small_synth(classes=2, faults=faults)
        self.assertEqual(dataset[20].annotation.channels, (2, 3))
        with self.assertRaises(DataError):
            data.FaultDefinition((0,), (0.6, 0.2))

    def test_fault_channels_must_be_valid(self):
        for channels in ((), (-1,), (0, -2)):
            with self.assertRaises(DataError):
                data.FaultDefinition(channels, (0.2, 0.4))

    def test_overlapping_faults_are_flagged(self):
        faults = (
            data.FaultDefinition((0,), (0.1, 0.5)),
            data.FaultDefinition((0,), (0.4, 0.6)),
        )
        dataset = _small_synth(faults=faults)
        self.assertEqual(dataset.provenance["overlapping_faults"], [[1, 2]])


class TestContainer(fake_filesystem_unittest.TestCase):
    """Dataset container on disk."""

    def setUp(self):
        self.setUpPyfakefs()

    def test_round_trip(self):
        dataset = _small_synth(distractors=1)
        data.save_dataset(dataset, "/data/set")
        loaded = data.load_dataset("/data/set")
        np.testing.assert_array_equal(loaded.x, dataset.x)
        np.testing.assert_array_equal(loaded.y, dataset.y)
        self.assertEqual(loaded.channel_names, dataset.channel_names)
        self.assertEqual(loaded.annotations, dataset.annotations)
        self.assertEqual(loaded.seed, 0)

    def test_incomplete_directory(self):
        self.fs.create_dir("/data/empty")
        with self.assertRaises(DataError):
            data.load_dataset("/data/empty")

    def test_truncated_data_block(self):
        data.save_dataset(_small_synth(), "/data/set")
        with open("/data/set/data.f32", "r+b") as f:
            f.truncate(100)
        with self.assertRaises(DataError):
            data.load_dataset("/data/set")


if __name__ == "__main__":
    unittest.main()
