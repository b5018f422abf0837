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

"""Test cases for the utils module."""

import dataclasses
import enum
import json
import unittest
from pathlib import Path

import numpy as np

from lite_diag import utils


class _Stage(enum.Enum):
    DETECT = "detect"


@dataclasses.dataclass
class _Row:
    name: str
    score: np.float32
    counts: np.ndarray


class TestUtils(unittest.TestCase):
    """Test cases for the utils module."""

    def test_to_jsonable(self):
        """Tests that numpy, enum and dataclass values become primitives."""
        row = _Row("a", np.float32(0.5), np.array([1, 2]))
        self.assertEqual(
            utils.to_jsonable(row),
            {"name": "a", "score": 0.5, "counts": [1, 2]},
        )
        self.assertEqual(utils.to_jsonable(_Stage.DETECT), "detect")
        self.assertEqual(utils.to_jsonable(Path("runs/a")), "runs/a")
        self.assertEqual(utils.to_jsonable({1: {3, 2}}), {"1": [2, 3]})
        self.assertIsNone(utils.to_jsonable(float("nan")))
        self.assertIs(utils.to_jsonable(np.bool_(True)), True)
        json.dumps(utils.to_jsonable({"x": np.arange(3.0)}))

    def test_percentile_p95(self):
        self.assertAlmostEqual(utils.percentile_p95(range(101)), 95.0)
        self.assertEqual(utils.percentile_p95([2.0]), 2.0)

    def test_make_rng_is_seeded(self):
        a = utils.make_rng(3).random(4)
        b = utils.make_rng(3).random(4)
        np.testing.assert_array_equal(a, b)

    def test_ngafid_overrides_file(self):
        path = utils.get_ngafid_overrides_filepath()
        raw = json.loads(path.read_text(encoding="utf-8"))
        channels = sorted(o["channel"] for o in raw["overrides"])
        self.assertEqual(channels, list(range(23)))


if __name__ == "__main__":
    unittest.main()
