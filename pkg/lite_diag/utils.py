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
"""Common utilities used across lite_diag."""
from __future__ import annotations

import dataclasses
import enum
import importlib.resources
import logging
import math
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import numpy as np

logger = logging.getLogger(__name__)

_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# Package data: channel-selection override set for the NGAFID channel layout.
_NGAFID_OVERRIDES_FILENAME = "ngafid_overrides.json"


def configure_logging(level: int | str = logging.INFO) -> None:
    """Installs the root handler once; later calls only adjust the level."""
    logging.basicConfig(level=level, format=_LOG_FORMAT)
    logging.getLogger().setLevel(level)


def make_rng(seed: int | None) -> np.random.Generator:
    return np.random.default_rng(seed)


def _is_sequence(value: Any) -> bool:
    """Lists, tuples and sets; strings and mappings are scalars here."""
    if isinstance(value, (str, bytes, bytearray, Mapping)):
        return False
    return isinstance(value, (list, tuple, set, frozenset))


def to_jsonable(value: Any) -> Any:
    """Converts numpy / dataclass / enum values to JSON-serializable primitives.

    Special cases:
      - numpy scalars -> Python int/float/bool
      - ndarrays -> nested lists
      - dataclasses -> dicts of their fields (recursively converted)
      - enums -> their value
      - Path -> str
      - non-finite floats -> None
    """
    if value is None or isinstance(value, (bool, str)):
        return value

    if isinstance(value, enum.Enum):
        return to_jsonable(value.value)

    if isinstance(value, np.generic):
        value = value.item()

    if isinstance(value, float):
        return value if math.isfinite(value) else None

    if isinstance(value, int):
        return value

    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]

    if isinstance(value, Path):
        return str(value)

    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {
            field.name: to_jsonable(getattr(value, field.name))
            for field in dataclasses.fields(value)
        }

    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}

    if _is_sequence(value):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [to_jsonable(v) for v in items]

    try:
        logger.debug("to_jsonable falling back to str for %s", type(value))
    except Exception:
        pass
    return str(value)


def percentile_p95(values: Any) -> float:
    return float(np.percentile(np.asarray(values, dtype=np.float64), 95))


def get_ngafid_overrides_filepath():
    package_root = importlib.resources.files("lite_diag")
    return package_root.joinpath(_NGAFID_OVERRIDES_FILENAME)
