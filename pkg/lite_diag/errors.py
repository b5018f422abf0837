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

"""Exception hierarchy shared by every lite_diag module."""


class LiteDiagError(Exception):
    """Base class for errors raised by lite_diag."""


class ShapeError(LiteDiagError, ValueError):
    """Operand shapes or extents do not agree."""


class RecordingError(LiteDiagError, RuntimeError):
    """Misuse of a gradient recording (non-scalar loss, double backward)."""


class SpecError(LiteDiagError, ValueError):
    """An architecture spec violates its invariants."""


class ConfigError(LiteDiagError, ValueError):
    """A configuration value is missing, unknown or out of range."""


class NumericalError(LiteDiagError, FloatingPointError):
    """A value that must be finite is NaN or infinite."""


class TrainingDivergedError(NumericalError):
    """A loss or gradient became non-finite during training."""


class DataError(LiteDiagError, ValueError):
    """Input data cannot be turned into valid samples."""


class CheckpointError(LiteDiagError, ValueError):
    """A checkpoint file is malformed or does not match its model."""


class OverrideConflictError(LiteDiagError, ValueError):
    """Two channel-selection overrides disagree about one channel."""
