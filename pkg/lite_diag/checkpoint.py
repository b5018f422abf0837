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

"""Binary model checkpoints.

Layout:
  b"LITN" | uint32 LE version | uint64 LE header length | UTF-8 JSON header
  (sorted keys) | float32 LE tensor blobs in header manifest order.

The header holds the model spec, a manifest of name/shape/offset/kind for
every parameter and buffer, free-form provenance and the seed. Offsets are
relative to the start of the blob section.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import struct
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from lite_diag import utils
from lite_diag.errors import CheckpointError, SpecError
from lite_diag.models import ModelSpec, Network, build_model

logger = logging.getLogger(__name__)

MAGIC = b"LITN"
VERSION = 1
_PREFIX = struct.Struct("<4sIQ")
_BLOB_DTYPE = np.dtype("<f4")


@dataclasses.dataclass
class Checkpoint:
    model: Network
    provenance: dict[str, Any]
    version: int


def checkpoint_bytes(
    model: Network, provenance: Mapping[str, Any] | None = None
) -> bytes:
    params = {name for name, _ in model.named_parameters()}
    manifest, blobs, offset = [], [], 0
    for name, value in model.state_dict().items():
        blob = np.ascontiguousarray(value, dtype=_BLOB_DTYPE).tobytes()
        manifest.append(
            {
                "name": name,
                "shape": list(value.shape),
                "offset": offset,
                "kind": "parameter" if name in params else "buffer",
            }
        )
        blobs.append(blob)
        offset += len(blob)
    header = {
        "spec": utils.to_jsonable(model.spec.to_dict()),
        "tensors": manifest,
        "provenance": utils.to_jsonable(dict(provenance or {})),
        "seed": model.spec.seed,
    }
    encoded = json.dumps(header, sort_keys=True, separators=(",", ":")).encode(
        "utf-8"
    )
    prefix = _PREFIX.pack(MAGIC, VERSION, len(encoded))
    return prefix + encoded + b"".join(blobs)


def save_checkpoint(
    model: Network,
    path: str | Path,
    provenance: Mapping[str, Any] | None = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(checkpoint_bytes(model, provenance))
    logger.info("saved checkpoint %s", path)
    return path


def parse_checkpoint(payload: bytes) -> Checkpoint:
    if len(payload) < _PREFIX.size:
        raise CheckpointError("truncated checkpoint prefix")
    magic, version, header_length = _PREFIX.unpack_from(payload)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    blob_start = _PREFIX.size + header_length
    if len(payload) < blob_start:
        raise CheckpointError("truncated checkpoint header")
    try:
        header = json.loads(payload[_PREFIX.size : blob_start].decode("utf-8"))
        spec = ModelSpec.from_dict(header["spec"])
        manifest = header["tensors"]
    except (UnicodeDecodeError, ValueError, KeyError, TypeError) as exc:
        if isinstance(exc, SpecError):
            raise CheckpointError(f"invalid model spec: {exc}") from exc
        raise CheckpointError(f"malformed checkpoint header: {exc}") from exc

    blobs = memoryview(payload)[blob_start:]
    state = {}
    for entry in manifest:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        end = entry["offset"] + count * _BLOB_DTYPE.itemsize
        if end > len(blobs):
            raise CheckpointError(
                f"tensor {entry['name']} runs past end of file"
            )
        state[entry["name"]] = np.frombuffer(
            blobs, dtype=_BLOB_DTYPE, count=count, offset=entry["offset"]
        ).reshape(shape)

    model = build_model(spec)
    model.load_state_dict(state)
    model.eval()
    return Checkpoint(model, header.get("provenance", {}), version)


def load_checkpoint(path: str | Path) -> Checkpoint:
    with open(path, "rb") as f:
        payload = f.read()
    checkpoint = parse_checkpoint(payload)
    logger.info("loaded checkpoint %s (%s)", path, checkpoint.model.spec.kind)
    return checkpoint
