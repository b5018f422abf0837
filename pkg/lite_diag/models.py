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

"""Inception-family networks, SE gates, the attention encoder and counters.

Networks consume channel-major tensors `(B, C, T)`; `Network.predict_logits`
and `Network.predict_proba` accept plain `(B, T, C)` arrays.
"""

from __future__ import annotations

import contextlib
import dataclasses
import logging
import math
from typing import Any, Iterator

import numpy as np

from lite_diag import tensor_core as tc
from lite_diag.errors import CheckpointError, ShapeError, SpecError
from lite_diag.tensor_core import Tensor

logger = logging.getLogger(__name__)

# branch preset -> (conv kernel sizes, max-pool branch)
BRANCH_PRESETS: dict[str, tuple[tuple[int, ...], bool]] = {
    "1+0": ((3,), False),
    "1+1": ((3,), True),
    "2+1": ((3, 5), True),
    "3+1": ((3, 5, 7), True),
}


# Specs


@dataclasses.dataclass(frozen=True)
class InceptionModuleSpec:
    conv_kernels: tuple[int, ...] = (3,)
    use_maxpool_branch: bool = True
    filters: int = 128
    bottleneck: int = 64
    in_channels: int = 15

    def __post_init__(self):
        object.__setattr__(self, "conv_kernels", tuple(self.conv_kernels))
        if len(self.conv_kernels) > 3:
            raise SpecError(
                f"at most 3 conv branches, got {len(self.conv_kernels)}"
            )
        if any(k < 1 for k in self.conv_kernels):
            raise SpecError(f"kernel sizes must be >= 1: {self.conv_kernels}")
        if self.branch_count < 1:
            raise SpecError("an Inception module needs at least one branch")
        if min(self.filters, self.bottleneck, self.in_channels) < 1:
            raise SpecError("filters, bottleneck and in_channels must be >= 1")

    @property
    def branch_count(self) -> int:
        return len(self.conv_kernels) + int(self.use_maxpool_branch)

    @property
    def out_channels(self) -> int:
        return self.branch_count * self.filters

    @property
    def preset(self) -> str:
        return f"{len(self.conv_kernels)}+{int(self.use_maxpool_branch)}"


def module_spec_for(
    branches: str,
    in_channels: int,
    filters: int = 128,
    bottleneck: int = 64,
    kernel: int | None = None,
) -> InceptionModuleSpec:
    """Module template for a branch preset such as "1+1" or "3+1".

    `kernel` replaces the smallest kernel (kernel-size sensitivity runs).
    """
    if branches not in BRANCH_PRESETS:
        raise SpecError(
            f"unknown branch preset {branches!r}; "
            f"expected one of {sorted(BRANCH_PRESETS)}"
        )
    kernels, pool = BRANCH_PRESETS[branches]
    if kernel is not None:
        kernels = (kernel,) + kernels[1:]
    return InceptionModuleSpec(kernels, pool, filters, bottleneck, in_channels)


@dataclasses.dataclass(frozen=True)
class BackboneSpec:
    module: InceptionModuleSpec = InceptionModuleSpec()
    depth: int = 6
    residual_period: int = 3
    classes: int = 19
    use_residual: bool = True

    def __post_init__(self):
        if self.depth < 1:
            raise SpecError(f"depth must be >= 1, got {self.depth}")
        if self.residual_period < 1:
            raise SpecError("residual_period must be >= 1")
        if self.classes < 1:
            raise SpecError(f"classes must be >= 1, got {self.classes}")

    @property
    def input_channels(self) -> int:
        return self.module.in_channels

    def module_specs(self) -> list[InceptionModuleSpec]:
        first = self.module
        rest = dataclasses.replace(first, in_channels=first.out_channels)
        return [first] + [rest] * (self.depth - 1)

    def junctions(self) -> list[int]:
        """1-based module indices followed by a residual junction."""
        if not self.use_residual:
            return []
        return [
            i
            for i in range(1, self.depth + 1)
            if i % self.residual_period == 0
        ]


@dataclasses.dataclass(frozen=True)
class SEGateSpec:
    channels: int
    reduction: int = 4
    zero_init_output: bool = True

    def __post_init__(self):
        if self.channels < 1 or self.reduction < 1:
            raise SpecError("SE gate needs channels >= 1 and reduction >= 1")

    @property
    def hidden(self) -> int:
        return max(1, math.ceil(self.channels / self.reduction))


@dataclasses.dataclass(frozen=True)
class EncoderSpec:
    d_model: int = 128
    heads: int = 4
    layers: int = 2
    ff_width: int = 256
    dropout: float = 0.1
    attn_downsample: int = 8

    def __post_init__(self):
        if self.heads < 1 or self.d_model % self.heads:
            raise SpecError(
                f"d_model {self.d_model} is not divisible by heads {self.heads}"
            )
        if self.layers < 1 or self.ff_width < 1 or self.attn_downsample < 1:
            raise SpecError("layers, ff_width and attn_downsample must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise SpecError(f"dropout must lie in [0, 1), got {self.dropout}")


@dataclasses.dataclass(frozen=True)
class ModelSpec:
    """Declarative description from which networks and counters are built."""

    kind: str = "backbone"
    backbone: BackboneSpec = BackboneSpec()
    encoder: EncoderSpec | None = None
    input_gate: bool = False
    se_reduction: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("backbone", "hybrid"):
            raise SpecError(f"unknown model kind {self.kind!r}")
        if self.kind == "hybrid" and self.encoder is None:
            raise SpecError("a hybrid model needs an encoder spec")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> ModelSpec:
        backbone = dict(raw["backbone"])
        backbone["module"] = InceptionModuleSpec(**backbone["module"])
        encoder = raw.get("encoder")
        return cls(
            kind=raw["kind"],
            backbone=BackboneSpec(**backbone),
            encoder=EncoderSpec(**encoder) if encoder else None,
            input_gate=raw.get("input_gate", False),
            se_reduction=raw.get("se_reduction", 4),
            seed=raw.get("seed", 0),
        )


# Module plumbing


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int):
    bound = math.sqrt(6.0 / fan_in)
    return tc.parameter(rng.uniform(-bound, bound, size=shape))


class Module:
    """Base class: parameter discovery, mode switching and FLOP rows."""

    training = True

    def __call__(self, x: Tensor) -> Tensor:
        return self.forward(x)

    def forward(self, x: Tensor) -> Tensor:
        raise NotImplementedError

    def _items(self) -> Iterator[tuple[str, Any]]:
        for name, value in vars(self).items():
            if name.startswith("_"):
                continue
            if isinstance(value, list):
                for i, item in enumerate(value):
                    yield f"{name}.{i}", item
            else:
                yield name, value

    def named_modules(self, prefix: str = "") -> Iterator[tuple[str, Module]]:
        yield prefix.rstrip("."), self
        for name, value in self._items():
            if isinstance(value, Module):
                yield from value.named_modules(f"{prefix}{name}.")

    def named_parameters(
        self, prefix: str = ""
    ) -> Iterator[tuple[str, Tensor]]:
        for name, value in self._items():
            if isinstance(value, Tensor) and value.requires_grad:
                yield f"{prefix}{name}", value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{name}.")

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def named_buffers(
        self, prefix: str = ""
    ) -> Iterator[tuple[str, tc.RunningStats, str]]:
        for name, value in self._items():
            if isinstance(value, tc.RunningStats):
                yield f"{prefix}{name}.mean", value, "mean"
                yield f"{prefix}{name}.var", value, "var"
            elif isinstance(value, Module):
                yield from value.named_buffers(f"{prefix}{name}.")

    def buffers(self) -> list[tuple[str, np.ndarray]]:
        return [(n, getattr(s, a)) for n, s, a in self.named_buffers()]

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {name: p.data.copy() for name, p in self.named_parameters()}
        for name, stats, attr in self.named_buffers():
            state[name] = getattr(stats, attr).copy()
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        buffers = {name: (s, a) for name, s, a in self.named_buffers()}
        expected = set(params) | set(buffers)
        if set(state) != expected:
            missing = sorted(expected - set(state))
            extra = sorted(set(state) - expected)
            raise CheckpointError(
                f"state mismatch; missing {missing}, unexpected {extra}"
            )
        for name, value in state.items():
            if name in params:
                target = params[name]
                if target.shape != value.shape:
                    raise CheckpointError(
                        f"{name}: shape {value.shape} != {target.shape}"
                    )
                target.data = np.array(value, dtype=target.dtype)
            else:
                stats, attr = buffers[name]
                current = getattr(stats, attr)
                if current.shape != value.shape:
                    raise CheckpointError(
                        f"{name}: shape {value.shape} != {current.shape}"
                    )
                setattr(stats, attr, np.array(value, dtype=current.dtype))

    def train(self, mode: bool = True) -> Module:
        for _, module in self.named_modules():
            module.training = mode
        return self

    def eval(self) -> Module:
        return self.train(False)

    @contextlib.contextmanager
    def evaluation(self) -> Iterator[None]:
        """Eval mode for the block; restores the previous mode."""
        was_training = self.training
        self.eval()
        try:
            yield
        finally:
            self.train(was_training)

    def set_dropout_rng(self, rng: np.random.Generator) -> None:
        for _, module in self.named_modules():
            if hasattr(module, "_rng"):
                module._rng = rng

    def flop_rows(self, prefix: str, length: int) -> tuple[list, int]:
        """(name, FLOPs) rows for an input of temporal `length`."""
        return [], length


class Conv1d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel: int,
        rng: np.random.Generator,
        stride: int = 1,
        bias: bool = False,
    ):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        self.weight = _uniform(
            rng, (out_channels, in_channels, kernel), in_channels * kernel
        )
        self.bias = tc.parameter(np.zeros(out_channels)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return tc.conv1d(x, self.weight, self.bias, stride=self.stride)

    def flop_rows(self, prefix, length):
        out_len = -(-length // self.stride)
        flops = 2 * out_len * self.in_channels * self.out_channels * self.kernel
        return [(prefix, flops)], out_len


class BatchNorm1d(Module):
    def __init__(self, channels: int, eps: float = 1e-5):
        self.channels = channels
        self.eps = eps
        self.gamma = tc.parameter(np.ones(channels))
        self.beta = tc.parameter(np.zeros(channels))
        self.stats = tc.RunningStats.initial(channels)

    def forward(self, x: Tensor) -> Tensor:
        return tc.batchnorm1d(
            x, self.gamma, self.beta, self.stats, self.training, self.eps
        )

    def flop_rows(self, prefix, length):
        return [(prefix, self.channels * length)], length


class LayerNorm(Module):
    def __init__(self, features: int, eps: float = 1e-5):
        self.features = features
        self.eps = eps
        self.gamma = tc.parameter(np.ones(features))
        self.beta = tc.parameter(np.zeros(features))

    def forward(self, x: Tensor) -> Tensor:
        return tc.layer_norm(x, self.gamma, self.beta, self.eps)

    def flop_rows(self, prefix, length):
        return [(prefix, self.features * length)], length


class Dense(Module):
    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        zero_init: bool = False,
    ):
        self.in_features = in_features
        self.out_features = out_features
        if zero_init:
            self.weight = tc.parameter(np.zeros((out_features, in_features)))
        else:
            self.weight = _uniform(
                rng, (out_features, in_features), in_features
            )
        self.bias = tc.parameter(np.zeros(out_features))

    def forward(self, x: Tensor) -> Tensor:
        return tc.dense(x, self.weight, self.bias)

    def flop_rows(self, prefix, length):
        """`length` counts positions the layer is applied at (1 for heads)."""
        flops = 2 * self.in_features * self.out_features * length
        return [(prefix, flops)], length


class MaxPool1d(Module):
    def __init__(self, channels: int, kernel: int, stride: int = 1):
        self.channels = channels
        self.kernel = kernel
        self.stride = stride

    def forward(self, x: Tensor) -> Tensor:
        return tc.maxpool1d(x, self.kernel, self.stride)

    def flop_rows(self, prefix, length):
        out_len = -(-length // self.stride)
        return [(prefix, self.channels * out_len)], out_len


# Inception family


def analytic_module_weights(spec: InceptionModuleSpec) -> int:
    """Bottleneck + branch + pool-projection weights of one module.

    D_in*D_b + D_b*D_f*sum(k) + D_in*D_f; the bottleneck term vanishes
    without conv branches and the projection term without the pool branch.
    """
    din, db, df = spec.in_channels, spec.bottleneck, spec.filters
    total = db * df * sum(spec.conv_kernels)
    if spec.conv_kernels:
        total += din * db
    if spec.use_maxpool_branch:
        total += din * df
    return total


class InceptionModule(Module):
    """Parallel conv branches behind a shared bottleneck plus a pool branch.

    Returns the batch-normalized concatenation; the caller applies ReLU so a
    residual can be added first.
    """

    def __init__(self, spec: InceptionModuleSpec, rng: np.random.Generator):
        self.spec = spec
        din, db, df = spec.in_channels, spec.bottleneck, spec.filters
        self.bottleneck = (
            Conv1d(din, db, 1, rng) if spec.conv_kernels else None
        )
        self.branches = [Conv1d(db, df, k, rng) for k in spec.conv_kernels]
        if spec.use_maxpool_branch:
            self.pool = MaxPool1d(din, 3, 1)
            self.pool_proj = Conv1d(din, df, 1, rng)
        else:
            self.pool = None
            self.pool_proj = None
        self.bn = BatchNorm1d(spec.out_channels)

    def forward(self, x: Tensor) -> Tensor:
        outputs = []
        if self.bottleneck is not None:
            squeezed = self.bottleneck(x)
            outputs.extend(branch(squeezed) for branch in self.branches)
        if self.pool is not None:
            outputs.append(self.pool_proj(self.pool(x)))
        h = tc.concat(outputs, axis=1) if len(outputs) > 1 else outputs[0]
        return self.bn(h)

    def enumerated_weights(self) -> int:
        convs = list(self.branches)
        if self.bottleneck is not None:
            convs.append(self.bottleneck)
        if self.pool_proj is not None:
            convs.append(self.pool_proj)
        return sum(c.weight.size for c in convs)

    def flop_rows(self, prefix, length):
        rows = []
        if self.bottleneck is not None:
            rows += self.bottleneck.flop_rows(f"{prefix}.bottleneck", length)[0]
            for i, branch in enumerate(self.branches):
                rows += branch.flop_rows(f"{prefix}.branches.{i}", length)[0]
        if self.pool is not None:
            rows += self.pool.flop_rows(f"{prefix}.pool", length)[0]
            rows += self.pool_proj.flop_rows(f"{prefix}.pool_proj", length)[0]
        rows += self.bn.flop_rows(f"{prefix}.bn", length)[0]
        return rows, length


class Shortcut(Module):
    """Residual path: identity, or 1x1 conv + BN when channels differ."""

    def __init__(self, in_channels: int, out_channels: int, rng):
        if in_channels == out_channels:
            self.conv = None
            self.bn = None
        else:
            self.conv = Conv1d(in_channels, out_channels, 1, rng)
            self.bn = BatchNorm1d(out_channels)

    def forward(self, x: Tensor) -> Tensor:
        if self.conv is None:
            return x
        return self.bn(self.conv(x))

    def flop_rows(self, prefix, length):
        if self.conv is None:
            return [], length
        rows = self.conv.flop_rows(f"{prefix}.conv", length)[0]
        rows += self.bn.flop_rows(f"{prefix}.bn", length)[0]
        return rows, length


class SEGate(Module):
    """Squeeze-and-excitation gate with per-channel weights in (0.5, 1.5)."""

    def __init__(self, spec: SEGateSpec, rng: np.random.Generator):
        self.spec = spec
        self.fc1 = Dense(spec.channels, spec.hidden, rng)
        self.fc2 = Dense(
            spec.hidden, spec.channels, rng, zero_init=spec.zero_init_output
        )
        self._last_weights: np.ndarray | None = None

    @property
    def last_weights(self) -> np.ndarray | None:
        """ŝ of the latest forward pass, shape (B, M)."""
        return self._last_weights

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[1] != self.spec.channels:
            raise ShapeError(
                f"gate expects {self.spec.channels} channels, got {x.shape[1]}"
            )
        z = tc.gap(x)
        s = tc.sigmoid(self.fc2(tc.relu(self.fc1(z))))
        weights = s + 0.5
        self._last_weights = weights.data.copy()
        return x * weights.reshape(x.shape[0], x.shape[1], 1)

    def flop_rows(self, prefix, length):
        m, h = self.spec.channels, self.spec.hidden
        rows = [
            (f"{prefix}.squeeze", m),
            (f"{prefix}.fc1", 2 * m * h),
            (f"{prefix}.relu", h),
            (f"{prefix}.fc2", 2 * h * m),
            (f"{prefix}.sigmoid", m),
            (f"{prefix}.scale", m * length),
        ]
        return rows, length


class InceptionStack(Module):
    """Stacked modules with residual junctions every `residual_period`."""

    def __init__(self, spec: BackboneSpec, rng: np.random.Generator):
        self.spec = spec
        specs = spec.module_specs()
        self.blocks = [InceptionModule(s, rng) for s in specs]
        self.shortcuts = []
        for end in spec.junctions():
            start = end - spec.residual_period
            cin = specs[start].in_channels
            self.shortcuts.append(
                Shortcut(cin, specs[end - 1].out_channels, rng)
            )
        self._last_output: Tensor | None = None

    @property
    def out_channels(self) -> int:
        return self.blocks[-1].spec.out_channels

    def forward(self, x: Tensor) -> Tensor:
        junctions = set(self.spec.junctions())
        residual_input = x
        shortcut = 0
        h = x
        for index, block in enumerate(self.blocks, start=1):
            h = block(h)
            if index in junctions:
                h = h + self.shortcuts[shortcut](residual_input)
                shortcut += 1
            h = tc.relu(h)
            if index % self.spec.residual_period == 0:
                residual_input = h
        self._last_output = h.retain_grad()
        return h

    def flop_rows(self, prefix, length):
        rows = []
        junctions = self.spec.junctions()
        for index, block in enumerate(self.blocks, start=1):
            name = f"{prefix}blocks.{index - 1}"
            rows += block.flop_rows(name, length)[0]
            if index in junctions:
                j = junctions.index(index)
                rows += self.shortcuts[j].flop_rows(
                    f"{prefix}shortcuts.{j}", length
                )[0]
                rows.append(
                    (f"{name}.residual_add", block.spec.out_channels * length)
                )
            rows.append((f"{name}.relu", block.spec.out_channels * length))
        return rows, length


def positional_encoding(length: int, d_model: int) -> np.ndarray:
    position = np.arange(length)[:, None]
    rate = np.exp(-math.log(10000.0) * np.arange(0, d_model, 2) / d_model)
    pe = np.zeros((length, d_model))
    pe[:, 0::2] = np.sin(position * rate)
    pe[:, 1::2] = np.cos(position * rate)[:, : d_model // 2]
    return pe


class MultiHeadSelfAttention(Module):
    def __init__(self, spec: EncoderSpec, rng: np.random.Generator):
        d = spec.d_model
        self.heads = spec.heads
        self.d_model = d
        self.rate = spec.dropout
        self.query = Dense(d, d, rng)
        self.key = Dense(d, d, rng)
        self.value = Dense(d, d, rng)
        self.out = Dense(d, d, rng)
        self._rng = rng
        self._last_attention: np.ndarray | None = None

    @property
    def last_attention(self) -> np.ndarray | None:
        """(B, heads, T, T) weights of the latest forward pass."""
        return self._last_attention

    def _split(self, x: Tensor, batch: int, length: int) -> Tensor:
        head_dim = self.d_model // self.heads
        return x.reshape(batch, length, self.heads, head_dim).transpose(
            0, 2, 1, 3
        )

    def forward(self, x: Tensor) -> Tensor:
        batch, length, _ = x.shape
        q = self._split(self.query(x), batch, length)
        k = self._split(self.key(x), batch, length)
        v = self._split(self.value(x), batch, length)
        scale = 1.0 / math.sqrt(self.d_model // self.heads)
        scores = tc.matmul(q, k.transpose(0, 1, 3, 2)) * scale
        attention = tc.softmax_t(scores, 1.0, axis=-1)
        self._last_attention = attention.data
        attention = tc.dropout(attention, self.rate, self._rng, self.training)
        context = tc.matmul(attention, v).transpose(0, 2, 1, 3)
        return self.out(context.reshape(batch, length, self.d_model))

    def flop_rows(self, prefix, length):
        d = self.d_model
        rows = [
            (f"{prefix}.qkv", 3 * 2 * d * d * length),
            (f"{prefix}.scores", 2 * length * length * d),
            (f"{prefix}.softmax", self.heads * length * length),
            (f"{prefix}.context", 2 * length * length * d),
            (f"{prefix}.out", 2 * d * d * length),
        ]
        return rows, length


class EncoderLayer(Module):
    """Post-norm block: x + attention -> norm, x + feed-forward -> norm."""

    def __init__(self, spec: EncoderSpec, rng: np.random.Generator):
        self.rate = spec.dropout
        self.attention = MultiHeadSelfAttention(spec, rng)
        self.norm1 = LayerNorm(spec.d_model)
        self.ff1 = Dense(spec.d_model, spec.ff_width, rng)
        self.ff2 = Dense(spec.ff_width, spec.d_model, rng)
        self.norm2 = LayerNorm(spec.d_model)
        self._rng = rng

    def forward(self, x: Tensor) -> Tensor:
        attended = tc.dropout(
            self.attention(x), self.rate, self._rng, self.training
        )
        x = self.norm1(x + attended)
        fed = self.ff2(tc.relu(self.ff1(x)))
        fed = tc.dropout(fed, self.rate, self._rng, self.training)
        return self.norm2(x + fed)

    def flop_rows(self, prefix, length):
        rows = self.attention.flop_rows(f"{prefix}.attention", length)[0]
        rows += self.norm1.flop_rows(f"{prefix}.norm1", length)[0]
        rows += self.ff1.flop_rows(f"{prefix}.ff1", length)[0]
        rows.append((f"{prefix}.ff_relu", self.ff1.out_features * length))
        rows += self.ff2.flop_rows(f"{prefix}.ff2", length)[0]
        rows += self.norm2.flop_rows(f"{prefix}.norm2", length)[0]
        return rows, length


class TransformerEncoder(Module):
    """Optional strided max-pool, projection, positional encoding, layers."""

    def __init__(
        self, spec: EncoderSpec, in_features: int, rng: np.random.Generator
    ):
        self.spec = spec
        self.in_features = in_features
        self.pool = (
            MaxPool1d(in_features, spec.attn_downsample, spec.attn_downsample)
            if spec.attn_downsample > 1
            else None
        )
        self.projection = Dense(in_features, spec.d_model, rng)
        self.layers = [EncoderLayer(spec, rng) for _ in range(spec.layers)]

    def forward(self, x: Tensor) -> Tensor:
        """`(B, F, T)` feature map -> `(B, ceil(T / downsample), d_model)`."""
        if self.pool is not None:
            x = self.pool(x)
        sequence = self.projection(x.transpose(0, 2, 1))
        length = sequence.shape[1]
        pe = positional_encoding(length, self.spec.d_model)
        h = sequence + pe.astype(sequence.dtype)
        for layer in self.layers:
            h = layer(h)
        return h

    def flop_rows(self, prefix, length):
        rows = []
        if self.pool is not None:
            pool_rows, length = self.pool.flop_rows(f"{prefix}.pool", length)
            rows += pool_rows
        rows += self.projection.flop_rows(f"{prefix}.projection", length)[0]
        rows.append((f"{prefix}.positional", self.spec.d_model * length))
        for i, layer in enumerate(self.layers):
            rows += layer.flop_rows(f"{prefix}.layers.{i}", length)[0]
        return rows, length


class Network(Module):
    """Shared surface of the stage networks."""

    spec: ModelSpec
    input_gate: SEGate | None
    stack: InceptionStack

    @property
    def input_channels(self) -> int:
        return self.spec.backbone.input_channels

    @property
    def classes(self) -> int:
        raise NotImplementedError

    @property
    def last_features(self) -> Tensor | None:
        """Post-ReLU output of the last Inception module (Grad-CAM maps)."""
        return self.stack._last_output

    def _gate(self, x: Tensor) -> Tensor:
        if x.ndim != 3 or x.shape[1] != self.input_channels:
            raise ShapeError(
                f"expected (B, {self.input_channels}, T) input, got {x.shape}"
            )
        return self.input_gate(x) if self.input_gate is not None else x

    @contextlib.contextmanager
    def inference(self) -> Iterator[None]:
        """Eval mode without recording; restores the previous mode."""
        with self.evaluation(), tc.no_grad():
            yield

    def predict_logits(self, x: np.ndarray, batch_size: int = 64) -> np.ndarray:
        """Logits for a `(B, T, C)` array."""
        x = np.asarray(x)
        if x.ndim == 2:
            x = x[None]
        outputs = []
        with self.inference():
            for start in range(0, len(x), batch_size):
                chunk = tc.to_channel_major(x[start : start + batch_size])
                outputs.append(self.forward(Tensor(chunk)).data)
        return np.concatenate(outputs, axis=0)

    def predict_proba(self, x: np.ndarray, batch_size: int = 64) -> np.ndarray:
        logits = self.predict_logits(x, batch_size)
        with tc.no_grad():
            return tc.softmax_t(Tensor(logits), 1.0).data


class LiteInceptionNet(Network):
    """Optional input SE gate, Inception stack, GAP and a dense head."""

    def __init__(self, spec: ModelSpec):
        rng = np.random.default_rng(spec.seed)
        self.spec = spec
        backbone = spec.backbone
        self.input_gate = (
            SEGate(SEGateSpec(backbone.input_channels, spec.se_reduction), rng)
            if spec.input_gate
            else None
        )
        self.stack = InceptionStack(backbone, rng)
        self.head = Dense(self.stack.out_channels, backbone.classes, rng)

    @property
    def classes(self) -> int:
        return self.spec.backbone.classes

    def forward(self, x: Tensor) -> Tensor:
        return self.head(tc.gap(self.stack(self._gate(x))))

    def flop_rows(self, prefix, length):
        rows = []
        if self.input_gate is not None:
            rows += self.input_gate.flop_rows("input_gate", length)[0]
        rows += self.stack.flop_rows("stack.", length)[0]
        rows.append(("gap", self.stack.out_channels))
        rows += self.head.flop_rows("head", 1)[0]
        return rows, length


class HybridDetector(Network):
    """Stage-1 network: Inception stack -> attention encoder -> GAP -> dense."""

    def __init__(self, spec: ModelSpec):
        rng = np.random.default_rng(spec.seed)
        self.spec = spec
        backbone = spec.backbone
        self.input_gate = (
            SEGate(SEGateSpec(backbone.input_channels, spec.se_reduction), rng)
            if spec.input_gate
            else None
        )
        self.stack = InceptionStack(backbone, rng)
        self.encoder = TransformerEncoder(
            spec.encoder, self.stack.out_channels, rng
        )
        self.head = Dense(spec.encoder.d_model, backbone.classes, rng)

    @property
    def classes(self) -> int:
        return self.spec.backbone.classes

    def forward(self, x: Tensor) -> Tensor:
        sequence = self.encoder(self.stack(self._gate(x)))
        return self.head(tc.gap(sequence, axis=1))

    def flop_rows(self, prefix, length):
        rows = []
        if self.input_gate is not None:
            rows += self.input_gate.flop_rows("input_gate", length)[0]
        rows += self.stack.flop_rows("stack.", length)[0]
        encoder_rows, _ = self.encoder.flop_rows("encoder", length)
        rows += encoder_rows
        rows.append(("gap", self.spec.encoder.d_model))
        rows += self.head.flop_rows("head", 1)[0]
        return rows, length


# Builders


def build_inception_module(
    spec: InceptionModuleSpec, seed: int = 0
) -> InceptionModule:
    return InceptionModule(spec, np.random.default_rng(seed))


def build_backbone(
    spec: BackboneSpec, seed: int = 0, input_gate: bool = False
) -> LiteInceptionNet:
    return LiteInceptionNet(
        ModelSpec(
            kind="backbone", backbone=spec, input_gate=input_gate, seed=seed
        )
    )


def build_se_gate(spec: SEGateSpec, seed: int = 0) -> SEGate:
    return SEGate(spec, np.random.default_rng(seed))


def build_transformer_encoder(
    spec: EncoderSpec, in_features: int, seed: int = 0
) -> TransformerEncoder:
    return TransformerEncoder(spec, in_features, np.random.default_rng(seed))


def build_model(spec: ModelSpec) -> Network:
    if spec.kind == "hybrid":
        return HybridDetector(spec)
    return LiteInceptionNet(spec)


# Counters


@dataclasses.dataclass(frozen=True)
class LayerCount:
    name: str
    category: str
    count: int


@dataclasses.dataclass(frozen=True)
class ModuleWeightCheck:
    """Enumerated vs. analytic bottleneck/branch/projection weights."""

    name: str
    preset: str
    enumerated: int
    analytic: int


@dataclasses.dataclass(frozen=True)
class ParamReport:
    layers: tuple[LayerCount, ...]
    by_category: dict[str, int]
    total: int
    modules: tuple[ModuleWeightCheck, ...]


def _category(module: Module, attr: str) -> str:
    if attr == "bias":
        return "bias"
    if isinstance(module, BatchNorm1d):
        return "bn_affine"
    if isinstance(module, LayerNorm):
        return "ln_affine"
    if isinstance(module, Conv1d):
        return "conv_weight"
    return "dense_weight"


def count_params(model: Module) -> ParamReport:
    layers = []
    checks = []
    for path, module in model.named_modules():
        for attr, value in vars(module).items():
            if attr.startswith("_"):
                continue
            if isinstance(value, Tensor) and value.requires_grad:
                name = f"{path}.{attr}" if path else attr
                layers.append(
                    LayerCount(name, _category(module, attr), value.size)
                )
        if isinstance(module, InceptionModule):
            checks.append(
                ModuleWeightCheck(
                    path,
                    module.spec.preset,
                    module.enumerated_weights(),
                    analytic_module_weights(module.spec),
                )
            )
    by_category: dict[str, int] = {}
    for layer in layers:
        by_category[layer.category] = (
            by_category.get(layer.category, 0) + layer.count
        )
    return ParamReport(
        tuple(layers),
        dict(sorted(by_category.items())),
        sum(layer.count for layer in layers),
        tuple(checks),
    )


@dataclasses.dataclass(frozen=True)
class FlopReport:
    length: int
    layers: tuple[tuple[str, int], ...]
    total: int


def count_flops(model: Module, length: int) -> FlopReport:
    """FLOPs for one sample of temporal `length`.

    One multiply-accumulate is 2 FLOPs; pooling, activations, normalization
    and residual additions count 1 FLOP per output element.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    rows, _ = model.flop_rows("", length)
    rows = tuple((name, int(flops)) for name, flops in rows)
    return FlopReport(length, rows, sum(f for _, f in rows))


def receptive_field(kernel: int, layers: int) -> int:
    """Input span of `layers` stacked stride-1 convolutions of size `kernel`."""
    if kernel < 1 or layers < 1:
        raise ValueError("kernel and layers must be >= 1")
    return 1 + layers * (kernel - 1)
