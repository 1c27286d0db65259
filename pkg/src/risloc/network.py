"""Residual convolution regression network and its plain-CNN counterpart.

Architecture: stem block (7x7 conv, BN, ReLU, 3x3 maxpool) -> residual (or
plain) convolution blocks with doubling channel widths -> global average
pool -> fully connected 3-way regression head. Downsampling stops once the
feature map reaches 2x2.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .layers import (BatchNorm2d, Conv2d, Dense, GlobalAvgPool, Layer,
                     MaxPool2d, ReLU, Sequential, ShapeError, _out_size)


class CheckpointError(ValueError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointPayloadError(CheckpointError):
    pass


CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class NetworkSpec:
    variant: str = "rcnr"            # "rcnr" | "cnn"
    block_count: int = 4
    base_channels: int = 16
    channel_multipliers: tuple = (1, 2, 4, 8)
    input_shape: tuple = (2, 16, 16)
    output_dim: int = 3

    def __post_init__(self):
        if self.variant not in ("rcnr", "cnn"):
            raise ValueError(f"unknown network variant {self.variant!r}")
        if self.block_count < 1:
            raise ValueError("block_count must be >= 1")
        if len(self.channel_multipliers) < self.block_count:
            raise ValueError("need one channel multiplier per block")
        if self.output_dim != 3:
            raise ValueError("output dimension is fixed at 3")


class NCBlock(Layer):
    """Stem: 7x7 stride-2 conv -> BN -> ReLU -> 3x3 stride-2 maxpool."""

    def __init__(self, in_channels, out_channels, rng, dtype=np.float32):
        self.body = Sequential(
            Conv2d(in_channels, out_channels, 7, stride=2, padding=3,
                   rng=rng, dtype=dtype),
            BatchNorm2d(out_channels, dtype=dtype),
            ReLU(),
            MaxPool2d(3, stride=2, padding=1),
        )

    def parameters(self):
        return self.body.parameters()

    def forward(self, x, train=True):
        return self.body.forward(x, train=train)

    def backward(self, grad):
        return self.body.backward(grad)


class RCBlock(Layer):
    """Residual unit: two 3x3 convs with BN; 1x1 projection shortcut when
    the shape changes; ReLU after the skip addition."""

    def __init__(self, in_channels, out_channels, stride, rng, dtype=np.float32):
        self.conv1 = Conv2d(in_channels, out_channels, 3, stride=stride,
                            padding=1, rng=rng, dtype=dtype)
        self.bn1 = BatchNorm2d(out_channels, dtype=dtype)
        self.relu1 = ReLU()
        self.conv2 = Conv2d(out_channels, out_channels, 3, stride=1,
                            padding=1, rng=rng, dtype=dtype)
        self.bn2 = BatchNorm2d(out_channels, dtype=dtype)
        if stride != 1 or in_channels != out_channels:
            self.shortcut = Conv2d(in_channels, out_channels, 1, stride=stride,
                                   padding=0, rng=rng, dtype=dtype)
        else:
            self.shortcut = None
        self.relu_out = ReLU()

    def parameters(self):
        out = []
        for layer in (self.conv1, self.bn1, self.conv2, self.bn2):
            out.extend(layer.parameters())
        if self.shortcut is not None:
            out.extend(self.shortcut.parameters())
        return out

    def forward(self, x, train=True):
        y = self.conv1.forward(x, train=train)
        y = self.bn1.forward(y, train=train)
        y = self.relu1.forward(y, train=train)
        y = self.conv2.forward(y, train=train)
        y = self.bn2.forward(y, train=train)
        s = x if self.shortcut is None else self.shortcut.forward(x, train=train)
        if y.shape != s.shape:
            raise ShapeError(f"residual addition mismatch: {y.shape} vs {s.shape}")
        return self.relu_out.forward(y + s, train=train)

    def backward(self, grad):
        g = self.relu_out.backward(grad)
        gy = self.bn2.backward(g)
        gy = self.conv2.backward(gy)
        gy = self.relu1.backward(gy)
        gy = self.bn1.backward(gy)
        gy = self.conv1.backward(gy)
        gs = g if self.shortcut is None else self.shortcut.backward(g)
        return gy + gs


class PlainBlock(Layer):
    """CNN-baseline stage: 3x3 conv -> BN -> ReLU -> 2x2 maxpool (pool
    skipped once the feature map drops below 4x4)."""

    def __init__(self, in_channels, out_channels, pool, rng, dtype=np.float32):
        layers = [
            Conv2d(in_channels, out_channels, 3, stride=1, padding=1,
                   rng=rng, dtype=dtype),
            BatchNorm2d(out_channels, dtype=dtype),
            ReLU(),
        ]
        if pool:
            layers.append(MaxPool2d(2, stride=2))
        self.has_pool = pool
        self.body = Sequential(*layers)

    def parameters(self):
        return self.body.parameters()

    def forward(self, x, train=True):
        return self.body.forward(x, train=train)

    def backward(self, grad):
        return self.body.backward(grad)


class RegressionBlock(Layer):
    """Global average pool followed by the fully connected position head."""

    def __init__(self, in_channels, out_dim, rng, dtype=np.float32):
        self.pool = GlobalAvgPool()
        self.fc = Dense(in_channels, out_dim, rng=rng, dtype=dtype)

    def parameters(self):
        return self.pool.parameters() + self.fc.parameters()

    def forward(self, x, train=True):
        return self.fc.forward(self.pool.forward(x, train=train), train=train)

    def backward(self, grad):
        return self.pool.backward(self.fc.backward(grad))


class Model(Sequential):
    def __init__(self, spec: NetworkSpec, blocks):
        super().__init__(*blocks)
        self.spec = spec

    def state_arrays(self):
        """All persistent arrays (parameters and BN running stats), named,
        in a deterministic declaration order."""
        out = []

        def walk(prefix, layer):
            if isinstance(layer, Conv2d):
                out.append((f"{prefix}.weight", layer.weight))
                out.append((f"{prefix}.bias", layer.bias))
            elif isinstance(layer, Dense):
                out.append((f"{prefix}.weight", layer.weight))
                out.append((f"{prefix}.bias", layer.bias))
            elif isinstance(layer, BatchNorm2d):
                out.append((f"{prefix}.gamma", layer.gamma))
                out.append((f"{prefix}.beta", layer.beta))
                out.append((f"{prefix}.running_mean", layer.running_mean))
                out.append((f"{prefix}.running_var", layer.running_var))
            elif isinstance(layer, Sequential):
                for i, sub in enumerate(layer.layers):
                    walk(f"{prefix}.{i}", sub)
            elif isinstance(layer, NCBlock) or isinstance(layer, PlainBlock):
                walk(f"{prefix}.body", layer.body)
            elif isinstance(layer, RCBlock):
                walk(f"{prefix}.conv1", layer.conv1)
                walk(f"{prefix}.bn1", layer.bn1)
                walk(f"{prefix}.conv2", layer.conv2)
                walk(f"{prefix}.bn2", layer.bn2)
                if layer.shortcut is not None:
                    walk(f"{prefix}.shortcut", layer.shortcut)
            elif isinstance(layer, RegressionBlock):
                walk(f"{prefix}.fc", layer.fc)

        for i, block in enumerate(self.layers):
            walk(f"block{i}", block)
        return out


def build_network(spec: NetworkSpec, seed: int, dtype=np.float32) -> Model:
    """Assemble the network for `spec` with seeded initialization.

    Stage stride is 2 from the second block onward while the feature map
    is at least 4x4 (so late blocks keep a spatial extent of at least 2x2);
    afterwards stride 1. Raises ShapeError at build time if the stem cannot
    fit the input.
    """
    rng = np.random.default_rng(seed)
    c_in, h, w = spec.input_shape
    blocks = [NCBlock(c_in, spec.base_channels, rng, dtype=dtype)]
    h = _out_size(_out_size(h, 7, 2, 3), 3, 2, 1)
    w = _out_size(_out_size(w, 7, 2, 3), 3, 2, 1)
    if h < 1 or w < 1:
        raise ShapeError("input too small for the stem block")

    channels = spec.base_channels
    for i in range(spec.block_count):
        c_out = spec.base_channels * spec.channel_multipliers[i]
        if spec.variant == "rcnr":
            # downsample from the second block onward, but keep at least a
            # 2x2 map so late blocks still see spatial structure
            stride = 2 if (i >= 1 and min(h, w) >= 4) else 1
            blocks.append(RCBlock(channels, c_out, stride, rng, dtype=dtype))
            if stride == 2:
                h = _out_size(h, 3, 2, 1)
                w = _out_size(w, 3, 2, 1)
        else:
            pool = min(h, w) >= 4
            blocks.append(PlainBlock(channels, c_out, pool, rng, dtype=dtype))
            if pool:
                h, w = h // 2, w // 2
        channels = c_out
    blocks.append(RegressionBlock(channels, spec.output_dim, rng, dtype=dtype))
    return Model(spec, blocks)


def predict(model: Model, inputs: np.ndarray, manifest) -> np.ndarray:
    """Eval-mode forward pass, de-normalized to positions in meters."""
    out = model.forward(inputs, train=False)
    return manifest.denormalize_label(out.astype(np.float64))


def save_checkpoint(model: Model, path) -> None:
    """JSON header line + little-endian float32 payload, declaration order."""
    arrays = model.state_arrays()
    header = {
        "format_version": CHECKPOINT_VERSION,
        "spec": {
            "variant": model.spec.variant,
            "block_count": model.spec.block_count,
            "base_channels": model.spec.base_channels,
            "channel_multipliers": list(model.spec.channel_multipliers),
            "input_shape": list(model.spec.input_shape),
            "output_dim": model.spec.output_dim,
        },
        "precision": "float32",
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in arrays],
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        f.write(b"\n")
        for _, a in arrays:
            f.write(a.astype("<f4").tobytes())


def load_checkpoint(path) -> Model:
    with open(path, "rb") as f:
        blob = f.read()
    nl = blob.find(b"\n")
    if nl < 0:
        raise CheckpointError("checkpoint header missing")
    try:
        header = json.loads(blob[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"malformed checkpoint header: {e}") from e
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"checkpoint version {header.get('format_version')}, "
            f"expected {CHECKPOINT_VERSION}")
    s = header["spec"]
    spec = NetworkSpec(variant=s["variant"], block_count=s["block_count"],
                       base_channels=s["base_channels"],
                       channel_multipliers=tuple(s["channel_multipliers"]),
                       input_shape=tuple(s["input_shape"]),
                       output_dim=s["output_dim"])
    model = build_network(spec, seed=0)
    payload = blob[nl + 1:]
    arrays = model.state_arrays()
    expected = sum(a.size for _, a in arrays) * 4
    if len(payload) != expected:
        raise CheckpointPayloadError(
            f"checkpoint payload is {len(payload)} bytes, expected {expected}")
    offset = 0
    for decl, (name, a) in zip(header["arrays"], arrays):
        if decl["name"] != name or tuple(decl["shape"]) != a.shape:
            raise CheckpointPayloadError(
                f"checkpoint array {decl['name']} does not match model layout")
        n = a.size * 4
        a[...] = np.frombuffer(payload[offset:offset + n], dtype="<f4") \
            .reshape(a.shape)
        offset += n
    return model
