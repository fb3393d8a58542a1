"""1-D conv network description, forward evaluation, and checkpoints.

A network is an ordered list of :class:`LayerSpec`. Trainable parameters
live in a :class:`ParamStore` keyed by ``L{i}_{name}``; batch-norm running
statistics are non-trainable buffers in the same store.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, asdict

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ShapeError

_BN_EPS = 1e-5
_BN_MOMENTUM = 0.1

CONV_KINDS = ("conv1d", "tconv1d")
NORM_KINDS = ("batch_norm", "instance_norm")
LAYER_KINDS = CONV_KINDS + NORM_KINDS + ("relu", "leaky_relu", "tanh", "sigmoid", "dropout")


@dataclass
class LayerSpec:
    kind: str
    in_channels: int | None = None
    out_channels: int | None = None
    kernel: int | None = None
    stride: int | None = None
    padding: int | None = None
    channels: int | None = None   # norm layers
    slope: float | None = None    # leaky_relu
    p: float | None = None        # dropout

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind in CONV_KINDS:
            if self.kernel < 1 or self.stride < 1 or self.padding < 0:
                raise ValueError("conv layer needs kernel >= 1, stride >= 1, padding >= 0")
        if self.kind == "dropout" and not (0.0 <= self.p < 1.0):
            raise ValueError("dropout p must be in [0, 1)")
        if self.kind == "leaky_relu" and self.slope is None:
            self.slope = 0.2

    def param_shapes(self):
        if self.kind == "conv1d":
            return {"weight": (self.out_channels, self.in_channels, self.kernel),
                    "bias": (1, self.out_channels, 1)}
        if self.kind == "tconv1d":
            # weight layout (in, out, kernel): forward is the conv adjoint
            return {"weight": (self.in_channels, self.out_channels, self.kernel),
                    "bias": (1, self.out_channels, 1)}
        if self.kind in NORM_KINDS:
            return {"gamma": (1, self.channels, 1), "beta": (1, self.channels, 1)}
        return {}

    def buffer_shapes(self):
        if self.kind == "batch_norm":
            return {"running_mean": (1, self.channels, 1),
                    "running_var": (1, self.channels, 1)}
        return {}


@dataclass
class NetworkSpec:
    layers: list[LayerSpec] = field(default_factory=list)

    def param_shapes(self):
        shapes = {}
        for i, layer in enumerate(self.layers):
            for name, shape in layer.param_shapes().items():
                shapes[f"L{i}_{name}"] = shape
        return shapes

    def buffer_shapes(self):
        shapes = {}
        for i, layer in enumerate(self.layers):
            for name, shape in layer.buffer_shapes().items():
                shapes[f"L{i}_{name}"] = shape
        return shapes

    def param_count(self):
        return sum(int(np.prod(s)) for s in self.param_shapes().values())


class ParamStore:
    """Flat parameter and buffer storage for one network."""

    def __init__(self, params, buffers=None):
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
        self.buffers = {k: np.asarray(v, dtype=np.float64) for k, v in (buffers or {}).items()}

    def leaf_tensors(self):
        """Fresh requires-grad leaves viewing the current parameter values."""
        return {name: Tensor(arr, requires_grad=True) for name, arr in self.params.items()}

    def copy(self):
        return ParamStore({k: v.copy() for k, v in self.params.items()},
                          {k: v.copy() for k, v in self.buffers.items()})


def init_params(net: NetworkSpec, rng, weight_std=0.02) -> ParamStore:
    """DCGAN-style init: conv weights N(0, weight_std^2), biases/shifts 0, scales 1."""
    params = {}
    for name, shape in net.param_shapes().items():
        if name.endswith("_weight"):
            params[name] = rng.normal(0.0, weight_std, size=shape)
        elif name.endswith("_gamma"):
            params[name] = np.ones(shape)
        else:
            params[name] = np.zeros(shape)
    buffers = {}
    for name, shape in net.buffer_shapes().items():
        buffers[name] = np.ones(shape) if name.endswith("_var") else np.zeros(shape)
    return ParamStore(params, buffers)


def _check_input(layer, i, x):
    if x.ndim != 3:
        raise ShapeError(f"layer {i} ({layer.kind}): expected (batch, channels, length) input")
    c = x.shape[1]
    if layer.kind in CONV_KINDS and c != layer.in_channels:
        raise ShapeError(f"layer {i} ({layer.kind}): expected {layer.in_channels} "
                         f"input channels, got {c}")
    if layer.kind in NORM_KINDS and c != layer.channels:
        raise ShapeError(f"layer {i} ({layer.kind}): expected {layer.channels} channels, got {c}")


def _normalize(x, mean, var):
    return (x - mean) * ad.power(var + _BN_EPS, -0.5)


def forward(net, store, x, mode="eval", rng=None, params=None):
    """Evaluate the network on x (B, C, L).

    ``params`` may be a dict of leaf Tensors (for training); otherwise the
    store's arrays are used as constants. Dropout and train-mode batch
    statistics require ``mode='train'``; dropout additionally needs ``rng``.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if params is None:
        params = {name: Tensor(arr) for name, arr in store.params.items()}
    out = ad.as_tensor(x)
    for i, layer in enumerate(net.layers):
        _check_input(layer, i, out)
        try:
            out = _apply(layer, i, out, store, params, mode, rng)
        except ShapeError as exc:
            raise ShapeError(f"layer {i} ({layer.kind}): {exc}") from None
    return out


def _apply(layer, i, x, store, params, mode, rng):
    kind = layer.kind
    if kind == "conv1d":
        y = ad.conv1d(x, params[f"L{i}_weight"], layer.stride, layer.padding)
        return y + params[f"L{i}_bias"]
    if kind == "tconv1d":
        # forward of a transposed conv is the adjoint scatter-add; the
        # (in, out, kernel) weight layout matches conv1d_transpose's (O, C, K)
        y = ad.conv1d_transpose(x, params[f"L{i}_weight"], layer.stride, layer.padding)
        return y + params[f"L{i}_bias"]
    if kind == "batch_norm":
        gamma, beta = params[f"L{i}_gamma"], params[f"L{i}_beta"]
        if mode == "train":
            mean = ad.tmean(x, axis=(0, 2), keepdims=True)
            var = ad.tmean((x - mean) ** 2, axis=(0, 2), keepdims=True)
            rm, rv = store.buffers[f"L{i}_running_mean"], store.buffers[f"L{i}_running_var"]
            rm *= 1.0 - _BN_MOMENTUM
            rm += _BN_MOMENTUM * mean.data
            rv *= 1.0 - _BN_MOMENTUM
            rv += _BN_MOMENTUM * var.data
        else:
            mean = Tensor(store.buffers[f"L{i}_running_mean"])
            var = Tensor(store.buffers[f"L{i}_running_var"])
        return _normalize(x, mean, var) * gamma + beta
    if kind == "instance_norm":
        gamma, beta = params[f"L{i}_gamma"], params[f"L{i}_beta"]
        mean = ad.tmean(x, axis=2, keepdims=True)
        var = ad.tmean((x - mean) ** 2, axis=2, keepdims=True)
        return _normalize(x, mean, var) * gamma + beta
    if kind == "relu":
        return ad.relu(x)
    if kind == "leaky_relu":
        return ad.leaky_relu(x, layer.slope)
    if kind == "tanh":
        return ad.tanh(x)
    if kind == "sigmoid":
        return ad.sigmoid(x)
    if kind == "dropout":
        if mode != "train" or layer.p == 0.0:
            return x
        if rng is None:
            raise ValueError("dropout in train mode needs an rng")
        keep = 1.0 - layer.p
        mask = (rng.random(x.shape) < keep) / keep  # inverted scaling
        return x * Tensor(mask)
    raise ValueError(f"unknown layer kind {kind!r}")


def output_length(net, length):
    """Trace the length dimension through the network's conv layers."""
    for layer in net.layers:
        if layer.kind == "conv1d":
            length = ad.conv_output_length(length, layer.kernel, layer.stride, layer.padding)
        elif layer.kind == "tconv1d":
            length = ad.tconv_output_length(length, layer.kernel, layer.stride, layer.padding)
    return length


# -- checkpoint format ---------------------------------------------------
#
# magic "WDCGAN1" | uint64 LE header length | header JSON | param bytes |
# buffer bytes. Params and buffers are little-endian float64 in layer order.

CHECKPOINT_MAGIC = b"WDCGAN1"


def save_checkpoint(path, net, store, kind="generator", meta=None):
    header = {
        "kind": kind,
        "layers": [asdict(layer) for layer in net.layers],
        "params": [[name, list(store.params[name].shape)] for name in store.params],
        "buffers": [[name, list(store.buffers[name].shape)] for name in store.buffers],
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for name in store.params:
            fh.write(np.ascontiguousarray(store.params[name], dtype="<f8").tobytes())
        for name in store.buffers:
            fh.write(np.ascontiguousarray(store.buffers[name], dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns (net, store, kind, meta)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint (bad magic {magic!r})")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode())
        net = NetworkSpec([LayerSpec(**d) for d in header["layers"]])

        def read_block(entries):
            out = {}
            for name, shape in entries:
                n = int(np.prod(shape)) if shape else 1
                arr = np.frombuffer(fh.read(8 * n), dtype="<f8").reshape(shape)
                out[name] = arr.astype(np.float64)
            return out

        params = read_block(header["params"])
        buffers = read_block(header["buffers"])
    return net, ParamStore(params, buffers), header["kind"], header["meta"]
