"""Minimal layer library with analytic backward passes.

Tensors are plain numpy arrays in NCHW layout. Each layer caches what its
backward pass needs during forward; backward takes dLoss/dOutput and
returns dLoss/dInput while accumulating parameter gradients in-place.

Set `debug_checks(True)` to assert finiteness of every layer output.
"""
from __future__ import annotations

import math

import numpy as np

_DEBUG = False


def debug_checks(enabled: bool) -> None:
    global _DEBUG
    _DEBUG = bool(enabled)


class ShapeError(ValueError):
    pass


def _check(out: np.ndarray) -> np.ndarray:
    if _DEBUG and not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite values in layer output")
    return out


def uniform_init(rng: np.random.Generator, shape, fan_in: int, dtype):
    """Zero-mean uniform with scale sqrt(2 / fan_in)."""
    bound = math.sqrt(2.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Layer:
    """Base layer: no parameters, identity gradient plumbing."""

    def parameters(self):
        """List of (param, grad) array pairs, in declaration order."""
        return []

    def zero_grad(self):
        for _, g in self.parameters():
            g[...] = 0.0

    def forward(self, x, train=True):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError


def _out_size(size, k, stride, pad):
    # Standard floor semantics; trailing rows that do not fit a full window
    # are dropped.
    span = size + 2 * pad - k
    if span < 0:
        raise ShapeError(
            f"window {k} with pad {pad} larger than input size {size}")
    return span // stride + 1


def _im2col(x, k, stride, pad, pad_value=0.0):
    """Extract sliding windows: returns (cols [B, OH, OW, C, k, k], OH, OW)."""
    b, c, h, w = x.shape
    oh = _out_size(h, k, stride, pad)
    ow = _out_size(w, k, stride, pad)
    if pad > 0:
        xp = np.full((b, c, h + 2 * pad, w + 2 * pad), pad_value, dtype=x.dtype)
        xp[:, :, pad:pad + h, pad:pad + w] = x
    else:
        xp = x
    cols = np.empty((b, c, k, k, oh, ow), dtype=x.dtype)
    for ki in range(k):
        for kj in range(k):
            cols[:, :, ki, kj] = xp[:, :, ki:ki + stride * oh:stride,
                                    kj:kj + stride * ow:stride]
    return cols, oh, ow


def _col2im(cols, x_shape, k, stride, pad):
    """Scatter-add window gradients back onto the input, inverse of _im2col."""
    b, c, h, w = x_shape
    oh, ow = cols.shape[-2:]
    xp = np.zeros((b, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    for ki in range(k):
        for kj in range(k):
            xp[:, :, ki:ki + stride * oh:stride,
               kj:kj + stride * ow:stride] += cols[:, :, ki, kj]
    if pad > 0:
        return xp[:, :, pad:pad + h, pad:pad + w]
    return xp


class Conv2d(Layer):
    """2D cross-correlation with zero padding, square kernel."""

    def __init__(self, in_channels, out_channels, kernel_size, stride=1,
                 padding=0, rng=None, dtype=np.float32):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.k = kernel_size
        self.stride = stride
        self.padding = padding
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = in_channels * kernel_size * kernel_size
        self.weight = uniform_init(rng, (out_channels, in_channels,
                                         kernel_size, kernel_size), fan_in, dtype)
        self.bias = np.zeros(out_channels, dtype=dtype)
        self.weight_grad = np.zeros_like(self.weight)
        self.bias_grad = np.zeros_like(self.bias)
        self._cols = None
        self._x_shape = None

    def parameters(self):
        return [(self.weight, self.weight_grad), (self.bias, self.bias_grad)]

    def forward(self, x, train=True):
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ShapeError(f"conv2d expected [B,{self.in_channels},H,W], got {x.shape}")
        cols, oh, ow = _im2col(x, self.k, self.stride, self.padding)
        b = x.shape[0]
        # [B,OH,OW, C*k*k] @ [C*k*k, O]
        flat = cols.transpose(0, 4, 5, 1, 2, 3).reshape(b, oh, ow, -1)
        wmat = self.weight.reshape(self.out_channels, -1)
        out = flat @ wmat.T + self.bias
        self._cols = flat
        self._x_shape = x.shape
        return _check(np.ascontiguousarray(out.transpose(0, 3, 1, 2)))

    def backward(self, grad):
        b, o, oh, ow = grad.shape
        g = grad.transpose(0, 2, 3, 1)                      # [B,OH,OW,O]
        flat = self._cols                                    # [B,OH,OW,Ckk]
        self.weight_grad += np.tensordot(g, flat, axes=([0, 1, 2], [0, 1, 2])) \
            .reshape(self.weight.shape)
        self.bias_grad += g.sum(axis=(0, 1, 2))
        wmat = self.weight.reshape(self.out_channels, -1)
        dflat = g @ wmat                                     # [B,OH,OW,Ckk]
        dcols = dflat.reshape(b, oh, ow, self.in_channels, self.k, self.k) \
            .transpose(0, 3, 4, 5, 1, 2)
        return _col2im(dcols, self._x_shape, self.k, self.stride, self.padding)


class BatchNorm2d(Layer):
    """Per-channel batch normalization with running statistics for eval."""

    def __init__(self, channels, eps=1e-5, momentum=0.1, dtype=np.float32):
        self.channels = channels
        self.eps = eps
        self.momentum = momentum
        self.gamma = np.ones(channels, dtype=dtype)
        self.beta = np.zeros(channels, dtype=dtype)
        self.gamma_grad = np.zeros_like(self.gamma)
        self.beta_grad = np.zeros_like(self.beta)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self._cache = None

    def parameters(self):
        return [(self.gamma, self.gamma_grad), (self.beta, self.beta_grad)]

    def forward(self, x, train=True):
        if x.ndim != 4 or x.shape[1] != self.channels:
            raise ShapeError(f"batchnorm expected [B,{self.channels},H,W], got {x.shape}")
        if train:
            b, _, h, w = x.shape
            if b * h * w < 2:
                raise ShapeError("batchnorm train mode needs >= 2 values per channel")
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            m = self.momentum
            self.running_mean[...] = (1 - m) * self.running_mean + m * mean
            self.running_var[...] = (1 - m) * self.running_var + m * var
        else:
            mean, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[:, None, None]) * inv_std[:, None, None]
        self._cache = (xhat, inv_std, train)
        return _check(self.gamma[:, None, None] * xhat + self.beta[:, None, None])

    def backward(self, grad):
        xhat, inv_std, train = self._cache
        self.gamma_grad += (grad * xhat).sum(axis=(0, 2, 3))
        self.beta_grad += grad.sum(axis=(0, 2, 3))
        dxhat = grad * self.gamma[:, None, None]
        if not train:
            return dxhat * inv_std[:, None, None]
        n = grad.shape[0] * grad.shape[2] * grad.shape[3]
        sum_d = dxhat.sum(axis=(0, 2, 3))
        sum_dx = (dxhat * xhat).sum(axis=(0, 2, 3))
        return (inv_std[:, None, None] / n) * (
            n * dxhat - sum_d[:, None, None] - xhat * sum_dx[:, None, None])


class ReLU(Layer):
    def __init__(self):
        self._mask = None

    def forward(self, x, train=True):
        self._mask = x > 0
        return _check(np.where(self._mask, x, 0.0).astype(x.dtype))

    def backward(self, grad):
        return grad * self._mask


class MaxPool2d(Layer):
    """Windowed maximum; gradient routes to the first argmax per window."""

    def __init__(self, kernel_size, stride=None, padding=0):
        self.k = kernel_size
        self.stride = stride if stride is not None else kernel_size
        self.padding = padding
        self._cache = None

    def forward(self, x, train=True):
        if min(x.shape[2], x.shape[3]) + 2 * self.padding < self.k:
            raise ShapeError(f"pool window {self.k} larger than input {x.shape[2:]}")
        cols, oh, ow = _im2col(x, self.k, self.stride, self.padding,
                               pad_value=-np.inf)
        b, c = x.shape[:2]
        flat = cols.reshape(b, c, self.k * self.k, oh, ow)
        arg = flat.argmax(axis=2)
        out = np.take_along_axis(flat, arg[:, :, None], axis=2)[:, :, 0]
        self._cache = (arg, x.shape, oh, ow)
        return _check(out)

    def backward(self, grad):
        arg, x_shape, oh, ow = self._cache
        b, c = x_shape[:2]
        dcols = np.zeros((b, c, self.k * self.k, oh, ow), dtype=grad.dtype)
        np.put_along_axis(dcols, arg[:, :, None], grad[:, :, None], axis=2)
        dcols = dcols.reshape(b, c, self.k, self.k, oh, ow)
        return _col2im(dcols, x_shape, self.k, self.stride, self.padding)


class GlobalAvgPool(Layer):
    """Spatial mean per channel: [B,C,H,W] -> [B,C]."""

    def __init__(self):
        self._shape = None

    def forward(self, x, train=True):
        self._shape = x.shape
        return _check(x.mean(axis=(2, 3)))

    def backward(self, grad):
        b, c, h, w = self._shape
        return np.broadcast_to(grad[:, :, None, None] / (h * w),
                               self._shape).astype(grad.dtype)


class Dense(Layer):
    """Affine map out = x @ W.T + b over flat features."""

    def __init__(self, in_features, out_features, rng=None, dtype=np.float32):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_features = in_features
        self.weight = uniform_init(rng, (out_features, in_features), in_features, dtype)
        self.bias = np.zeros(out_features, dtype=dtype)
        self.weight_grad = np.zeros_like(self.weight)
        self.bias_grad = np.zeros_like(self.bias)
        self._x = None

    def parameters(self):
        return [(self.weight, self.weight_grad), (self.bias, self.bias_grad)]

    def forward(self, x, train=True):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(f"dense expected [B,{self.in_features}], got {x.shape}")
        self._x = x
        return _check(x @ self.weight.T + self.bias)

    def backward(self, grad):
        self.weight_grad += grad.T @ self._x
        self.bias_grad += grad.sum(axis=0)
        return grad @ self.weight


def mse_loss(pred: np.ndarray, target: np.ndarray):
    """Mean over batch of squared Euclidean error; returns (loss, dLoss/dPred)."""
    if pred.shape != target.shape:
        raise ShapeError(f"mse shapes differ: {pred.shape} vs {target.shape}")
    diff = pred - target
    b = pred.shape[0]
    loss = float((diff * diff).sum() / b)
    return loss, (2.0 / b) * diff


class Sequential(Layer):
    def __init__(self, *layers):
        self.layers = list(layers)

    def parameters(self):
        out = []
        for layer in self.layers:
            out.extend(layer.parameters())
        return out

    def forward(self, x, train=True):
        for layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad


def finite_diff_gradcheck(model: Layer, x: np.ndarray, rng=None,
                          n_coords: int = 200, eps: float = 1e-4) -> float:
    """Max relative error of analytic vs central-difference gradients.

    The loss is the MSE against a fixed random target; checked coordinates
    are sampled from the input and every parameter. Requires float64.
    """
    if x.dtype != np.float64:
        raise ValueError("gradient check requires float64 inputs")
    rng = rng if rng is not None else np.random.default_rng(0)

    out = model.forward(x, train=True)
    target = rng.standard_normal(out.shape)

    def loss_value():
        loss, _ = mse_loss(model.forward(x, train=True), target)
        return loss

    model.zero_grad()
    _, dout = mse_loss(model.forward(x, train=True), target)
    dx = model.backward(dout)

    arrays = [(x, dx)] + model.parameters()
    total = sum(a.size for a, _ in arrays)
    n_check = min(n_coords, total)
    picks = rng.choice(total, size=n_check, replace=False)

    max_err = 0.0
    offsets = np.cumsum([0] + [a.size for a, _ in arrays])
    for flat_idx in picks:
        ai = int(np.searchsorted(offsets, flat_idx, side="right") - 1)
        arr, analytic = arrays[ai]
        idx = np.unravel_index(int(flat_idx - offsets[ai]), arr.shape)
        orig = arr[idx]
        arr[idx] = orig + eps
        f_plus = loss_value()
        arr[idx] = orig - eps
        f_minus = loss_value()
        arr[idx] = orig
        numeric = (f_plus - f_minus) / (2.0 * eps)
        a = float(analytic[idx])
        err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
        max_err = max(max_err, err)
    return max_err
