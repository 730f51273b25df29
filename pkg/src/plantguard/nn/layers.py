"""Batched layers with exact reverse-mode gradients.

Five node types only (dense, conv1d, max-pool, leaky-relu, reshape plumbing),
composed through ``Sequential``. Every layer takes and returns arrays whose
leading axis is the batch. ``forward`` returns ``(y, cache)``; ``backward``
consumes the cache and returns ``(dx, param_grads)``.
"""

from __future__ import annotations

import numpy as np

from plantguard.errors import (
    DimensionError,
    GraphStateError,
    NumericInputError,
    WindowTooShortError,
)
from plantguard.nn.functional import LEAKY_SLOPE


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    def params(self) -> dict:
        return {}

    def forward(self, x):
        raise NotImplementedError

    def backward(self, dy, cache):
        raise NotImplementedError


class Dense(Layer):
    """Affine layer; weights stored out x in so y = x @ W.T + b."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.weight = glorot_uniform(rng, (out_dim, in_dim), in_dim, out_dim)
        self.bias = np.zeros(out_dim)

    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def forward(self, x):
        if x.shape[1] != self.weight.shape[1]:
            raise DimensionError(
                f"dense input width {x.shape[1]} != {self.weight.shape[1]}"
            )
        return x @ self.weight.T + self.bias, x

    def backward(self, dy, cache):
        x = cache
        grads = {"weight": dy.T @ x, "bias": dy.sum(axis=0)}
        return dy @ self.weight, grads


class Conv1d(Layer):
    """Valid cross-correlation over time; input is batch x channels x time."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 rng: np.random.Generator, stride: int = 1):
        fan_in = in_channels * kernel_size
        self.kernels = glorot_uniform(
            rng, (out_channels, in_channels, kernel_size), fan_in, out_channels
        )
        self.bias = np.zeros(out_channels)
        self.stride = stride
        self.kernel_size = kernel_size

    def params(self):
        return {"kernels": self.kernels, "bias": self.bias}

    def forward(self, x):
        # im2col so the contraction runs as one contiguous matmul
        k = self.kernel_size
        if x.shape[2] < k:
            raise WindowTooShortError(f"time axis {x.shape[2]} < kernel size {k}")
        windows = np.lib.stride_tricks.sliding_window_view(x, k, axis=2)
        windows = windows[:, :, :: self.stride, :]
        b, c, t_out, _ = windows.shape
        cols = np.ascontiguousarray(windows.transpose(0, 2, 1, 3)).reshape(b * t_out, c * k)
        y = cols @ self.kernels.reshape(self.kernels.shape[0], c * k).T
        y = y.reshape(b, t_out, -1).transpose(0, 2, 1) + self.bias[None, :, None]
        return y, (x.shape, cols)

    def backward(self, dy, cache):
        x_shape, cols = cache
        b, o, t_out = dy.shape
        c, k = self.kernels.shape[1], self.kernel_size
        dy_cols = np.ascontiguousarray(dy.transpose(0, 2, 1)).reshape(b * t_out, o)
        grads = {
            "kernels": (dy_cols.T @ cols).reshape(o, c, k),
            "bias": dy.sum(axis=(0, 2)),
        }
        dcols = (dy_cols @ self.kernels.reshape(o, c * k)).reshape(b, t_out, c, k)
        dwin = dcols.transpose(0, 2, 1, 3)
        dx = np.zeros(x_shape)
        for j in range(k):
            dx[:, :, j : j + self.stride * t_out : self.stride] += dwin[:, :, :, j]
        return dx, grads


class MaxPool1d(Layer):
    """Non-overlapping max over time; partial trailing window is kept."""

    def __init__(self, factor: int):
        self.factor = factor

    def forward(self, x):
        b, c, t = x.shape
        if t == 0:
            raise DimensionError("maxpool over empty time axis")
        f = self.factor
        n_full = t // f
        body = x[:, :, : n_full * f].reshape(b, c, n_full, f)
        body_idx = body.argmax(axis=3)
        y_body = np.take_along_axis(body, body_idx[..., None], axis=3)[..., 0]
        if n_full * f == t:
            return y_body, (x.shape, body_idx, None)
        tail = x[:, :, n_full * f :]
        tail_idx = tail.argmax(axis=2)
        y_tail = np.take_along_axis(tail, tail_idx[..., None], axis=2)
        return np.concatenate([y_body, y_tail], axis=2), (x.shape, body_idx, tail_idx)

    def backward(self, dy, cache):
        x_shape, body_idx, tail_idx = cache
        b, c, t = x_shape
        f = self.factor
        n_full = t // f
        dx = np.zeros(x_shape)
        body = np.zeros((b, c, n_full, f))
        np.put_along_axis(body, body_idx[..., None], dy[:, :, :n_full, None], axis=3)
        dx[:, :, : n_full * f] = body.reshape(b, c, n_full * f)
        if tail_idx is not None:
            np.put_along_axis(
                dx[:, :, n_full * f :], tail_idx[..., None], dy[:, :, n_full:], axis=2
            )
        return dx, {}


class LeakyReLU(Layer):
    def forward(self, x):
        if not np.all(np.isfinite(x)):
            raise NumericInputError("leaky_relu received non-finite input")
        # leaky(x) == x * slope_mask, so the mask doubles as the gradient
        mask = np.where(x >= 0.0, 1.0, LEAKY_SLOPE)
        return x * mask, mask

    def backward(self, dy, cache):
        return dy * cache, {}


class Reshape(Layer):
    """Reshapes the per-instance payload (batch axis untouched)."""

    def __init__(self, *shape: int):
        self.shape = shape

    def forward(self, x):
        return x.reshape((x.shape[0],) + self.shape), x.shape

    def backward(self, dy, cache):
        return dy.reshape(cache), {}


class Flatten(Layer):
    def forward(self, x):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dy, cache):
        return dy.reshape(cache), {}


class Sequential:
    """Ordered layer list with cached activations and a parameter registry.

    Parameter names are ``"<layer_index>.<param>"``. A forward pass must
    precede each backward pass; backward clears the cache.
    """

    def __init__(self, layers):
        self.layers = list(layers)
        self._caches = None

    def params(self) -> dict:
        out = {}
        for i, layer in enumerate(self.layers):
            for name, arr in layer.params().items():
                out[f"{i}.{name}"] = arr
        return out

    def forward(self, x):
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x)
            caches.append(cache)
        self._caches = caches
        return x

    def backward(self, dy):
        """Returns (d_input, grads keyed like params())."""
        if self._caches is None:
            raise GraphStateError("backward called without a cached forward pass")
        grads = {}
        for i in reversed(range(len(self.layers))):
            dy, layer_grads = self.layers[i].backward(dy, self._caches[i])
            for name, g in layer_grads.items():
                grads[f"{i}.{name}"] = g
        self._caches = None
        return dy, grads
