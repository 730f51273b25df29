"""Stateless numeric primitives: activation, dense/conv forward, pooling, MSE.

These operate on single instances (vectors, channel-by-time matrices) and are
the reference surface for the layer classes in ``plantguard.nn.layers``, which
add batching, caching and gradients on top of the same arithmetic.
"""

from __future__ import annotations

import numpy as np

from plantguard.errors import DimensionError, NumericInputError, WindowTooShortError

LEAKY_SLOPE = 0.01


def leaky_relu(x):
    """max(0, x) + 0.01 * min(0, x), elementwise."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise NumericInputError("leaky_relu received non-finite input")
    return np.maximum(0.0, x) + LEAKY_SLOPE * np.minimum(0.0, x)


def leaky_relu_grad(x):
    """Derivative of leaky_relu; the kink at 0 takes the right-hand slope 1."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0.0, 1.0, LEAKY_SLOPE)


def dense_forward(x, weights, bias, activate: bool = True):
    """Affine map ``weights @ x + bias`` with optional leaky_relu.

    ``weights`` is stored row-per-output-unit (out x in).
    """
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if x.shape[-1] != weights.shape[1]:
        raise DimensionError(
            f"dense input width {x.shape[-1]} != layer input width {weights.shape[1]}"
        )
    y = x @ weights.T + bias
    return leaky_relu(y) if activate else y


def conv1d_forward(x, kernels, bias, stride: int = 1, activate: bool = True):
    """Valid (no padding) cross-correlation over the time axis, then leaky_relu.

    ``x`` is channels x time; ``kernels`` is out_channels x in_channels x k.
    Output time is floor((time - k) / stride) + 1.
    """
    x = np.asarray(x, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"conv1d expects channels x time input, got shape {x.shape}")
    k = kernels.shape[2]
    if x.shape[1] < k:
        raise WindowTooShortError(
            f"time axis {x.shape[1]} shorter than kernel size {k}"
        )
    if x.shape[0] != kernels.shape[1]:
        raise DimensionError(
            f"conv1d input has {x.shape[0]} channels, kernels expect {kernels.shape[1]}"
        )
    windows = np.lib.stride_tricks.sliding_window_view(x, k, axis=1)[:, ::stride, :]
    y = np.einsum("ctk,ock->ot", windows, kernels) + bias[:, None]
    return leaky_relu(y) if activate else y


def maxpool1d(x, factor: int):
    """Non-overlapping max over time windows of ``factor``; a trailing partial
    window is kept as the max of its members, so output time is ceil(T/factor)."""
    x = np.asarray(x, dtype=np.float64)
    if factor < 1:
        raise DimensionError(f"pool factor must be >= 1, got {factor}")
    if x.ndim != 2 or x.shape[1] == 0:
        raise DimensionError(f"maxpool1d expects channels x time with time >= 1, got {x.shape}")
    t = x.shape[1]
    out = np.empty((x.shape[0], -(-t // factor)), dtype=np.float64)
    for w in range(out.shape[1]):
        out[:, w] = x[:, w * factor : min((w + 1) * factor, t)].max(axis=1)
    return out


def mse(pred, target) -> float:
    """Mean squared error over two equal-length vectors."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    target = np.asarray(target, dtype=np.float64).ravel()
    if pred.shape != target.shape:
        raise DimensionError(f"mse length mismatch: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise DimensionError("mse over empty vectors")
    return float(np.mean((pred - target) ** 2))
