"""Sequence layers with explicit forward caches and backward passes.

Every layer maps a (steps, channels) float matrix to another one and
follows the same protocol: ``forward(x) -> (out, cache)`` and
``backward(dout, cache) -> dx``, with parameter gradients accumulated
into the layer's own buffers (callers zero them between updates).
"""

from __future__ import annotations

import numpy as np

from ..exceptions import SequenceTooShort, ShapeMismatch
from ..utils import ParamStore


def sigmoid(x):
    """Numerically stable logistic function."""
    x = np.asarray(x)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _check_input(x, in_dim, who):
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[1] != in_dim:
        raise ShapeMismatch(f"{who} expects (steps, {in_dim}), got shape {x.shape}")
    return x


class LSTM(ParamStore):
    """Single LSTM layer over a whole sequence, fused gate weights.

    Gate pre-activations are packed [input | forget | output | candidate]
    along the last axis.  Hidden and cell states start at zero; the forget
    gate bias starts at 1 so early training does not wipe the cell state.
    """

    def __init__(self, in_dim, units, rng, dtype=np.float32, forget_bias=1.0):
        super().__init__()
        self.in_dim = int(in_dim)
        self.units = int(units)
        k = 1.0 / np.sqrt(self.units)
        self.Wx = self.add_param("Wx", rng.uniform(-k, k, (self.in_dim, 4 * self.units)).astype(dtype))
        self.Wh = self.add_param("Wh", rng.uniform(-k, k, (self.units, 4 * self.units)).astype(dtype))
        b = np.zeros(4 * self.units, dtype=dtype)
        b[self.units : 2 * self.units] = forget_bias
        self.b = self.add_param("b", b)

    @property
    def out_dim(self):
        return self.units

    def forward(self, x):
        x = _check_input(x, self.in_dim, "LSTM")
        T, H = x.shape[0], self.units
        zx = x @ self.Wx  # input contributions for all steps at once
        gates = np.empty((T, 4 * H), dtype=zx.dtype)
        c = np.empty((T, H), dtype=zx.dtype)
        tanh_c = np.empty((T, H), dtype=zx.dtype)
        h = np.empty((T, H), dtype=zx.dtype)
        h_prev = np.zeros(H, dtype=zx.dtype)
        c_prev = np.zeros(H, dtype=zx.dtype)
        for t in range(T):
            z = zx[t] + h_prev @ self.Wh + self.b
            z[: 3 * H] = sigmoid(z[: 3 * H])
            z[3 * H :] = np.tanh(z[3 * H :])
            i, f, o, g = z[:H], z[H : 2 * H], z[2 * H : 3 * H], z[3 * H :]
            c[t] = f * c_prev + i * g
            tanh_c[t] = np.tanh(c[t])
            h[t] = o * tanh_c[t]
            gates[t] = z
            h_prev, c_prev = h[t], c[t]
        return h, (x, gates, c, tanh_c, h)

    def backward(self, dout, cache):
        x, gates, c, tanh_c, h = cache
        T, H = x.shape[0], self.units
        dZ = np.empty((T, 4 * H), dtype=x.dtype)
        dh_next = np.zeros(H, dtype=x.dtype)
        dc_next = np.zeros(H, dtype=x.dtype)
        for t in range(T - 1, -1, -1):
            i, f, o, g = gates[t, :H], gates[t, H : 2 * H], gates[t, 2 * H : 3 * H], gates[t, 3 * H :]
            dh = dout[t] + dh_next
            do = dh * tanh_c[t]
            dc = dh * o * (1.0 - tanh_c[t] ** 2) + dc_next
            c_prev = c[t - 1] if t > 0 else np.zeros(H, dtype=x.dtype)
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dc_next = dc * f
            dZ[t, :H] = di * i * (1.0 - i)
            dZ[t, H : 2 * H] = df * f * (1.0 - f)
            dZ[t, 2 * H : 3 * H] = do * o * (1.0 - o)
            dZ[t, 3 * H :] = dg * (1.0 - g ** 2)
            dh_next = dZ[t] @ self.Wh.T
        h_prev = np.vstack([np.zeros((1, H), dtype=x.dtype), h[:-1]])
        self.grad("Wx")[...] += x.T @ dZ
        self.grad("Wh")[...] += h_prev.T @ dZ
        self.grad("b")[...] += dZ.sum(axis=0)
        return dZ @ self.Wx.T


class IRNN(ParamStore):
    """ReLU recurrent layer with identity-initialized recurrence."""

    def __init__(self, in_dim, units, rng, dtype=np.float32):
        super().__init__()
        self.in_dim = int(in_dim)
        self.units = int(units)
        k = 1.0 / np.sqrt(self.in_dim)
        self.Wx = self.add_param("Wx", rng.uniform(-k, k, (self.in_dim, self.units)).astype(dtype))
        self.Wh = self.add_param("Wh", np.eye(self.units, dtype=dtype))
        self.b = self.add_param("b", np.zeros(self.units, dtype=dtype))

    @property
    def out_dim(self):
        return self.units

    def forward(self, x):
        x = _check_input(x, self.in_dim, "IRNN")
        T, H = x.shape[0], self.units
        zx = x @ self.Wx
        h = np.empty((T, H), dtype=zx.dtype)
        h_prev = np.zeros(H, dtype=zx.dtype)
        for t in range(T):
            h[t] = np.maximum(zx[t] + h_prev @ self.Wh + self.b, 0.0)
            h_prev = h[t]
        return h, (x, h)

    def backward(self, dout, cache):
        x, h = cache
        T, H = x.shape[0], self.units
        dZ = np.empty((T, H), dtype=x.dtype)
        dh_next = np.zeros(H, dtype=x.dtype)
        for t in range(T - 1, -1, -1):
            dZ[t] = (dout[t] + dh_next) * (h[t] > 0)
            dh_next = dZ[t] @ self.Wh.T
        h_prev = np.vstack([np.zeros((1, H), dtype=x.dtype), h[:-1]])
        self.grad("Wx")[...] += x.T @ dZ
        self.grad("Wh")[...] += h_prev.T @ dZ
        self.grad("b")[...] += dZ.sum(axis=0)
        return dZ @ self.Wx.T


class Conv1D(ParamStore):
    """Valid (no padding) cross-correlation along the step axis."""

    def __init__(self, in_dim, filters, width, stride, rng, dtype=np.float32):
        super().__init__()
        self.in_dim = int(in_dim)
        self.filters = int(filters)
        self.width = int(width)
        self.stride = int(stride)
        k = 1.0 / np.sqrt(self.width * self.in_dim)
        self.W = self.add_param("W", rng.uniform(-k, k, (self.filters, self.width, self.in_dim)).astype(dtype))
        self.b = self.add_param("b", np.zeros(self.filters, dtype=dtype))

    @property
    def out_dim(self):
        return self.filters

    def forward(self, x):
        x = _check_input(x, self.in_dim, "Conv1D")
        if x.shape[0] < self.width:
            raise SequenceTooShort(f"{x.shape[0]} steps < filter width {self.width}")
        windows = np.lib.stride_tricks.sliding_window_view(x, (self.width, self.in_dim))[:: self.stride, 0]
        out = np.tensordot(windows, self.W, axes=([1, 2], [1, 2])) + self.b
        return out.astype(x.dtype, copy=False), (x, windows)

    def backward(self, dout, cache):
        x, windows = cache
        self.grad("W")[...] += np.tensordot(dout, windows, axes=([0], [0]))
        self.grad("b")[...] += dout.sum(axis=0)
        dwin = np.tensordot(dout, self.W, axes=([1], [0]))  # (out_steps, width, in_dim)
        dx = np.zeros_like(x)
        starts = self.stride * np.arange(dout.shape[0])
        for j in range(self.width):
            dx[starts + j] += dwin[:, j, :]
        return dx


class MaxPool1D:
    """Per-channel max over fixed windows along the step axis."""

    def __init__(self, size, stride):
        self.size = int(size)
        self.stride = int(stride)

    def forward(self, x):
        x = np.asarray(x)
        if x.ndim != 2:
            raise ShapeMismatch(f"MaxPool1D expects (steps, channels), got shape {x.shape}")
        if x.shape[0] < self.size:
            raise SequenceTooShort(f"{x.shape[0]} steps < pool size {self.size}")
        windows = np.lib.stride_tricks.sliding_window_view(x, (self.size, x.shape[1]))[:: self.stride, 0]
        amax = windows.argmax(axis=1)  # ties: earliest step wins
        out = np.take_along_axis(windows, amax[:, None, :], axis=1)[:, 0, :]
        return out, (x.shape, amax)

    def backward(self, dout, cache):
        shape, amax = cache
        dx = np.zeros(shape, dtype=dout.dtype)
        rows = self.stride * np.arange(amax.shape[0])[:, None] + amax
        cols = np.broadcast_to(np.arange(shape[1]), amax.shape)
        np.add.at(dx, (rows, cols), dout)
        return dx


class GlobalMaxPool:
    """Collapse the whole sequence to one step by per-channel max."""

    def forward(self, x):
        x = np.asarray(x)
        if x.ndim != 2 or x.shape[0] == 0:
            raise ShapeMismatch(f"GlobalMaxPool expects a non-empty (steps, channels), got shape {x.shape}")
        amax = x.argmax(axis=0)
        return x[amax, np.arange(x.shape[1])][None, :], (x.shape, amax)

    def backward(self, dout, cache):
        shape, amax = cache
        dx = np.zeros(shape, dtype=dout.dtype)
        dx[amax, np.arange(shape[1])] = dout[0]
        return dx


class Dense(ParamStore):
    """Affine map applied row-wise."""

    def __init__(self, in_dim, out_dim, rng, dtype=np.float32):
        super().__init__()
        self.in_dim = int(in_dim)
        self._out_dim = int(out_dim)
        k = 1.0 / np.sqrt(self.in_dim)
        self.W = self.add_param("W", rng.uniform(-k, k, (self.in_dim, self._out_dim)).astype(dtype))
        self.b = self.add_param("b", np.zeros(self._out_dim, dtype=dtype))

    @property
    def out_dim(self):
        return self._out_dim

    def forward(self, x):
        x = _check_input(x, self.in_dim, "Dense")
        return x @ self.W + self.b, x

    def backward(self, dout, cache):
        x = cache
        self.grad("W")[...] += x.T @ dout
        self.grad("b")[...] += dout.sum(axis=0)
        return dout @ self.W.T


def relu_forward(x):
    return np.maximum(x, 0.0), x > 0


def relu_backward(dout, mask):
    return dout * mask
