"""The differentiable operators the three classifiers are assembled from.

Every layer implements forward plus an explicit backward that matches
central finite differences (relative error <= 1e-4 in float64); the test
suite enforces this for each operator.
"""
import numpy as np
from scipy.special import erf

from ..errors import InvalidArgumentError, ShapeError
from .core import Context, Module, fan_in_uniform

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def conv_output_length(length, kernel, stride=1, padding=0, dilation=1):
    out = (length + 2 * padding - dilation * (kernel - 1) - 1) // stride + 1
    if out < 1:
        raise ShapeError(
            f"conv/pool output length {out} < 1 for L={length}, k={kernel}, "
            f"stride={stride}, padding={padding}, dilation={dilation}"
        )
    return out


def _gather_windows(xp, kernel, stride, dilation, out_len):
    """(B, C, Lp) -> (B, C, k, out_len) strided window view (copied)."""
    b, c, _ = xp.shape
    cols = np.empty((b, c, kernel, out_len), dtype=xp.dtype)
    for t in range(kernel):
        start = t * dilation
        end = start + stride * (out_len - 1) + 1
        cols[:, :, t, :] = xp[:, :, start:end:stride]
    return cols


def _scatter_windows(dcols, shape, stride, dilation):
    """Adjoint of _gather_windows: accumulate window grads back to (B, C, Lp)."""
    dxp = np.zeros(shape, dtype=dcols.dtype)
    kernel, out_len = dcols.shape[2], dcols.shape[3]
    for t in range(kernel):
        start = t * dilation
        end = start + stride * (out_len - 1) + 1
        dxp[:, :, start:end:stride] += dcols[:, :, t, :]
    return dxp


class Conv1d(Module):
    """Cross-correlation over (B, Cin, L) -> (B, Cout, Lout)."""

    def __init__(self, in_channels, out_channels, kernel_size, stride=1, padding=0,
                 dilation=1, rng=None, name="conv", dtype=np.float32):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = padding
        self.dilation = dilation
        rng = rng or np.random.default_rng(0)
        fan_in = in_channels * kernel_size
        self.weight = self.register(
            f"{name}.weight",
            fan_in_uniform(rng, (out_channels, in_channels, kernel_size), fan_in, dtype),
        )
        self.bias = self.register(f"{name}.bias", fan_in_uniform(rng, (out_channels,), fan_in, dtype))

    def forward(self, x, ctx=None):
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ShapeError(f"expected (B, {self.in_channels}, L), got {x.shape}")
        b, _, length = x.shape
        out_len = conv_output_length(length, self.kernel_size, self.stride, self.padding, self.dilation)
        xp = np.pad(x, ((0, 0), (0, 0), (self.padding, self.padding))) if self.padding else x
        cols = _gather_windows(xp, self.kernel_size, self.stride, self.dilation, out_len)
        cols2 = cols.reshape(b, self.in_channels * self.kernel_size, out_len)
        w2 = self.weight.value.reshape(self.out_channels, -1)
        y = np.matmul(w2, cols2) + self.bias.value[:, None]
        self._cache = (x.shape, xp.shape, cols2)
        return y

    def backward(self, dy):
        x_shape, xp_shape, cols2 = self._cache
        b = x_shape[0]
        w2 = self.weight.value.reshape(self.out_channels, -1)
        self.weight.grad += np.einsum("bol,bcl->oc", dy, cols2).reshape(self.weight.value.shape)
        self.bias.grad += dy.sum(axis=(0, 2))
        dcols2 = np.matmul(w2.T, dy)
        dcols = dcols2.reshape(b, self.in_channels, self.kernel_size, -1)
        dxp = _scatter_windows(dcols, xp_shape, self.stride, self.dilation)
        if self.padding:
            return dxp[:, :, self.padding : self.padding + x_shape[2]]
        return dxp


class MaxPool1d(Module):
    """Max pooling; ties route the gradient to the first (lowest-index) tap."""

    def __init__(self, kernel_size, stride=None, padding=0):
        super().__init__()
        self.kernel_size = kernel_size
        self.stride = stride or kernel_size
        self.padding = padding

    def forward(self, x, ctx=None):
        if self.padding:
            x = np.pad(x, ((0, 0), (0, 0), (self.padding, self.padding)),
                       constant_values=-np.inf)
        b, c, length = x.shape
        if length < self.kernel_size:
            raise ShapeError(f"input length {length} < pool kernel {self.kernel_size}")
        out_len = conv_output_length(length, self.kernel_size, self.stride)
        cols = _gather_windows(x, self.kernel_size, self.stride, 1, out_len)
        arg = cols.argmax(axis=2)  # first index wins ties
        y = np.take_along_axis(cols, arg[:, :, None, :], axis=2)[:, :, 0, :]
        self._cache = (x.shape, arg)
        return y

    def backward(self, dy):
        x_shape, arg = self._cache
        out_len = arg.shape[-1]
        dcols = np.zeros((x_shape[0], x_shape[1], self.kernel_size, out_len), dtype=dy.dtype)
        np.put_along_axis(dcols, arg[:, :, None, :], dy[:, :, None, :], axis=2)
        dx = _scatter_windows(dcols, x_shape, self.stride, 1)
        if self.padding:
            dx = dx[:, :, self.padding:x_shape[2] - self.padding]
        return dx


class GlobalAvgPool1d(Module):
    """(B, C, L) -> (B, C)."""

    def forward(self, x, ctx=None):
        self._length = x.shape[2]
        return x.mean(axis=2)

    def backward(self, dy):
        return np.repeat(dy[:, :, None], self._length, axis=2) / self._length


class BatchNorm1d(Module):
    def __init__(self, channels, momentum=0.1, eps=1e-5, name="bn", dtype=np.float32):
        super().__init__()
        self.channels = channels
        self.momentum = momentum
        self.eps = eps
        self.gamma = self.register(f"{name}.gamma", np.ones(channels, dtype=dtype))
        self.beta = self.register(f"{name}.beta", np.zeros(channels, dtype=dtype))
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self.register_buffer(f"{name}.running_mean", "running_mean")
        self.register_buffer(f"{name}.running_var", "running_var")

    def forward(self, x, ctx=None):
        train = bool(ctx.train) if ctx is not None else False
        if x.ndim != 3 or x.shape[1] != self.channels:
            raise ShapeError(f"expected (B, {self.channels}, L), got {x.shape}")
        if train:
            if x.shape[0] * x.shape[2] < 2:
                raise InvalidArgumentError("batchnorm train mode needs >= 2 statistics samples")
            mean = x.mean(axis=(0, 2))
            var = x.var(axis=(0, 2))
            self.running_mean = (1 - self.momentum) * self.running_mean + self.momentum * mean
            self.running_var = (1 - self.momentum) * self.running_var + self.momentum * var
        else:
            mean, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
        self._cache = (train, xhat, inv_std, x.shape)
        return self.gamma.value[None, :, None] * xhat + self.beta.value[None, :, None]

    def backward(self, dy):
        train, xhat, inv_std, x_shape = self._cache
        self.gamma.grad += (dy * xhat).sum(axis=(0, 2))
        self.beta.grad += dy.sum(axis=(0, 2))
        g = self.gamma.value[None, :, None]
        if not train:
            return dy * g * inv_std[None, :, None]
        n = x_shape[0] * x_shape[2]
        dxhat = dy * g
        mean_dxhat = dxhat.mean(axis=(0, 2))[None, :, None]
        mean_dxhat_xhat = (dxhat * xhat).mean(axis=(0, 2))[None, :, None]
        return inv_std[None, :, None] * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat)


class GELU(Module):
    """Exact form x * Phi(x) with the standard normal CDF."""

    def forward(self, x, ctx=None):
        self._x = x
        self._cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
        return x * self._cdf

    def backward(self, dy):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * self._x**2)
        return dy * (self._cdf + self._x * pdf)


class ReLU(Module):
    def forward(self, x, ctx=None):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dy):
        return np.where(self._mask, dy, 0.0)


class Sigmoid(Module):
    def forward(self, x, ctx=None):
        self._y = 1.0 / (1.0 + np.exp(-x))
        return self._y

    def backward(self, dy):
        return dy * self._y * (1.0 - self._y)


class Dense(Module):
    """Affine map over the last axis: (..., din) -> (..., dout)."""

    def __init__(self, in_features, out_features, rng=None, name="dense", dtype=np.float32):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        rng = rng or np.random.default_rng(0)
        self.weight = self.register(
            f"{name}.weight", fan_in_uniform(rng, (out_features, in_features), in_features, dtype)
        )
        self.bias = self.register(
            f"{name}.bias", fan_in_uniform(rng, (out_features,), in_features, dtype)
        )

    def forward(self, x, ctx=None):
        if x.shape[-1] != self.in_features:
            raise ShapeError(f"expected last axis {self.in_features}, got {x.shape}")
        self._x2 = x.reshape(-1, self.in_features)
        self._lead_shape = x.shape[:-1]
        return (self._x2 @ self.weight.value.T + self.bias.value).reshape(
            *self._lead_shape, self.out_features
        )

    def backward(self, dy):
        dy2 = dy.reshape(-1, self.out_features)
        self.weight.grad += dy2.T @ self._x2
        self.bias.grad += dy2.sum(axis=0)
        return (dy2 @ self.weight.value).reshape(*self._lead_shape, self.in_features)


class Dropout(Module):
    """Inverted dropout: train zeroes with probability p, scales by 1/(1-p)."""

    def __init__(self, p):
        super().__init__()
        if not (0.0 <= p < 1.0):
            raise InvalidArgumentError(f"dropout p must be in [0, 1), got {p}")
        self.p = p

    def forward(self, x, ctx=None):
        train = bool(ctx.train) if ctx is not None else False
        if not train or self.p == 0.0:
            self._mask = None
            return x
        rng = ctx.rng if ctx is not None and ctx.rng is not None else np.random.default_rng(0)
        self._mask = (rng.random(x.shape) >= self.p) / (1.0 - self.p)
        return x * self._mask

    def backward(self, dy):
        if self._mask is None:
            return dy
        return dy * self._mask


class LayerNorm(Module):
    """Normalization over the last axis with learned scale/shift."""

    def __init__(self, features, eps=1e-5, name="ln", dtype=np.float32):
        super().__init__()
        self.features = features
        self.eps = eps
        self.gamma = self.register(f"{name}.gamma", np.ones(features, dtype=dtype))
        self.beta = self.register(f"{name}.beta", np.zeros(features, dtype=dtype))

    def forward(self, x, ctx=None):
        mean = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        inv_std = 1.0 / np.sqrt(var + self.eps)
        self._xhat = (x - mean) * inv_std
        self._inv_std = inv_std
        return self.gamma.value * self._xhat + self.beta.value

    def backward(self, dy):
        axes = tuple(range(dy.ndim - 1))
        self.gamma.grad += (dy * self._xhat).sum(axis=axes)
        self.beta.grad += dy.sum(axis=axes)
        dxhat = dy * self.gamma.value
        mean_dxhat = dxhat.mean(axis=-1, keepdims=True)
        mean_dxhat_xhat = (dxhat * self._xhat).mean(axis=-1, keepdims=True)
        return self._inv_std * (dxhat - mean_dxhat - self._xhat * mean_dxhat_xhat)


def softmax(x, axis=-1):
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_backward(y, dy, axis=-1):
    return (dy - (dy * y).sum(axis=axis, keepdims=True)) * y


class MultiHeadAttention(Module):
    """Scaled dot-product self-attention over (B, T, d)."""

    def __init__(self, d_model, num_heads, rng=None, name="mha", dtype=np.float32):
        super().__init__()
        if d_model % num_heads != 0:
            raise InvalidArgumentError(f"d_model {d_model} not divisible by heads {num_heads}")
        self.d_model = d_model
        self.num_heads = num_heads
        self.d_head = d_model // num_heads
        rng = rng or np.random.default_rng(0)
        self.wq = self.add_child(Dense(d_model, d_model, rng, f"{name}.wq", dtype))
        self.wk = self.add_child(Dense(d_model, d_model, rng, f"{name}.wk", dtype))
        self.wv = self.add_child(Dense(d_model, d_model, rng, f"{name}.wv", dtype))
        self.wo = self.add_child(Dense(d_model, d_model, rng, f"{name}.wo", dtype))

    def _split(self, x):
        b, t, _ = x.shape
        return x.reshape(b, t, self.num_heads, self.d_head).transpose(0, 2, 1, 3)

    def _merge(self, x):
        b, h, t, dh = x.shape
        return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)

    def forward(self, x, ctx=None):
        q = self._split(self.wq.forward(x))
        k = self._split(self.wk.forward(x))
        v = self._split(self.wv.forward(x))
        scale = 1.0 / np.sqrt(self.d_head)
        scores = np.matmul(q, k.transpose(0, 1, 3, 2)) * scale
        attn = softmax(scores, axis=-1)
        heads = np.matmul(attn, v)
        self._cache = (q, k, v, attn, scale)
        return self.wo.forward(self._merge(heads))

    def backward(self, dy):
        q, k, v, attn, scale = self._cache
        dheads = self._split(self.wo.backward(dy))
        dattn = np.matmul(dheads, v.transpose(0, 1, 3, 2))
        dv = np.matmul(attn.transpose(0, 1, 3, 2), dheads)
        dscores = softmax_backward(attn, dattn, axis=-1) * scale
        dq = np.matmul(dscores, k)
        dk = np.matmul(dscores.transpose(0, 1, 3, 2), q)
        dx = self.wq.backward(self._merge(dq))
        dx = dx + self.wk.backward(self._merge(dk))
        dx = dx + self.wv.backward(self._merge(dv))
        return dx

    def attention_weights(self):
        """Last forward's attention maps (B, heads, T, T); inspection only."""
        return self._cache[3]


class SEBlock(Module):
    """Squeeze-and-excitation channel gate over (B, C, L)."""

    def __init__(self, channels, reduction, rng=None, name="se", dtype=np.float32):
        super().__init__()
        if channels < reduction:
            raise InvalidArgumentError(
                f"channels {channels} must be >= reduction {reduction}"
            )
        self.channels = channels
        rng = rng or np.random.default_rng(0)
        hidden = channels // reduction
        self.fc1 = self.add_child(Dense(channels, hidden, rng, f"{name}.fc1", dtype))
        self.relu = self.add_child(ReLU())
        self.fc2 = self.add_child(Dense(hidden, channels, rng, f"{name}.fc2", dtype))
        self.sigmoid = self.add_child(Sigmoid())

    def forward(self, x, ctx=None):
        squeeze = x.mean(axis=2)
        gate = self.sigmoid.forward(self.fc2.forward(self.relu.forward(self.fc1.forward(squeeze))))
        self._cache = (x, gate)
        return x * gate[:, :, None]

    def backward(self, dy):
        x, gate = self._cache
        dgate = (dy * x).sum(axis=2)
        dsqueeze = self.fc1.backward(self.relu.backward(self.fc2.backward(self.sigmoid.backward(dgate))))
        return dy * gate[:, :, None] + dsqueeze[:, :, None] / x.shape[2]


def positional_encoding_table(length, d_model, dtype=np.float64):
    """Sinusoidal table: even columns sin(pos/10000^(2i/d)), odd columns cos."""
    if d_model % 2 != 0:
        raise InvalidArgumentError(f"d_model must be even, got {d_model}")
    if length < 1:
        raise InvalidArgumentError("length must be >= 1")
    pos = np.arange(length, dtype=np.float64)[:, None]
    i = np.arange(d_model // 2, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * i / d_model)
    table = np.empty((length, d_model), dtype=np.float64)
    table[:, 0::2] = np.sin(angle)
    table[:, 1::2] = np.cos(angle)
    return table.astype(dtype)


class PositionalEncoding(Module):
    """Adds the fixed sinusoidal table to (B, T, d) token embeddings."""

    def __init__(self, max_length, d_model, dtype=np.float32):
        super().__init__()
        self.max_length = max_length
        self.table = positional_encoding_table(max_length, d_model, dtype)

    def forward(self, x, ctx=None):
        t = x.shape[1]
        if t > self.max_length:
            raise InvalidArgumentError(
                f"sequence length {t} exceeds maximum {self.max_length}"
            )
        return x + self.table[None, :t, :]

    def backward(self, dy):
        return dy


def weighted_cross_entropy(logits, labels, weights):
    """Class-weighted cross entropy, normalized so uniform weights reproduce
    the plain mean; returns (loss, dlogits)."""
    logits = np.asarray(logits)
    labels = np.asarray(labels)
    b, k = logits.shape
    if labels.min() < 0 or labels.max() >= k:
        raise InvalidArgumentError(f"labels must be in [0, {k}), got range "
                                   f"[{labels.min()}, {labels.max()}]")
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    w = np.asarray(weights, dtype=logits.dtype)[labels]
    wsum = w.sum()
    loss = float(-(w * logp[np.arange(b), labels]).sum() / wsum)
    dlogits = np.exp(logp)
    dlogits[np.arange(b), labels] -= 1.0
    dlogits *= (w / wsum)[:, None]
    return loss, dlogits
