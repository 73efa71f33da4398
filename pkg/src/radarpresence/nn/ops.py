"""Functional layer operations with hand-derived backward passes.

Conventions:
    - inputs are numpy arrays, NCHW for images, [N, F] for features;
    - conv weights are [out_channels, in_channels, k, k];
    - transpose-conv weights are [in_channels, out_channels, k, k];
    - dense weights are [in_features, out_features];
    - every forward returns (output, cache) and the paired backward takes
      (grad_output, cache).

Convolutions are implemented with im2col / col2im so the heavy lifting is
a single matmul; col2im is a 9-slice scatter-add for 3x3 kernels. All ops
preserve the input dtype (float32 for training, float64 for gradient
checking).
"""

import numpy as np

from ..errors import ValidationError


def _conv_out_dim(size: int, k: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - k) // stride + 1


def _im2col(x: np.ndarray, k: int, stride: int, pad: int) -> np.ndarray:
    """[N, C, H, W] -> [N, C*k*k, L] patch matrix."""
    n, c, h, w = x.shape
    ho = _conv_out_dim(h, k, stride, pad)
    wo = _conv_out_dim(w, k, stride, pad)
    if ho < 1 or wo < 1:
        raise ValidationError("kernel larger than padded input")
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride]  # [N, C, ho, wo, k, k]
    cols = windows.transpose(0, 1, 4, 5, 2, 3).reshape(n, c * k * k, ho * wo)
    return np.ascontiguousarray(cols)


def _col2im(
    cols: np.ndarray, x_shape: tuple, k: int, stride: int, pad: int
) -> np.ndarray:
    """Adjoint of _im2col: scatter-add patches back to [N, C, H, W]."""
    n, c, h, w = x_shape
    ho = _conv_out_dim(h, k, stride, pad)
    wo = _conv_out_dim(w, k, stride, pad)
    patches = cols.reshape(n, c, k, k, ho, wo)
    out = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            out[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += (
                patches[:, :, i, j]
            )
    if pad:
        out = out[:, :, pad:-pad, pad:-pad]
    return out


def conv2d_forward(x, w, b, stride=1, pad=0):
    """y[n,f,i,j] = sum_c,ki,kj w[f,c,ki,kj] * x_padded[n,c,i*s+ki,j*s+kj] + b[f]."""
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
        raise ValidationError(
            f"conv2d shape mismatch: input {x.shape}, weight {w.shape}"
        )
    n, _, h, wd = x.shape
    f, c, k, _ = w.shape
    ho = _conv_out_dim(h, k, stride, pad)
    wo = _conv_out_dim(wd, k, stride, pad)
    cols = _im2col(x, k, stride, pad)
    y = (w.reshape(f, -1) @ cols).reshape(n, f, ho, wo) + b[None, :, None, None]
    cache = (x.shape, w, cols, stride, pad)
    return y, cache


def conv2d_backward(dy, cache):
    x_shape, w, cols, stride, pad = cache
    n = dy.shape[0]
    f, c, k, _ = w.shape
    dyf = dy.reshape(n, f, -1)
    db = dyf.sum(axis=(0, 2))
    dw = np.einsum("nfl,ncl->fc", dyf, cols).reshape(w.shape)
    dcols = np.matmul(w.reshape(f, -1).T, dyf)
    dx = _col2im(dcols, x_shape, k, stride, pad)
    return dx, dw, db


def conv_transpose2d_forward(x, w, b, stride=1, pad=0, output_padding=0):
    """Transpose convolution; out dim = (H-1)*stride - 2*pad + k + output_padding."""
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[0]:
        raise ValidationError(
            f"conv_transpose2d shape mismatch: input {x.shape}, weight {w.shape}"
        )
    if output_padding >= stride:
        raise ValidationError("output_padding must be smaller than stride")
    n, ci, h, wd = x.shape
    _, co, k, _ = w.shape
    ho = (h - 1) * stride - 2 * pad + k + output_padding
    wo = (wd - 1) * stride - 2 * pad + k + output_padding
    if ho < 1 or wo < 1:
        raise ValidationError("transpose convolution output would be empty")
    xf = x.reshape(n, ci, -1)
    cols = np.matmul(w.reshape(ci, -1).T, xf)  # [N, co*k*k, H*W]
    y = _col2im(cols, (n, co, ho, wo), k, stride, pad) + b[None, :, None, None]
    cache = (x, w, stride, pad, (n, co, ho, wo), k)
    return y, cache


def conv_transpose2d_backward(dy, cache):
    x, w, stride, pad, out_shape, k = cache
    n, ci, h, wd = x.shape
    dcols = _im2col(dy, k, stride, pad)  # [N, co*k*k, H*W]
    db = dy.sum(axis=(0, 2, 3))
    xf = x.reshape(n, ci, -1)
    dw = np.einsum("nil,nol->io", xf, dcols).reshape(w.shape)
    dx = np.matmul(w.reshape(ci, -1), dcols).reshape(x.shape)
    return dx, dw, db


def _bn_axes(x):
    if x.ndim == 4:
        return (0, 2, 3), (1, x.shape[1], 1, 1)
    if x.ndim == 2:
        return (0,), (1, x.shape[1])
    raise ValidationError("batchnorm expects [N, F] or [N, C, H, W] input")


def batchnorm_forward(
    x, gamma, beta, running_mean, running_var, momentum=0.1, eps=1e-5, train=True
):
    """Batch normalization over the batch (and spatial dims for 4-D input).

    Train mode normalizes with biased batch statistics and returns updated
    running statistics (unbiased variance, torch-style); eval mode uses the
    running statistics unchanged. Returns (y, cache, new_mean, new_var).
    """
    axes, bshape = _bn_axes(x)
    if train:
        if x.shape[0] < 2:
            raise ValidationError("batchnorm train mode needs batch size >= 2")
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        m = int(np.prod([x.shape[a] for a in axes]))
        unbiased = var * m / max(m - 1, 1)
        new_mean = (1 - momentum) * running_mean + momentum * mean
        new_var = (1 - momentum) * running_var + momentum * unbiased
    else:
        mean, var = running_mean, running_var
        new_mean, new_var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean.reshape(bshape)) * inv_std.reshape(bshape)
    y = gamma.reshape(bshape) * xhat + beta.reshape(bshape)
    cache = (xhat, gamma, inv_std, axes, bshape, train)
    return y, cache, new_mean, new_var


def batchnorm_backward(dy, cache):
    xhat, gamma, inv_std, axes, bshape, train = cache
    dgamma = (dy * xhat).sum(axis=axes)
    dbeta = dy.sum(axis=axes)
    g = gamma.reshape(bshape) * inv_std.reshape(bshape)
    if not train:
        return dy * g, dgamma, dbeta
    m = np.prod([xhat.shape[a] for a in axes])
    dx = g * (
        dy
        - dbeta.reshape(bshape) / m
        - xhat * dgamma.reshape(bshape) / m
    )
    return dx, dgamma, dbeta


def leaky_relu_forward(x, slope=0.01):
    y = np.where(x >= 0, x, slope * x)
    return y, (x, slope)


def leaky_relu_backward(dy, cache):
    x, slope = cache
    return dy * np.where(x >= 0, 1.0, slope)


def sigmoid_forward(x):
    y = 1.0 / (1.0 + np.exp(-x))
    return y, y


def sigmoid_backward(dy, cache):
    y = cache
    return dy * y * (1.0 - y)


def dense_forward(x, w, b):
    if x.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ValidationError(f"dense shape mismatch: input {x.shape}, weight {w.shape}")
    return x @ w + b, (x, w)


def dense_backward(dy, cache):
    x, w = cache
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


def flatten_forward(x):
    return x.reshape(x.shape[0], -1), x.shape


def flatten_backward(dy, cache):
    return dy.reshape(cache)


def mse_forward(a, b):
    """Mean over all elements of the squared difference."""
    if a.shape != b.shape:
        raise ValidationError(f"mse shape mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.mean(diff * diff)), diff


def mse_backward(cache, upstream=1.0):
    diff = cache
    g = (2.0 / diff.size) * diff * upstream
    return g, -g
