"""Parameter-holding layers built on the functional ops.

Each layer stores its parameters and, after forward(), the cache needed by
backward(); backward() fills self.grads keyed like self.params. Weights use
fan-in-scaled uniform initialization from the rng handed to the
constructor, so builds are deterministic under a seed.
"""

import numpy as np

from . import ops


def _uniform_init(rng, shape, fan_in, dtype):
    limit = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Layer:
    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    def forward(self, x, train=False):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError

    def state(self) -> dict[str, np.ndarray]:
        """All persistent arrays (parameters plus buffers such as BN stats)."""
        return dict(self.params)


class Conv2d(Layer):
    def __init__(self, in_ch, out_ch, kernel=3, stride=1, pad=0, rng=None, dtype=np.float32):
        super().__init__()
        self.stride, self.pad = stride, pad
        fan_in = in_ch * kernel * kernel
        self.params = {
            "w": _uniform_init(rng, (out_ch, in_ch, kernel, kernel), fan_in, dtype),
            "b": np.zeros(out_ch, dtype=dtype),
        }

    def forward(self, x, train=False):
        y, self._cache = ops.conv2d_forward(
            x, self.params["w"], self.params["b"], self.stride, self.pad
        )
        return y

    def backward(self, dy):
        dx, dw, db = ops.conv2d_backward(dy, self._cache)
        self.grads = {"w": dw, "b": db}
        return dx


class ConvTranspose2d(Layer):
    def __init__(
        self, in_ch, out_ch, kernel=3, stride=1, pad=0, output_padding=0,
        rng=None, dtype=np.float32,
    ):
        super().__init__()
        self.stride, self.pad, self.output_padding = stride, pad, output_padding
        fan_in = in_ch * kernel * kernel
        self.params = {
            "w": _uniform_init(rng, (in_ch, out_ch, kernel, kernel), fan_in, dtype),
            "b": np.zeros(out_ch, dtype=dtype),
        }

    def forward(self, x, train=False):
        y, self._cache = ops.conv_transpose2d_forward(
            x, self.params["w"], self.params["b"],
            self.stride, self.pad, self.output_padding,
        )
        return y

    def backward(self, dy):
        dx, dw, db = ops.conv_transpose2d_backward(dy, self._cache)
        self.grads = {"w": dw, "b": db}
        return dx


class _BatchNorm(Layer):
    def __init__(self, num_features, momentum=0.1, eps=1e-5, dtype=np.float32):
        super().__init__()
        self.momentum, self.eps = momentum, eps
        self.params = {
            "gamma": np.ones(num_features, dtype=dtype),
            "beta": np.zeros(num_features, dtype=dtype),
        }
        self.running_mean = np.zeros(num_features, dtype=dtype)
        self.running_var = np.ones(num_features, dtype=dtype)

    def forward(self, x, train=False):
        y, self._cache, new_mean, new_var = ops.batchnorm_forward(
            x, self.params["gamma"], self.params["beta"],
            self.running_mean, self.running_var,
            momentum=self.momentum, eps=self.eps, train=train,
        )
        if train:
            self.running_mean = new_mean.astype(self.running_mean.dtype)
            self.running_var = new_var.astype(self.running_var.dtype)
        return y

    def backward(self, dy):
        dx, dgamma, dbeta = ops.batchnorm_backward(dy, self._cache)
        self.grads = {"gamma": dgamma, "beta": dbeta}
        return dx

    def state(self):
        return {
            **self.params,
            "running_mean": self.running_mean,
            "running_var": self.running_var,
        }


class BatchNorm2d(_BatchNorm):
    pass


class BatchNorm1d(_BatchNorm):
    pass


class Dense(Layer):
    def __init__(self, in_features, out_features, rng=None, dtype=np.float32):
        super().__init__()
        self.params = {
            "w": _uniform_init(rng, (in_features, out_features), in_features, dtype),
            "b": np.zeros(out_features, dtype=dtype),
        }

    def forward(self, x, train=False):
        y, self._cache = ops.dense_forward(x, self.params["w"], self.params["b"])
        return y

    def backward(self, dy):
        dx, dw, db = ops.dense_backward(dy, self._cache)
        self.grads = {"w": dw, "b": db}
        return dx


class Flatten(Layer):
    def forward(self, x, train=False):
        y, self._cache = ops.flatten_forward(x)
        return y

    def backward(self, dy):
        return ops.flatten_backward(dy, self._cache)


class Reshape(Layer):
    def __init__(self, shape):
        super().__init__()
        self.shape = tuple(shape)

    def forward(self, x, train=False):
        self._cache = x.shape
        return x.reshape((x.shape[0],) + self.shape)

    def backward(self, dy):
        return dy.reshape(self._cache)


class LeakyReLU(Layer):
    def __init__(self, slope=0.01):
        super().__init__()
        self.slope = slope

    def forward(self, x, train=False):
        y, self._cache = ops.leaky_relu_forward(x, self.slope)
        return y

    def backward(self, dy):
        return ops.leaky_relu_backward(dy, self._cache)


class Sigmoid(Layer):
    def forward(self, x, train=False):
        y, self._cache = ops.sigmoid_forward(x)
        return y

    def backward(self, dy):
        return ops.sigmoid_backward(dy, self._cache)


class Sequential:
    """A named chain of layers with a joint forward/backward."""

    def __init__(self, layers: list[tuple[str, Layer]]):
        self.layers = layers

    def forward(self, x, train=False):
        for _, layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward(self, dy):
        for _, layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def named_params(self, prefix=""):
        out = {}
        for name, layer in self.layers:
            for pname, arr in layer.params.items():
                out[f"{prefix}{name}.{pname}"] = arr
        return out

    def named_grads(self, prefix=""):
        out = {}
        for name, layer in self.layers:
            for pname, arr in layer.grads.items():
                out[f"{prefix}{name}.{pname}"] = arr
        return out

    def named_state(self, prefix=""):
        out = {}
        for name, layer in self.layers:
            for sname, arr in layer.state().items():
                out[f"{prefix}{name}.{sname}"] = arr
        return out

    def load_state(self, state: dict[str, np.ndarray], prefix=""):
        from ..errors import SchemaError

        for name, layer in self.layers:
            own = layer.state()
            for sname in own:
                key = f"{prefix}{name}.{sname}"
                if key not in state:
                    raise SchemaError(f"checkpoint is missing tensor '{key}'")
                arr = state[key]
                if arr.shape != own[sname].shape:
                    raise SchemaError(
                        f"tensor '{key}' has shape {arr.shape}, expected {own[sname].shape}"
                    )
                if sname in layer.params:
                    layer.params[sname] = arr.copy()
                else:
                    setattr(layer, sname, arr.copy())
