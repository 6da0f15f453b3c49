"""Convolution and dense layers with tape-recorded backward passes."""

from __future__ import annotations

import numpy as np

from . import kernels
from .tensor import DEFAULT_DTYPE, Graph, Parameter, kaiming_uniform

_ACTIVATIONS = ("relu", "sigmoid", "tanh", "none")


def _apply_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0)
    if name == "sigmoid":
        # piecewise form keeps exp() in range for large |z|
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if name == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(name: str, y: np.ndarray, gy: np.ndarray) -> np.ndarray:
    # y is the post-activation output; all three nonlinearities invert from it
    if name == "relu":
        return gy * (y > 0)
    if name == "sigmoid":
        return gy * y * (1.0 - y)
    if name == "tanh":
        return gy * (1.0 - y * y)
    return gy


def _check_activation(name: str) -> str:
    if name not in _ACTIVATIONS:
        raise ValueError(f"unknown activation {name!r}, expected one of {_ACTIVATIONS}")
    return name


class ConvLayer:
    """Valid (unpadded) strided 2-D convolution with an elementwise activation.

    ``rng=None`` zero-initializes; otherwise Kaiming-uniform over the kernel's
    fan-in.  ``input_grad=False`` skips the input-gradient kernel for layers
    that sit directly on observations.
    """

    def __init__(
        self,
        in_ch: int,
        out_ch: int,
        ksize: int,
        stride: int = 1,
        activation: str = "none",
        bias: bool = True,
        rng: np.random.Generator | None = None,
        dtype=DEFAULT_DTYPE,
        name: str = "conv",
        input_grad: bool = True,
    ):
        if ksize < 1 or stride < 1:
            raise ValueError(f"ksize and stride must be >= 1, got {ksize}, {stride}")
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.ksize = ksize
        self.stride = stride
        self.activation = _check_activation(activation)
        self.name = name
        self.input_grad = input_grad
        fan_in = in_ch * ksize * ksize
        if rng is None:
            w = np.zeros((out_ch, in_ch, ksize, ksize), dtype=dtype)
        else:
            w = kaiming_uniform((out_ch, in_ch, ksize, ksize), fan_in, rng, dtype)
        self.kernel = Parameter(w, name=f"{name}.kernel")
        self.bias = Parameter(np.zeros(out_ch, dtype=dtype), name=f"{name}.bias") if bias else None

    @property
    def plastic(self) -> bool:
        return self.kernel.plastic

    @plastic.setter
    def plastic(self, value: bool) -> None:
        self.kernel.plastic = value
        if self.bias is not None:
            self.bias.plastic = value

    def parameters(self) -> list[Parameter]:
        return [self.kernel] + ([self.bias] if self.bias is not None else [])

    def output_shape(self, in_shape):
        c, h, w = in_shape
        if c != self.in_ch:
            raise ValueError(
                f"{self.name}: input shape {tuple(in_shape)} does not match "
                f"kernel {self.kernel.data.shape} (expected {self.in_ch} channels)"
            )
        return (
            self.out_ch,
            kernels.out_extent(h, self.ksize, self.stride),
            kernels.out_extent(w, self.ksize, self.stride),
        )

    def forward(self, x: np.ndarray, graph: Graph | None = None) -> np.ndarray:
        in_shape = tuple(x.shape)
        squeeze = x.ndim == 3
        if squeeze:
            x = x[None]
        if x.ndim != 4 or x.shape[1] != self.in_ch:
            raise ValueError(
                f"{self.name}: input shape {in_shape} does not match "
                f"kernel {self.kernel.data.shape}"
            )
        x = np.ascontiguousarray(x)
        z = kernels.conv2d_forward(x, self.kernel.data, self.stride)
        if self.bias is not None:
            z += self.bias.data[None, :, None, None]
        y = _apply_activation(self.activation, z)

        if graph is not None:
            layer = self

            def bwd(gy):
                if np.isscalar(gy):
                    gy = np.full_like(y, gy)
                elif gy.ndim == 3:
                    gy = gy[None]
                gz = _activation_grad(layer.activation, y, gy)
                gz = np.ascontiguousarray(gz)
                need_dx = layer.input_grad
                dk, dx = kernels.conv2d_backward(x, layer.kernel.data, layer.stride, gz, need_dx)
                if layer.kernel.plastic:
                    layer.kernel.add_grad(dk)
                    if layer.bias is not None:
                        layer.bias.add_grad(gz.sum(axis=(0, 2, 3), dtype=gz.dtype))
                if dx is not None and squeeze:
                    return dx[0]
                return dx

            graph.record(bwd)
        return y[0] if squeeze else y


class LinearLayer:
    """Dense layer ``act(W x + b)``; optionally bias-free and/or nonnegative.

    ``nonnegative=True`` marks the weights for the projection step used by
    the positive-mapping training scheme; the flag itself does not clamp.
    """

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        activation: str = "none",
        bias: bool = True,
        nonnegative: bool = False,
        rng: np.random.Generator | None = None,
        dtype=DEFAULT_DTYPE,
        name: str = "linear",
    ):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.activation = _check_activation(activation)
        self.nonnegative = nonnegative
        self.name = name
        if rng is None:
            w = np.zeros((out_dim, in_dim), dtype=dtype)
        else:
            w = kaiming_uniform((out_dim, in_dim), in_dim, rng, dtype)
        self.weight = Parameter(w, name=f"{name}.weight")
        self.bias = Parameter(np.zeros(out_dim, dtype=dtype), name=f"{name}.bias") if bias else None

    @property
    def plastic(self) -> bool:
        return self.weight.plastic

    @plastic.setter
    def plastic(self, value: bool) -> None:
        self.weight.plastic = value
        if self.bias is not None:
            self.bias.plastic = value

    def parameters(self) -> list[Parameter]:
        return [self.weight] + ([self.bias] if self.bias is not None else [])

    def forward(self, x: np.ndarray, graph: Graph | None = None) -> np.ndarray:
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None]
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(
                f"{self.name}: input shape {tuple(x.shape)} does not match "
                f"weight {self.weight.data.shape}"
            )
        z = x @ self.weight.data.T
        if self.bias is not None:
            z += self.bias.data
        y = _apply_activation(self.activation, z)

        if graph is not None:
            layer = self

            def bwd(gy):
                if np.isscalar(gy):
                    gy = np.full_like(y, gy)
                elif gy.ndim == 1:
                    gy = gy[None]
                gz = _activation_grad(layer.activation, y, gy)
                if layer.weight.plastic:
                    layer.weight.add_grad(gz.T @ x)
                    if layer.bias is not None:
                        layer.bias.add_grad(gz.sum(axis=0, dtype=gz.dtype))
                dx = gz @ layer.weight.data
                return dx[0] if squeeze else dx

            graph.record(bwd)
        return y[0] if squeeze else y


def conv2d_forward(x: np.ndarray, layer: ConvLayer) -> np.ndarray:
    """Single-observation convolution: ``(C,H,W) -> (OC,OH,OW)``."""
    return layer.forward(x)


def linear_forward(x: np.ndarray, layer: LinearLayer) -> np.ndarray:
    """Single-vector dense forward: ``(in,) -> (out,)``."""
    return layer.forward(x)
