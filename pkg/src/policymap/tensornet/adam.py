"""Adam with bias correction, plus the nonnegativity projection."""

from __future__ import annotations

import numpy as np

from .layers import LinearLayer
from .tensor import Parameter


class AdamState:
    """Per-parameter first/second moments and the shared step counter."""

    def __init__(self, params: list[Parameter], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {id(p): np.zeros_like(p.data) for p in params}
        self.v = {id(p): np.zeros_like(p.data) for p in params}
        self._params = list(params)


def adam_step(state: AdamState, params: list[Parameter] | None = None) -> None:
    """One Adam update over ``params`` (defaults to the state's parameter list).

    Parameters without an accumulated gradient (frozen, or untouched by the
    last backward pass) are skipped.  Gradients are consumed and cleared.
    """
    if params is None:
        params = state._params
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1**t
    bias2 = 1.0 - b2**t
    for p in params:
        if p.grad is None:
            continue
        m = state.m.get(id(p))
        v = state.v.get(id(p))
        if m is None:
            raise KeyError(f"parameter {p.name!r} is not tracked by this AdamState")
        if p.grad.shape != p.data.shape:
            raise ValueError(
                f"gradient shape {p.grad.shape} != parameter shape {p.data.shape} for {p.name!r}"
            )
        g = p.grad
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        mhat = m / bias1
        vhat = v / bias2
        p.data -= (state.lr * mhat / (np.sqrt(vhat) + state.eps)).astype(p.data.dtype)
        p.grad = None


def project_nonnegative(layer: LinearLayer) -> LinearLayer:
    """Clamp a nonnegative-flagged layer's weights to ``max(w, 0)`` in place."""
    if not layer.nonnegative:
        raise ValueError(
            f"project_nonnegative called on layer {layer.name!r} without the nonnegative flag"
        )
    np.maximum(layer.weight.data, 0, out=layer.weight.data)
    return layer
