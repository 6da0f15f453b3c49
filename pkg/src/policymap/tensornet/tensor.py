"""Parameters and the reverse-mode tape.

The networks here are straight chains, so the autodiff machinery is a tape:
every forward op appends a closure that maps the upstream gradient to the
downstream one, accumulating parameter gradients on the way.  ``Graph.backward``
replays the tape in reverse.
"""

from __future__ import annotations

import numpy as np

DEFAULT_DTYPE = np.float32


class Parameter:
    """A trainable array with an accumulated gradient and a plasticity flag.

    Non-plastic parameters never receive gradients: layers skip recording
    their gradient closures, so ``grad`` stays ``None`` through any backward
    pass and optimizers leave the data untouched.
    """

    def __init__(self, data: np.ndarray, name: str = "", plastic: bool = True):
        self.data = np.ascontiguousarray(data)
        self.grad: np.ndarray | None = None
        self.name = name
        self.plastic = plastic

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad = None

    def add_grad(self, g: np.ndarray) -> None:
        if g.shape != self.data.shape:
            raise ValueError(
                f"gradient shape {g.shape} != parameter shape {self.data.shape}"
                f" for {self.name or 'parameter'}"
            )
        if self.grad is None:
            self.grad = g.astype(self.data.dtype, copy=True)
        else:
            self.grad += g

    def __repr__(self):
        return f"Parameter({self.name or 'unnamed'}, shape={self.data.shape}, plastic={self.plastic})"


class Graph:
    """Tape of recorded forward operations, replayed in reverse for gradients.

    Ops are recorded in forward (topological) order; each entry is a closure
    ``g_out -> g_in``.  The final recorded op must be a scalar loss, whose
    closure receives the seed gradient 1.0.
    """

    def __init__(self):
        self._tape: list = []
        self._loss_recorded = False

    def record(self, backward_fn) -> None:
        if self._loss_recorded:
            raise RuntimeError("graph already finalized by a loss op")
        self._tape.append(backward_fn)

    def record_loss(self, backward_fn) -> None:
        self.record(backward_fn)
        self._loss_recorded = True

    def backward(self) -> None:
        if not self._tape:
            raise RuntimeError("backward called before any forward op was recorded")
        if not self._loss_recorded:
            raise RuntimeError("backward called without a recorded loss")
        g = 1.0
        for fn in reversed(self._tape):
            g = fn(g)

    def __len__(self):
        return len(self._tape)


def check_finite(arrays, context: str = "") -> None:
    """Raise if any array contains NaN or Inf.

    ``arrays`` may be a single ndarray, a Parameter, or an iterable of either.
    """
    if isinstance(arrays, (np.ndarray, Parameter)):
        arrays = [arrays]
    for a in arrays:
        data = a.data if isinstance(a, Parameter) else a
        if not np.all(np.isfinite(data)):
            name = getattr(a, "name", "") or "array"
            raise FloatingPointError(f"non-finite values in {name} {context}".strip())


def kaiming_uniform(shape, fan_in: int, rng: np.random.Generator, dtype=DEFAULT_DTYPE) -> np.ndarray:
    """He-style uniform init, bound sqrt(6 / fan_in)."""
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)
