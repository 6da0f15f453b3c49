"""Softmax, cross-entropy and entropy, plus the tape-recorded training losses.

Per-sample math runs in the input dtype; reductions over batches accumulate
in float64.
"""

from __future__ import annotations

import numpy as np

from .tensor import Graph


def log_softmax_2d(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def softmax_2d(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stable softmax of a single logit vector."""
    logits = np.asarray(logits)
    if logits.ndim != 1 or logits.shape[0] < 1:
        raise ValueError(f"softmax expects a nonempty 1-D vector, got shape {logits.shape}")
    if not np.all(np.isfinite(logits)):
        raise ValueError("softmax requires finite logits")
    return softmax_2d(logits[None])[0]


def cross_entropy_loss(logits: np.ndarray, target: int) -> float:
    """Negative log-probability of ``target`` under softmax(logits)."""
    logits = np.asarray(logits)
    if not 0 <= target < logits.shape[0]:
        raise ValueError(f"target {target} out of range for {logits.shape[0]} classes")
    return float(-log_softmax_2d(logits[None])[0, target])

def entropy(logits: np.ndarray) -> float:
    """Shannon entropy (nats) of softmax(logits)."""
    logits = np.asarray(logits)
    logp = log_softmax_2d(logits[None])[0]
    p = np.exp(logp)
    return float(-(p * logp).sum(dtype=np.float64))


def policy_ce_loss(
    logits: np.ndarray,
    targets: np.ndarray,
    entropy_coeff: float = 0.0,
    graph: Graph | None = None,
):
    """Mean cross-entropy minus ``entropy_coeff`` times mean entropy.

    ``logits`` is ``(N, A)``; ``targets`` is ``(N,)`` int.  Returns
    ``(loss, ce_mean, entropy_mean)`` as float64 scalars and records the
    logit gradient on ``graph``.
    """
    n, n_actions = logits.shape
    if targets.shape != (n,):
        raise ValueError(f"targets shape {targets.shape} != ({n},)")
    if targets.min(initial=0) < 0 or targets.max(initial=0) >= n_actions:
        raise ValueError("target action index out of range")
    logp = log_softmax_2d(logits)
    p = np.exp(logp)
    rows = np.arange(n)
    ce = -logp[rows, targets].mean(dtype=np.float64)
    ent_rows = -(p * logp).sum(axis=1)
    ent = ent_rows.mean(dtype=np.float64)
    loss = ce - entropy_coeff * ent

    if graph is not None:

        def bwd(gseed):
            onehot = np.zeros_like(p)
            onehot[rows, targets] = 1
            dce = (p - onehot) / n
            # dH/dz = -p * (log p + H) per row
            dent = -p * (logp + ent_rows[:, None]) / n
            g = (dce - entropy_coeff * dent) * gseed
            return g.astype(logits.dtype, copy=False)

        graph.record_loss(bwd)
    return float(loss), float(ce), float(ent)


def huber_q_loss(
    q_values: np.ndarray,
    actions: np.ndarray,
    targets: np.ndarray,
    graph: Graph | None = None,
    delta: float = 1.0,
) -> float:
    """Mean Huber loss between ``q_values[i, actions[i]]`` and ``targets[i]``."""
    n = q_values.shape[0]
    rows = np.arange(n)
    err = (q_values[rows, actions] - targets).astype(np.float64)
    a = np.abs(err)
    quad = np.minimum(a, delta)
    loss = float((0.5 * quad**2 + delta * (a - quad)).mean())

    if graph is not None:

        def bwd(gseed):
            g = np.zeros_like(q_values)
            g[rows, actions] = np.clip(err, -delta, delta) * (gseed / n)
            return g.astype(q_values.dtype, copy=False)

        graph.record_loss(bwd)
    return loss
