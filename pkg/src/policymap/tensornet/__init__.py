"""Minimal reverse-mode tensor core: conv/dense layers, losses, Adam, checkpoints."""

from .adam import AdamState, adam_step, project_nonnegative
from .checkpoint import load_checkpoint, save_checkpoint
from .layers import ConvLayer, LinearLayer, conv2d_forward, linear_forward
from .ops import (
    cross_entropy_loss,
    entropy,
    huber_q_loss,
    log_softmax_2d,
    policy_ce_loss,
    softmax,
    softmax_2d,
)
from .tensor import DEFAULT_DTYPE, Graph, Parameter, check_finite, kaiming_uniform

__all__ = [
    "AdamState",
    "adam_step",
    "project_nonnegative",
    "load_checkpoint",
    "save_checkpoint",
    "ConvLayer",
    "LinearLayer",
    "conv2d_forward",
    "linear_forward",
    "cross_entropy_loss",
    "entropy",
    "huber_q_loss",
    "log_softmax_2d",
    "policy_ce_loss",
    "softmax",
    "softmax_2d",
    "DEFAULT_DTYPE",
    "Graph",
    "Parameter",
    "check_finite",
    "kaiming_uniform",
]
