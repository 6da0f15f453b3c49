"""Policy network assembly: feature stack, mapping layer, shared head."""

from .network import (
    FEATURE_CHANNELS,
    GRID,
    HEAD_HIDDEN,
    N_ACTIONS,
    POLICY_CHANNELS,
    Agent,
    FeatureLayer,
    MappingLayer,
    OfflinePolicyNet,
    PolicyHead,
    agent_forward,
    build_agent,
    extract_head,
    load_agent,
    new_task_mapping,
    set_plasticity,
    uniform_probs,
)

__all__ = [
    "FEATURE_CHANNELS",
    "GRID",
    "HEAD_HIDDEN",
    "N_ACTIONS",
    "POLICY_CHANNELS",
    "Agent",
    "FeatureLayer",
    "MappingLayer",
    "OfflinePolicyNet",
    "PolicyHead",
    "agent_forward",
    "build_agent",
    "extract_head",
    "load_agent",
    "new_task_mapping",
    "set_plasticity",
    "uniform_probs",
]
