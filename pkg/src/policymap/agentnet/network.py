"""The three-component policy network.

A frozen convolutional feature stack feeds a per-task mapping layer whose
weights are clamped nonnegative, which drives a shared bias-free policy head.
Because the head has no biases and odd/linear activations, zero drive from
the mapping layer yields zero logits, i.e. an exactly uniform action
distribution: a fresh task starts at the default random policy.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..tensornet import (
    ConvLayer,
    Graph,
    LinearLayer,
    load_checkpoint,
    save_checkpoint,
    softmax,
    softmax_2d,
)
from ..worldsim import IMAGE_SIZE, Frame

N_ACTIONS = 5
POLICY_CHANNELS = 8  # width of the policy space per grid cell
FEATURE_CHANNELS = 64
GRID = 3  # feature/mapping output is (channels, 3, 3)
HEAD_HIDDEN = 64


class FeatureLayer:
    """Two convolutions: 4x4/stride 4 relu into 7x7/stride 7 sigmoid.

    The strides tile an 84x84 input into a 3x3 grid of large receptive
    fields; the sigmoid keeps every output in (0,1), the positive input the
    mapping layer relies on.  Pixels arrive in [0,1] and are centered before
    the first convolution; the shift is part of the layer so offline training
    and online acting see identical statistics.
    """

    INPUT_CENTER = 0.5

    def __init__(self, rng: np.random.Generator | None = None, in_ch: int = 3,
                 dtype=np.float32):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.conv1 = ConvLayer(
            in_ch, 32, 4, stride=4, activation="relu", bias=True, rng=rng,
            name="feature.conv1", input_grad=False, dtype=dtype,
        )
        self.conv2 = ConvLayer(
            32, FEATURE_CHANNELS, 7, stride=7, activation="sigmoid", bias=True, rng=rng,
            name="feature.conv2", dtype=dtype,
        )

    @property
    def plastic(self) -> bool:
        return self.conv1.plastic

    @plastic.setter
    def plastic(self, value: bool) -> None:
        self.conv1.plastic = value
        self.conv2.plastic = value

    def parameters(self):
        return self.conv1.parameters() + self.conv2.parameters()

    def forward(self, x: np.ndarray, graph: Graph | None = None) -> np.ndarray:
        x = x - x.dtype.type(self.INPUT_CENTER)
        return self.conv2.forward(self.conv1.forward(x, graph), graph)

    def state_dict(self) -> dict[str, np.ndarray]:
        return {
            "feature.conv1.kernel": self.conv1.kernel.data,
            "feature.conv1.bias": self.conv1.bias.data,
            "feature.conv2.kernel": self.conv2.kernel.data,
            "feature.conv2.bias": self.conv2.bias.data,
        }

    def load_state_dict(self, d: dict[str, np.ndarray]) -> None:
        for key, param in (
            ("feature.conv1.kernel", self.conv1.kernel),
            ("feature.conv1.bias", self.conv1.bias),
            ("feature.conv2.kernel", self.conv2.kernel),
            ("feature.conv2.bias", self.conv2.bias),
        ):
            if d[key].shape != param.data.shape:
                raise ValueError(f"{key}: checkpoint shape {d[key].shape} != {param.data.shape}")
            param.data = d[key].astype(param.data.dtype).copy()


class MappingLayer:
    """Per-cell nonnegative channel mixer: (B,64,3,3) -> (B,K,3,3).

    Bias-free, zero-initialized, weights clamped >= 0 after every optimizer
    step; the only always-plastic component online.
    """

    def __init__(self, in_channels: int = FEATURE_CHANNELS, out_channels: int = POLICY_CHANNELS,
                 dtype=np.float32):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.linear = LinearLayer(
            in_channels, out_channels, activation="none", bias=False,
            nonnegative=True, rng=None, name="mapping", dtype=dtype,
        )

    @property
    def weights(self):
        return self.linear.weight

    @property
    def plastic(self) -> bool:
        return self.linear.plastic

    @plastic.setter
    def plastic(self, value: bool) -> None:
        self.linear.plastic = value

    def parameters(self):
        return self.linear.parameters()

    def reinitialize(self) -> None:
        self.linear.weight.data[:] = 0.0

    def forward(self, feat: np.ndarray, graph: Graph | None = None) -> np.ndarray:
        squeeze = feat.ndim == 3
        if squeeze:
            feat = feat[None]
        b, c, gh, gw = feat.shape
        if c != self.in_channels:
            raise ValueError(f"mapping: expected {self.in_channels} channels, got {c}")
        cells = b * gh * gw
        if graph is not None:
            def bwd_pre(g):  # (cells, C) -> (B, C, gh, gw)
                back = g.reshape(b, gh, gw, c).transpose(0, 3, 1, 2)
                return back[0] if squeeze else back
            graph.record(bwd_pre)
        flat = np.ascontiguousarray(feat.transpose(0, 2, 3, 1)).reshape(cells, c)
        y = self.linear.forward(flat, graph)
        if graph is not None:
            k = self.out_channels
            def bwd_post(g):  # (B, K, gh, gw) -> (cells, K)
                if g.ndim == 3:
                    g = g[None]
                return np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(cells, k)
            graph.record(bwd_post)
        out = y.reshape(b, gh, gw, self.out_channels).transpose(0, 3, 1, 2)
        return out[0] if squeeze else out


class PolicyHead:
    """Shared action head: flatten -> dense tanh -> dense logits, bias-free.

    The logit layer's init is scaled down so an untrained head starts close
    to the uniform policy; a near-deterministic initial policy cannot collect
    the successes sparse-reward training bootstraps from.
    """

    FINAL_INIT_SCALE = 0.1

    def __init__(self, rng: np.random.Generator | None = None,
                 in_channels: int = POLICY_CHANNELS, hidden: int = HEAD_HIDDEN,
                 dtype=np.float32):
        self.in_channels = in_channels
        self.in_dim = in_channels * GRID * GRID
        self.l1 = LinearLayer(
            self.in_dim, hidden, activation="tanh", bias=False, rng=rng, name="head.l1",
            dtype=dtype,
        )
        self.l2 = LinearLayer(
            hidden, N_ACTIONS, activation="none", bias=False, rng=rng, name="head.l2",
            dtype=dtype,
        )
        if rng is not None:
            self.l2.weight.data *= dtype(self.FINAL_INIT_SCALE)

    @property
    def plastic(self) -> bool:
        return self.l1.plastic

    @plastic.setter
    def plastic(self, value: bool) -> None:
        self.l1.plastic = value
        self.l2.plastic = value

    def parameters(self):
        return self.l1.parameters() + self.l2.parameters()

    def forward(self, sp: np.ndarray, graph: Graph | None = None) -> np.ndarray:
        squeeze = sp.ndim == 3
        if squeeze:
            sp = sp[None]
        b = sp.shape[0]
        if sp.shape[1:] != (self.in_channels, GRID, GRID):
            raise ValueError(
                f"policy head expects (B,{self.in_channels},{GRID},{GRID}), got {sp.shape}"
            )
        if graph is not None:
            shape = sp.shape
            def bwd_flat(g):  # (B, in_dim) -> (B, K, 3, 3)
                back = g.reshape(shape)
                return back[0] if squeeze else back
            graph.record(bwd_flat)
        flat = np.ascontiguousarray(sp).reshape(b, self.in_dim)
        logits = self.l2.forward(self.l1.forward(flat, graph), graph)
        return logits[0] if squeeze else logits

    def state_dict(self) -> dict[str, np.ndarray]:
        return {"head.l1.weight": self.l1.weight.data, "head.l2.weight": self.l2.weight.data}

    def load_state_dict(self, d: dict[str, np.ndarray]) -> None:
        for key, param in (("head.l1.weight", self.l1.weight), ("head.l2.weight", self.l2.weight)):
            if d[key].shape != param.data.shape:
                raise ValueError(f"{key}: checkpoint shape {d[key].shape} != {param.data.shape}")
            param.data = d[key].astype(param.data.dtype).copy()

    def copy(self) -> "PolicyHead":
        new = PolicyHead(rng=None, in_channels=self.in_channels, hidden=self.l1.out_dim)
        new.load_state_dict({k: v.copy() for k, v in self.state_dict().items()})
        return new


class Agent:
    """Feature + mapping + head with a mode switch for policy logits or Q-values."""

    def __init__(self, feature: FeatureLayer, mapping: MappingLayer, head: PolicyHead,
                 head_mode: str = "policy_logits"):
        if head_mode not in ("policy_logits", "q_values"):
            raise ValueError(f"unknown head mode {head_mode!r}")
        if head.in_channels != mapping.out_channels:
            raise ValueError(
                f"head expects {head.in_channels} policy channels, mapping provides "
                f"{mapping.out_channels}"
            )
        self.feature = feature
        self.mapping = mapping
        self.head = head
        self.head_mode = head_mode
        self.adaptive = False

    def parameters(self):
        return self.feature.parameters() + self.mapping.parameters() + self.head.parameters()

    def plastic_parameters(self):
        return [p for p in self.parameters() if p.plastic]

    def features(self, obs: np.ndarray) -> np.ndarray:
        """Frozen feature pass on rgb observations (3,84,84) or batches."""
        return self.feature.forward(obs)

    def logits_from_features(self, feats: np.ndarray, graph: Graph | None = None) -> np.ndarray:
        return self.head.forward(self.mapping.forward(feats, graph), graph)

    def forward(self, frame: Frame) -> np.ndarray:
        """Action distribution (policy mode) or Q-values (q mode) for one frame."""
        if frame.mode != "rgb":
            raise ValueError(f"agent expects rgb frames, got mode {frame.mode!r}")
        if frame.data.shape != (3, IMAGE_SIZE, IMAGE_SIZE):
            raise ValueError(
                f"agent expects (3,{IMAGE_SIZE},{IMAGE_SIZE}) frames, got {frame.data.shape}"
            )
        logits = self.logits_from_features(self.features(frame.data))
        if self.head_mode == "q_values":
            return logits
        return softmax(logits)

    def save(self, path) -> None:
        tensors = {}
        tensors.update(self.feature.state_dict())
        tensors.update({"mapping.weights": self.mapping.weights.data})
        tensors.update(self.head.state_dict())
        save_checkpoint(path, tensors)
        manifest = [
            f"policy_channels = {self.mapping.out_channels}",
            f"head_mode = {self.head_mode}",
            f"adaptive = {str(self.adaptive).lower()}",
            f"feature_plastic = {str(self.feature.plastic).lower()}",
            f"mapping_plastic = {str(self.mapping.plastic).lower()}",
            f"head_plastic = {str(self.head.plastic).lower()}",
        ]
        with open(str(path) + ".manifest", "w") as fh:
            fh.write("\n".join(manifest) + "\n")


def agent_forward(agent: Agent, frame: Frame) -> np.ndarray:
    """Module-level alias for ``Agent.forward``."""
    return agent.forward(frame)


def new_task_mapping(agent: Agent) -> Agent:
    """Zero the mapping layer: the agent restarts at the default policy."""
    agent.mapping.reinitialize()
    return agent


def set_plasticity(agent: Agent, adaptive: bool) -> Agent:
    """Online plasticity: mapping always learns, head only when adaptive."""
    agent.adaptive = bool(adaptive)
    agent.feature.plastic = False
    agent.mapping.plastic = True
    agent.head.plastic = bool(adaptive)
    return agent


class OfflinePolicyNet:
    """Saliency-input network trained end to end on the single-object task.

    Its downsampler mirrors the feature layer's strides so the trained head
    sees the same 3x3 spatial semantics the mapping layer will later drive.
    """

    def __init__(self, rng: np.random.Generator | None = None,
                 policy_channels: int = POLICY_CHANNELS):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.conv1 = ConvLayer(
            1, 16, 4, stride=4, activation="relu", bias=True, rng=rng,
            name="offline.conv1", input_grad=False,
        )
        self.conv2 = ConvLayer(
            16, policy_channels, 7, stride=7, activation="sigmoid", bias=True, rng=rng,
            name="offline.conv2",
        )
        self.head = PolicyHead(rng=rng, in_channels=policy_channels)
        self.converged = False

    def parameters(self):
        return self.conv1.parameters() + self.conv2.parameters() + self.head.parameters()

    def forward(self, x: np.ndarray, graph: Graph | None = None) -> np.ndarray:
        return self.head.forward(self.conv2.forward(self.conv1.forward(x, graph), graph), graph)

    def act_probs(self, frame: Frame) -> np.ndarray:
        if frame.mode != "saliency":
            raise ValueError(f"offline policy net expects saliency frames, got {frame.mode!r}")
        return softmax(self.forward(frame.data[None])[0])


def extract_head(offline_net: OfflinePolicyNet) -> PolicyHead:
    """Copy the trained head out of the offline net; downsampler is discarded."""
    if not offline_net.converged:
        warnings.warn("extracting head from an unconverged offline policy net", stacklevel=2)
    return offline_net.head.copy()


def build_agent(
    feature_state: dict | None = None,
    head_state: dict | None = None,
    rng: np.random.Generator | None = None,
    head_mode: str = "policy_logits",
    adaptive: bool = False,
    policy_channels: int = POLICY_CHANNELS,
) -> Agent:
    """Assemble an agent; missing checkpoint states get random layers.

    The mapping layer always starts at zeros (the default policy).
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    feature = FeatureLayer(rng=rng)
    if feature_state is not None:
        feature.load_state_dict(feature_state)
    head = PolicyHead(rng=rng, in_channels=policy_channels)
    if head_state is not None:
        head.load_state_dict(head_state)
    agent = Agent(feature, MappingLayer(out_channels=policy_channels), head, head_mode=head_mode)
    return set_plasticity(agent, adaptive)


def load_agent(path, head_mode: str = "policy_logits") -> Agent:
    """Rebuild an agent from a checkpoint written by ``Agent.save``."""
    tensors = load_checkpoint(path)
    policy_channels = tensors["mapping.weights"].shape[0]
    agent = build_agent(
        feature_state=tensors, head_state=tensors, head_mode=head_mode,
        policy_channels=policy_channels,
    )
    agent.mapping.weights.data = tensors["mapping.weights"].copy()
    return agent


def uniform_probs() -> np.ndarray:
    return np.full(N_ACTIONS, np.float32(1.0) / np.float32(N_ACTIONS), dtype=np.float32)
