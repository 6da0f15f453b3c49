"""Supervised training of the feature stack on the object classification task."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..agentnet import FeatureLayer, GRID
from ..tensornet import AdamState, Graph, LinearLayer, adam_step, check_finite, policy_ce_loss
from ..taskgen import LabeledImages

N_CLASSES = 27


@dataclass
class ClassifierConfig:
    epochs: int = 30
    batch_size: int = 32
    lr: float = 3e-3
    stop_accuracy: float | None = 0.98  # stop early once the test set clears this


@dataclass
class ClassifierResult:
    test_accuracy: float
    epochs_run: int
    initial_accuracy: float
    train_accuracy: float
    accuracy_curve: list = field(default_factory=list)


def _forward_logits(feature: FeatureLayer, head: LinearLayer, x: np.ndarray,
                    graph: Graph | None = None) -> np.ndarray:
    feats = feature.forward(x, graph)
    b = feats.shape[0]
    if graph is not None:
        shape = feats.shape

        def bwd_flat(g):
            return g.reshape(shape)

        graph.record(bwd_flat)
    return head.forward(np.ascontiguousarray(feats).reshape(b, -1), graph)


def _accuracy(feature: FeatureLayer, head: LinearLayer, split: LabeledImages,
              batch_size: int = 256) -> float:
    correct = 0
    for i in range(0, len(split.labels), batch_size):
        logits = _forward_logits(feature, head, split.images[i : i + batch_size])
        correct += int((np.argmax(logits, axis=1) == split.labels[i : i + batch_size]).sum())
    return correct / len(split.labels)


def train_classifier(
    train: LabeledImages,
    test: LabeledImages,
    feature: FeatureLayer,
    cfg: ClassifierConfig | None = None,
    seed: int = 0,
) -> tuple[FeatureLayer, ClassifierResult]:
    """Cross-entropy training behind a temporary dense classification head.

    Returns the feature layer (head detached) and the accuracy report.
    """
    if len(train.labels) == 0:
        raise ValueError("empty training dataset")
    cfg = cfg or ClassifierConfig()
    rng = np.random.default_rng(seed)
    in_dim = feature.conv2.out_ch * GRID * GRID
    head = LinearLayer(in_dim, N_CLASSES, bias=True, rng=rng, name="classifier.head")
    feature.plastic = True
    adam = AdamState(feature.parameters() + head.parameters(), lr=cfg.lr)

    result = ClassifierResult(
        test_accuracy=0.0,
        epochs_run=0,
        initial_accuracy=_accuracy(feature, head, test),
        train_accuracy=0.0,
    )
    n = len(train.labels)
    labels = train.labels.astype(np.int64)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        correct = 0
        for i in range(0, n, cfg.batch_size):
            idx = order[i : i + cfg.batch_size]
            x = train.images[idx]
            y = labels[idx]
            graph = Graph()
            logits = _forward_logits(feature, head, x, graph)
            policy_ce_loss(logits, y, 0.0, graph)
            graph.backward()
            adam_step(adam)
            correct += int((np.argmax(logits, axis=1) == y).sum())
        check_finite(feature.parameters() + head.parameters(), f"after epoch {epoch}")
        result.train_accuracy = correct / n
        result.test_accuracy = _accuracy(feature, head, test)
        result.accuracy_curve.append(result.test_accuracy)
        result.epochs_run = epoch + 1
        if cfg.stop_accuracy is not None and result.test_accuracy >= cfg.stop_accuracy:
            break
    feature.plastic = False
    return feature, result
