"""Evaluation matrices, continual-learning metrics, and metric file writers.

Metric streams are JSON-lines with sorted keys so byte output is a pure
function of the recorded values.  Wall-clock timings go to a separate
``timing.jsonl`` sidecar, keeping the metrics files bitwise reproducible.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

N_TASKS = 5


class EvalMatrix:
    """A[i][j]: accuracy on task j after completing training on task i.

    Rows are written exactly once, in training order.
    """

    def __init__(self, n_tasks: int = N_TASKS):
        self.n_tasks = n_tasks
        self.values = np.full((n_tasks, n_tasks), np.nan)
        self._filled = [False] * n_tasks

    def fill_row(self, i: int, accuracies) -> None:
        if self._filled[i]:
            raise ValueError(f"eval matrix row {i} already filled")
        if i > 0 and not self._filled[i - 1]:
            raise ValueError(f"eval matrix rows must fill in order; row {i - 1} missing")
        acc = np.asarray(accuracies, dtype=np.float64)
        if acc.shape != (self.n_tasks,):
            raise ValueError(f"expected {self.n_tasks} accuracies, got {acc.shape}")
        if np.any((acc < 0) | (acc > 1)):
            raise ValueError("accuracies must lie in [0, 1]")
        self.values[i] = acc
        self._filled[i] = True

    @property
    def complete(self) -> bool:
        return all(self._filled)

    @classmethod
    def from_array(cls, arr) -> "EvalMatrix":
        arr = np.asarray(arr, dtype=np.float64)
        m = cls(arr.shape[0])
        for i in range(arr.shape[0]):
            m.fill_row(i, arr[i])
        return m


def backward_transfer(matrix: EvalMatrix) -> float:
    """Mean over earlier tasks of (final accuracy - just-trained accuracy)."""
    if not matrix.complete:
        raise ValueError("backward_transfer requires a complete eval matrix")
    a = matrix.values
    n = matrix.n_tasks
    diffs = [a[n - 1, j] - a[j, j] for j in range(n - 1)]
    return float(np.mean(diffs))


def forgetting(matrix: EvalMatrix) -> float:
    """Mean over earlier tasks of (just-trained accuracy - final accuracy)."""
    return -backward_transfer(matrix)


class JsonlWriter:
    """Append-only JSON-lines stream with stable key order."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, "w")

    def write(self, record: dict) -> None:
        self._fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")

    def close(self) -> None:
        self._fh.flush()
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_csv(path, header: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def save_matrix_csv(path, matrix: EvalMatrix) -> None:
    header = ["trained_through"] + [f"task{j + 1}" for j in range(matrix.n_tasks)]
    rows = [
        [f"task{i + 1}"] + [f"{v:.6f}" for v in matrix.values[i]]
        for i in range(matrix.n_tasks)
    ]
    write_csv(path, header, rows)


def load_matrix_csv(path) -> EvalMatrix:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    data = [[float(v) for v in row[1:]] for row in rows[1:]]
    return EvalMatrix.from_array(np.array(data))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")
