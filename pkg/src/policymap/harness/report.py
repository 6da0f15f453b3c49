"""Tables and static SVG plots regenerated from persisted run records.

SVG output is made byte-deterministic by pinning matplotlib's hash salt and
stripping the creation date, so regenerating a report from the same records
produces identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .metrics import load_matrix_csv, write_csv

plt.rcParams["svg.hashsalt"] = "policymap"

_SVG_KW = {"format": "svg", "metadata": {"Date": None}}


def _read_jsonl(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _read_summary(exp_dir: Path):
    p = exp_dir / "summary.json"
    return json.loads(p.read_text()) if p.exists() else None


def plot_accuracy_curve(metrics_path, out_path, run_id: str | None = None) -> int:
    """Trailing-success curve over one continual run, task boundaries marked.

    Returns the number of boundary markers drawn (one per task end).
    """
    records = _read_jsonl(metrics_path)
    if not records:
        raise ValueError(f"no records in {metrics_path}")
    if run_id is None:
        run_id = records[0]["run_id"]
    records = [r for r in records if r["run_id"] == run_id]
    ys = [r["trailing25"] for r in records]
    boundaries = []
    for i, r in enumerate(records[1:], start=1):
        if r["task_id"] != records[i - 1]["task_id"]:
            boundaries.append(i)
    boundaries.append(len(records))

    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.plot(np.arange(1, len(ys) + 1), ys, lw=1.0, color="#1f6fb2")
    for b in boundaries:
        ax.axvline(b, color="#888888", ls="--", lw=0.8)
    ax.set_xlabel("episode")
    ax.set_ylabel("trailing success")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(f"task accuracy over consecutive tasks ({run_id})")
    fig.tight_layout()
    fig.savefig(out_path, **_SVG_KW)
    plt.close(fig)
    return len(boundaries)


def plot_accuracy_bars(matrix_csvs: dict, out_path) -> None:
    """Grouped bars: accuracy on each task after each training stage."""
    fig, axes = plt.subplots(1, len(matrix_csvs), figsize=(5 * len(matrix_csvs), 3.2),
                             squeeze=False)
    for ax, (label, csv_path) in zip(axes[0], matrix_csvs.items()):
        m = load_matrix_csv(csv_path).values
        n = m.shape[0]
        width = 0.8 / n
        for j in range(n):
            ax.bar(np.arange(n) + j * width, m[:, j], width=width, label=f"task {j + 1}")
        ax.set_xticks(np.arange(n) + 0.4 - width / 2)
        ax.set_xticklabels([f"after {i + 1}" for i in range(n)])
        ax.set_ylim(0, 1.05)
        ax.set_ylabel("accuracy")
        ax.set_title(label)
    axes[0][-1].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, **_SVG_KW)
    plt.close(fig)


def emit_report(out_root, report_dir=None) -> dict:
    """Collect persisted records under ``out_root`` into tables and plots."""
    out_root = Path(out_root)
    report_dir = Path(report_dir) if report_dir else out_root / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    produced = {"tables": [], "plots": []}
    found = False

    abl = out_root / "ablation"
    if (abl / "table1.csv").exists():
        found = True
        (report_dir / "table1.csv").write_bytes((abl / "table1.csv").read_bytes())
        produced["tables"].append("table1.csv")

    continual_dirs = {
        name: out_root / name
        for name in ("continual_adaptive", "continual_fixed", "dqn")
        if (out_root / name / "summary.json").exists()
    }
    if continual_dirs:
        found = True
        rows = []
        for name, d in continual_dirs.items():
            s = _read_summary(d)
            cells = [name]
            for t in range(1, 6):
                mean = s["episodes_per_task_mean"].get(str(t))
                std = s["episodes_per_task_std"].get(str(t))
                cells.append("" if mean is None else f"{mean:.0f} ({std:.0f})")
            cells.append(f"{s['bwt_mean']:.4f}")
            rows.append(cells)
        write_csv(
            report_dir / "table2.csv",
            ["configuration", "task1", "task2", "task3", "task4", "task5", "bwt"],
            rows,
        )
        produced["tables"].append("table2.csv")

        mats = {
            name: d / "eval_matrix_mean.csv"
            for name, d in continual_dirs.items()
            if (d / "eval_matrix_mean.csv").exists()
        }
        if mats:
            plot_accuracy_bars(mats, report_dir / "task_accuracy_bars.svg")
            produced["plots"].append("task_accuracy_bars.svg")
        for name, d in continual_dirs.items():
            if (d / "metrics.jsonl").exists():
                plot_accuracy_curve(
                    d / "metrics.jsonl", report_dir / f"accuracy_curve_{name}.svg"
                )
                produced["plots"].append(f"accuracy_curve_{name}.svg")

    if not found:
        raise ValueError(f"no run records found under {out_root}")
    return produced
