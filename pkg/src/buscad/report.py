"""Artifact writers: feature CSV, JSON report, and false-color map PNGs.

CSV and JSON output is byte-deterministic for a fixed input: floats are
written with shortest round-trip repr, JSON keys are sorted, and no
timestamps are embedded.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .classify import ConfusionMatrix, Dataset
from .features import FeatureVector
from .imagecore import ImageGrid

__all__ = [
    "read_features_csv",
    "render_confusion",
    "render_map",
    "write_features_csv",
    "write_report",
]


def _fmt(value: float) -> str:
    return repr(float(value))


def write_features_csv(vectors: Sequence[FeatureVector], path: str | Path) -> None:
    """One row per case; feature columns first, then case_id and label."""
    if not vectors:
        raise ValueError("no feature vectors to write")
    names = list(vectors[0].values.keys())
    for v in vectors[1:]:
        if list(v.values.keys()) != names:
            raise ValueError(f"inconsistent feature layout for case {v.case_id}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names + ["case_id", "label"])
        for v in vectors:
            writer.writerow([_fmt(v.values[n]) for n in names] + [v.case_id, v.label])


def read_features_csv(path: str | Path) -> Dataset:
    """Load a feature CSV back into a Dataset."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"feature CSV {path} has no data rows")
    header = rows[0]
    if header[-2:] != ["case_id", "label"]:
        raise ValueError("feature CSV must end with case_id and label columns")
    names = tuple(header[:-2])
    matrix = np.array([[float(x) for x in r[:-2]] for r in rows[1:]])
    case_ids = tuple(r[-2] for r in rows[1:])
    labels = tuple(r[-1] for r in rows[1:])
    return Dataset(matrix, labels, names, case_ids)


def write_report(report: Mapping, path: str | Path) -> None:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    with open(path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")


def render_map(grid: ImageGrid, path: str | Path, title: str) -> None:
    """False-color PNG of a parameter or coefficient grid."""
    fig, ax = plt.subplots(figsize=(5, 4), dpi=110)
    im = ax.imshow(grid.data, cmap="magma", interpolation="nearest")
    ax.set_title(title)
    ax.set_xticks([])
    ax.set_yticks([])
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_confusion(
    matrices: Mapping[str, ConfusionMatrix], path: str | Path
) -> None:
    """Side-by-side confusion matrices, one panel per classifier."""
    if not matrices:
        raise ValueError("nothing to render")
    names = list(matrices.keys())
    fig, axes = plt.subplots(1, len(names), figsize=(3.2 * len(names), 3.4), dpi=110)
    if len(names) == 1:
        axes = [axes]
    for ax, name in zip(axes, names):
        cm = matrices[name]
        table = np.array([[cm.tp, cm.fn], [cm.fp, cm.tn]], dtype=float)
        ax.imshow(table, cmap="Blues", vmin=0)
        for (r, c), v in np.ndenumerate(table):
            ax.text(c, r, str(int(v)), ha="center", va="center")
        ax.set_xticks([0, 1], ["pred malig", "pred benign"])
        ax.set_yticks([0, 1], ["malignant", "benign"])
        acc = (cm.tp + cm.tn) / cm.total
        ax.set_title(f"{name} (acc {acc:.1%})")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
