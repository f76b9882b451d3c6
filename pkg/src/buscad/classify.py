"""Feature selection, three classifiers, cross-validation, and metrics.

All classifiers operate on z-scored features (population standard
deviation, constant columns passed through unscaled).  The malignant
class is the positive one throughout.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ClassifierConfig",
    "ConfusionMatrix",
    "Dataset",
    "cross_validate",
    "knn_classify",
    "metrics",
    "select_features",
    "svm_train",
    "tree_train",
]

_LOG = logging.getLogger(__name__)

BENIGN = "benign"
MALIGNANT = "malignant"
_LABELS = (BENIGN, MALIGNANT)


@dataclass(frozen=True)
class Dataset:
    """Case-by-feature matrix with aligned labels and identifiers."""

    matrix: np.ndarray
    labels: tuple[str, ...]
    feature_names: tuple[str, ...]
    case_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        m = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise ValueError("matrix must be 2-D (cases x features)")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "case_ids", tuple(self.case_ids))
        if not (m.shape[0] == len(self.labels) == len(self.case_ids)):
            raise ValueError("row, label, and id counts must agree")
        if m.shape[1] != len(self.feature_names):
            raise ValueError("column count must match feature names")
        if not np.isfinite(m).all():
            raise ValueError("matrix contains NaN or Inf")
        bad = sorted(set(self.labels) - set(_LABELS))
        if bad:
            raise ValueError(f"unknown labels: {bad}")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def rows(self, idx: Sequence[int]) -> "Dataset":
        idx = list(idx)
        return Dataset(
            self.matrix[idx],
            tuple(self.labels[i] for i in idx),
            self.feature_names,
            tuple(self.case_ids[i] for i in idx),
        )

    def columns(self, idx: Sequence[int]) -> "Dataset":
        idx = list(idx)
        return Dataset(
            self.matrix[:, idx],
            self.labels,
            tuple(self.feature_names[i] for i in idx),
            self.case_ids,
        )


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self) -> None:
        counts = (self.tp, self.fn, self.fp, self.tn)
        if any(c < 0 for c in counts):
            raise ValueError("confusion counts must be nonnegative")
        if sum(counts) < 1:
            raise ValueError("confusion matrix must count at least one case")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


@dataclass(frozen=True)
class ClassifierConfig:
    """Which classifier to run and with what hyperparameters."""

    name: str = "svm"
    knn_k: int = 5
    svm_c: float = 1.0
    tree_depth: int = 10
    select_k: int = 30
    sequential_holdout: bool = False

    def __post_init__(self) -> None:
        if self.name not in ("svm", "knn", "tree"):
            raise ValueError(f"unknown classifier {self.name!r}")
        if self.knn_k < 1 or self.tree_depth < 1 or self.select_k < 1:
            raise ValueError("hyperparameters must be positive")
        if self.svm_c <= 0:
            raise ValueError("C must be positive")


def _zscore_fit(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return mean, std


def _label_indicator(labels: Sequence[str]) -> np.ndarray:
    return np.array([1.0 if lab == MALIGNANT else 0.0 for lab in labels])


def _point_biserial(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    yc = y - y.mean()
    denom = z.shape[0] * y.std()
    if denom == 0.0:
        return np.zeros(z.shape[1])
    corr = z.T @ yc / denom
    col_ok = z.std(axis=0) > 0
    return np.where(col_ok, corr, 0.0)


def select_features(data: Dataset, k: int) -> tuple[Dataset, tuple[int, ...]]:
    """Top-k columns by |point-biserial correlation|, redundancy-pruned.

    Columns are z-scored, ranked by absolute correlation with the
    malignant indicator, and kept greedily while their |correlation| with
    every already-kept column stays below 0.95.  Constant columns score 0.
    The returned dataset holds the original (unscaled) columns.
    """
    n, p = data.matrix.shape
    if not 1 <= k <= p:
        raise ValueError(f"k must lie in [1, {p}]")
    mean, std = _zscore_fit(data.matrix)
    z = (data.matrix - mean) / std
    y = _label_indicator(data.labels)
    scores = np.abs(_point_biserial(z, y))
    order = np.argsort(-scores, kind="stable")
    kept: list[int] = []
    for idx in order:
        zi = z[:, idx]
        si = zi.std()
        redundant = False
        for j in kept:
            zj = z[:, j]
            sj = zj.std()
            denom = n * si * sj
            corr = 0.0 if denom == 0.0 else float(zi @ (zj - zj.mean()) / denom)
            if abs(corr) >= 0.95:
                redundant = True
                break
        if not redundant:
            kept.append(int(idx))
        if len(kept) == k:
            break
    if len(kept) < k:
        _LOG.warning(
            "select_features: only %d non-redundant features of %d requested",
            len(kept), k,
        )
    return data.columns(kept), tuple(kept)


def knn_classify(train: Dataset, query: np.ndarray, k: int) -> str:
    """Majority label among the k nearest z-scored neighbors.

    Vote ties go to the label of the single nearest neighbor.
    """
    if train.size == 0:
        raise ValueError("empty training set")
    if not 1 <= k <= train.size:
        raise ValueError(f"k must lie in [1, {train.size}]")
    query = np.asarray(query, dtype=np.float64).ravel()
    if query.size != train.matrix.shape[1]:
        raise ValueError("query dimension mismatch")
    mean, std = _zscore_fit(train.matrix)
    z = (train.matrix - mean) / std
    q = (query - mean) / std
    dist = np.sqrt(((z - q) ** 2).sum(axis=1))
    nearest = np.argsort(dist, kind="stable")[:k]
    votes: dict[str, int] = {}
    for i in nearest:
        votes[train.labels[i]] = votes.get(train.labels[i], 0) + 1
    best = max(votes.values())
    winners = [lab for lab, v in votes.items() if v == best]
    if len(winners) == 1:
        return winners[0]
    return train.labels[nearest[0]]


@dataclass(frozen=True)
class SVMModel:
    """Linear decision function in z-scored feature space."""

    weights: np.ndarray
    bias: float
    mean: np.ndarray
    std: np.ndarray

    def decision(self, row: np.ndarray) -> float:
        z = (np.asarray(row, dtype=np.float64).ravel() - self.mean) / self.std
        return float(self.weights @ z + self.bias)

    def predict(self, row: np.ndarray) -> str:
        return MALIGNANT if self.decision(row) >= 0.0 else BENIGN


def _smo_bias(z, y, alpha, c, w):
    margins = y - z @ w
    free = (alpha > 1e-12) & (alpha < c - 1e-12)
    if free.any():
        return float(margins[free].mean())
    lo = margins[(y > 0) & (alpha < c - 1e-12)]
    hi = margins[(y < 0) & (alpha > 1e-12)]
    candidates = np.concatenate([lo, hi]) if lo.size or hi.size else margins
    return float(candidates.mean())


def svm_train(train: Dataset, c: float = 1.0, tol: float = 1e-6) -> SVMModel:
    """Soft-margin linear SVM fitted by sequential minimal optimization.

    The working pair is chosen deterministically: the strongest
    Karush-Kuhn-Tucker violator joined with the sample of maximal
    |E_i - E_j|.  Training stops when the relative primal-dual gap falls
    below tol.
    """
    labels = set(train.labels)
    if len(labels) < 2:
        raise ValueError("single-class data")
    if train.size < 2:
        raise ValueError("need at least two samples")
    mean, std = _zscore_fit(train.matrix)
    z = (train.matrix - mean) / std
    y = np.where(_label_indicator(train.labels) > 0, 1.0, -1.0)
    n = z.shape[0]
    alpha = np.zeros(n)
    w = np.zeros(z.shape[1])
    gram_diag = (z * z).sum(axis=1)

    max_steps = max(200 * n, 2000)
    for _ in range(max_steps):
        b = _smo_bias(z, y, alpha, c, w)
        err = z @ w + b - y
        up = (alpha < c - 1e-12) & (y * err < 0)
        down = (alpha > 1e-12) & (y * err > 0)
        violation = np.where(up | down, np.abs(err), -np.inf)
        i = int(np.argmax(violation))
        primal = 0.5 * w @ w + c * np.maximum(0.0, 1.0 - y * (z @ w + b)).sum()
        dual = alpha.sum() - 0.5 * w @ w
        if violation[i] == -np.inf or primal - dual <= tol * max(1.0, abs(primal)):
            break
        spread = np.abs(err[i] - err)
        spread[i] = -np.inf
        j = int(np.argmax(spread))
        eta = gram_diag[i] + gram_diag[j] - 2.0 * float(z[i] @ z[j])
        if eta <= 1e-12:
            # Degenerate pair: fall back to the next largest violator step.
            order = np.argsort(-spread, kind="stable")
            eta = 0.0
            for cand in order:
                cand_eta = gram_diag[i] + gram_diag[cand] - 2.0 * float(z[i] @ z[cand])
                if cand_eta > 1e-12:
                    j, eta = int(cand), cand_eta
                    break
            if eta <= 1e-12:
                break
        if y[i] == y[j]:
            lo = max(0.0, alpha[i] + alpha[j] - c)
            hi = min(c, alpha[i] + alpha[j])
        else:
            lo = max(0.0, alpha[j] - alpha[i])
            hi = min(c, c + alpha[j] - alpha[i])
        if hi - lo <= 1e-14:
            break
        aj_old, ai_old = alpha[j], alpha[i]
        aj = np.clip(aj_old + y[j] * (err[i] - err[j]) / eta, lo, hi)
        ai = ai_old + y[i] * y[j] * (aj_old - aj)
        if abs(aj - aj_old) < 1e-14:
            break
        alpha[j], alpha[i] = aj, ai
        w = w + y[i] * (ai - ai_old) * z[i] + y[j] * (aj - aj_old) * z[j]
    else:
        _LOG.warning("svm_train: step limit reached before tolerance")

    b = _smo_bias(z, y, alpha, c, w)
    return SVMModel(weights=w, bias=b, mean=mean, std=std)


@dataclass(frozen=True)
class TreeNode:
    label: str | None = None
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    def predict(self, row: np.ndarray) -> str:
        node = self
        while node.label is None:
            node = node.left if row[node.feature] <= node.threshold else node.right
        return node.label


@dataclass(frozen=True)
class TreeModel:
    root: TreeNode

    def predict(self, row: np.ndarray) -> str:
        return self.root.predict(np.asarray(row, dtype=np.float64).ravel())

    @property
    def depth(self) -> int:
        def walk(node: TreeNode) -> int:
            if node.label is not None:
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)


def _gini(y: np.ndarray) -> float:
    if y.size == 0:
        return 0.0
    p = y.mean()
    return 2.0 * p * (1.0 - p)


def _majority(labels: Sequence[str]) -> str:
    counts = {BENIGN: 0, MALIGNANT: 0}
    for lab in labels:
        counts[lab] += 1
    return MALIGNANT if counts[MALIGNANT] > counts[BENIGN] else BENIGN


def _build_tree(x: np.ndarray, labels: list[str], depth: int, max_depth: int) -> TreeNode:
    y = _label_indicator(labels)
    if y.min() == y.max():
        return TreeNode(label=labels[0])
    if depth >= max_depth or len(labels) < 5:
        return TreeNode(label=_majority(labels))
    n = len(labels)
    parent = _gini(y)
    best = (0.0, -1, 0.0)  # (gain, feature, threshold)
    for j in range(x.shape[1]):
        values = np.unique(x[:, j])
        if values.size < 2:
            continue
        for thr in (values[:-1] + values[1:]) / 2.0:
            mask = x[:, j] <= thr
            nl = int(mask.sum())
            gain = parent - (
                nl * _gini(y[mask]) + (n - nl) * _gini(y[~mask])
            ) / n
            if gain > best[0] + 1e-12:
                best = (gain, j, float(thr))
    if best[1] < 0:
        return TreeNode(label=_majority(labels))
    mask = x[:, best[1]] <= best[2]
    left = _build_tree(x[mask], [l for l, m in zip(labels, mask) if m], depth + 1, max_depth)
    right = _build_tree(x[~mask], [l for l, m in zip(labels, mask) if not m], depth + 1, max_depth)
    return TreeNode(feature=best[1], threshold=best[2], left=left, right=right)


def tree_train(train: Dataset, max_depth: int = 10) -> TreeModel:
    """CART with Gini impurity and axis-aligned splits.

    Growth stops at max_depth, on pure nodes, and on nodes under five
    samples; unsplittable mixed nodes predict their majority label.
    """
    if train.size == 0:
        raise ValueError("empty training set")
    return TreeModel(_build_tree(train.matrix, list(train.labels), 0, max_depth))


def _fit_predictor(config: ClassifierConfig, train: Dataset) -> Callable[[np.ndarray], str]:
    if config.name == "svm":
        model = svm_train(train, c=config.svm_c)
        return model.predict
    if config.name == "tree":
        model = tree_train(train, max_depth=config.tree_depth)
        return model.predict
    return lambda row: knn_classify(train, row, k=min(config.knn_k, train.size))


def _fold_assignment(
    labels: Sequence[str], folds: int, seed: int, sequential: bool
) -> list[np.ndarray]:
    n = len(labels)
    if sequential:
        return [a for a in np.array_split(np.arange(n), folds)]
    rng = np.random.default_rng(seed)
    assignment: list[list[int]] = [[] for _ in range(folds)]
    for lab in _LABELS:
        idx = np.array([i for i, l in enumerate(labels) if l == lab], dtype=int)
        if idx.size == 0:
            continue
        perm = idx[rng.permutation(idx.size)]
        for pos, case in enumerate(perm):
            assignment[pos % folds].append(int(case))
    return [np.array(sorted(fold), dtype=int) for fold in assignment]


def cross_validate(
    data: Dataset,
    config: ClassifierConfig,
    folds: int = 10,
    seed: int = 0,
) -> tuple[ConfusionMatrix, tuple[str, ...]]:
    """Pooled confusion matrix over seeded stratified folds.

    Feature selection and z-scoring are fitted inside each training fold;
    the second return value lists the feature names chosen on the full
    data (for reporting only, never used in the folds).
    """
    if folds < 2:
        raise ValueError("folds must be at least 2")
    counts = {lab: data.labels.count(lab) for lab in _LABELS}
    if not config.sequential_holdout:
        small = [lab for lab, cnt in counts.items() if cnt < folds]
        if small:
            raise ValueError(f"class too small for {folds} folds: {small}")
    if min(counts.values()) < 1:
        raise ValueError("both classes must be present")

    assignment = _fold_assignment(data.labels, folds, seed, config.sequential_holdout)
    select_k = min(config.select_k, len(data.feature_names))
    tp = fn = fp = tn = 0
    for fold in assignment:
        if fold.size == 0:
            continue
        test_set = set(fold.tolist())
        train_idx = [i for i in range(data.size) if i not in test_set]
        train = data.rows(train_idx)
        if len(set(train.labels)) < 2:
            raise ValueError("training fold lost a class; reduce folds")
        reduced, chosen = select_features(train, select_k)
        predict = _fit_predictor(config, reduced)
        for i in fold:
            got = predict(data.matrix[i, list(chosen)])
            truth = data.labels[i]
            if truth == MALIGNANT:
                tp, fn = (tp + 1, fn) if got == MALIGNANT else (tp, fn + 1)
            else:
                tn, fp = (tn + 1, fp) if got == BENIGN else (tn, fp + 1)

    _, full_chosen = select_features(data, select_k)
    names = tuple(data.feature_names[i] for i in full_chosen)
    return ConfusionMatrix(tp=tp, fn=fn, fp=fp, tn=tn), names


def metrics(cm: ConfusionMatrix) -> dict[str, float | None]:
    """Accuracy, sensitivity, specificity, PPV, and NPV as fractions.

    Metrics whose denominator is zero are reported as None.
    """
    def ratio(num: int, den: int) -> float | None:
        return None if den == 0 else num / den

    return {
        "accuracy": ratio(cm.tp + cm.tn, cm.total),
        "sensitivity": ratio(cm.tp, cm.tp + cm.fn),
        "specificity": ratio(cm.tn, cm.tn + cm.fp),
        "ppv": ratio(cm.tp, cm.tp + cm.fp),
        "npv": ratio(cm.tn, cm.tn + cm.fn),
    }
