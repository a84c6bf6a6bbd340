"""Multiclass gradient-boosted trees with a softmax objective.

Each boosting round fits one regression tree per class to the second-order
statistics of the softmax cross-entropy (g = p - y, h = p(1 - p)). Splits are
exact greedy over midpoints of sorted unique feature values with the usual
regularized gain; leaf weights are Newton steps -G/(H + lambda), stored with
the learning rate already applied so prediction is a plain sum of leaves.

Split finding is made independent of input row order by breaking sort ties
with a canonical row key (the full feature vector plus the label), so
permuting the training rows reproduces the identical ensemble.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    EmptyInputError,
    LabelCoverageError,
    ParameterError,
    ShapeError,
)
from .preprocess import FeatureMatrix


@dataclass(frozen=True)
class TreeNode:
    """Internal node (feature >= 0, routes value < threshold to the left) or
    leaf (feature == -1, carries a margin contribution)."""

    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    weight: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0

    def route(self, row: np.ndarray) -> float:
        node = self
        while not node.is_leaf:
            node = node.left if row[node.feature] < node.threshold else node.right
        return node.weight

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())


@dataclass(frozen=True)
class GbtParams:
    learning_rate: float = 0.1
    max_depth: int = 4
    rounds: int = 200
    patience: int = 20
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_hessian: float = 1e-3
    n_classes: int | None = None

    def validate(self) -> None:
        if self.rounds < 0:
            raise ParameterError("rounds must be >= 0")
        if self.learning_rate <= 0:
            raise ParameterError("learning_rate must be > 0")
        if self.max_depth < 1:
            raise ParameterError("max_depth must be >= 1")
        if self.reg_lambda < 0 or self.gamma < 0:
            raise ParameterError("reg_lambda and gamma must be >= 0")
        if self.patience < 1:
            raise ParameterError("patience must be >= 1")


@dataclass
class GbtEnsemble:
    """Per-class ordered tree lists; margin(c) = base_score + sum of class c's
    routed leaf weights (learning rate already folded into the weights)."""

    n_classes: int
    n_features: int
    rounds: int
    learning_rate: float
    base_score: float
    trees: tuple[tuple[TreeNode, ...], ...]  # trees[class][round]
    _flat: dict | None = field(default=None, repr=False, compare=False)

    def _flatten(self) -> dict:
        if self._flat is None:
            self._flat = _flatten_trees(self.trees, self.n_classes)
        return self._flat

    def margins_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeError(f"expected (n, {self.n_features}) matrix, got {X.shape}")
        flat = self._flatten()
        if flat["roots"].shape[0] == 0:
            return np.full((X.shape[0], self.n_classes), self.base_score)
        return _kernels.margins_batch(
            X,
            flat["feature"],
            flat["threshold"],
            flat["left"],
            flat["right"],
            flat["value"],
            flat["roots"],
            flat["class"],
            self.n_classes,
            self.base_score,
        )


def _flatten_trees(trees: tuple[tuple[TreeNode, ...], ...], n_classes: int) -> dict:
    # Round-major flattening keeps each class's trees in round order, matching
    # the accumulation order used during training.
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    roots: list[int] = []
    tree_class: list[int] = []

    def emit(node: TreeNode) -> int:
        idx = len(feature)
        feature.append(node.feature)
        threshold.append(node.threshold)
        left.append(-1)
        right.append(-1)
        value.append(node.weight)
        if not node.is_leaf:
            left[idx] = emit(node.left)
            right[idx] = emit(node.right)
        return idx

    n_rounds = len(trees[0]) if trees else 0
    for r in range(n_rounds):
        for c in range(n_classes):
            roots.append(emit(trees[c][r]))
            tree_class.append(c)
    return {
        "feature": np.array(feature, dtype=np.int64),
        "threshold": np.array(threshold, dtype=np.float64),
        "left": np.array(left, dtype=np.int64),
        "right": np.array(right, dtype=np.int64),
        "value": np.array(value, dtype=np.float64),
        "roots": np.array(roots, dtype=np.int64),
        "class": np.array(tree_class, dtype=np.int64),
    }


@dataclass(frozen=True)
class TrainHistory:
    train_loss: tuple[float, ...]
    train_accuracy: tuple[float, ...]
    val_loss: tuple[float | None, ...]
    val_accuracy: tuple[float | None, ...]
    best_round: int


@dataclass(frozen=True)
class EvalReport:
    confusion: np.ndarray = field(repr=False)
    support: tuple[int, ...]
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    zero_predicted_classes: tuple[int, ...]
    zero_support_classes: tuple[int, ...]


def softmax(margins: np.ndarray) -> np.ndarray:
    z = margins - margins.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _log_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    p = np.maximum(probs[np.arange(labels.shape[0]), labels], 1e-300)
    return float(-np.mean(np.log(p)))


def stratified_split(labels: np.ndarray, fraction: float, seed: int):
    """Seeded per-class holdout; every class keeps at least one training row.
    Returns (train_indices, validation_indices), both sorted ascending."""
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    val: list[int] = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        n_val = int(math.floor(fraction * idx.shape[0]))
        n_val = min(n_val, idx.shape[0] - 1)
        if n_val <= 0:
            continue
        perm = rng.permutation(idx.shape[0])
        val.extend(int(i) for i in idx[perm[:n_val]])
    val_idx = np.array(sorted(val), dtype=np.int64)
    mask = np.ones(labels.shape[0], dtype=bool)
    mask[val_idx] = False
    return np.flatnonzero(mask), val_idx


class _SplitFinder:
    """Exact greedy split search over presorted per-feature row orders.

    Orders are sorted by (feature value, canonical row rank) once per training
    run and partitioned stably down the tree, so prefix sums over tied values
    accumulate in a row-order-independent sequence.
    """

    def __init__(self, X: np.ndarray, params: GbtParams, canon_rank: np.ndarray):
        self.X = X
        self.params = params
        self.orders = []
        for f in range(X.shape[1]):
            self.orders.append(np.lexsort((canon_rank, X[:, f])))

    def build_tree(self, g: np.ndarray, h: np.ndarray) -> TreeNode:
        orders = self.orders
        g0 = g[orders[0]]
        h0 = h[orders[0]]
        total_g = float(np.cumsum(g0)[-1]) if g0.size else 0.0
        total_h = float(np.cumsum(h0)[-1]) if h0.size else 0.0
        return self._grow(orders, g, h, total_g, total_h, depth=0)

    def _leaf(self, total_g: float, total_h: float) -> TreeNode:
        denom = total_h + self.params.reg_lambda
        weight = 0.0 if denom == 0.0 else -total_g / denom * self.params.learning_rate
        return TreeNode(weight=weight)

    def _grow(self, orders, g, h, total_g, total_h, depth) -> TreeNode:
        params = self.params
        n_node = orders[0].shape[0]
        if depth >= params.max_depth or n_node < 2:
            return self._leaf(total_g, total_h)

        lam = params.reg_lambda
        parent_term = total_g * total_g / (total_h + lam) if (total_h + lam) > 0 else 0.0

        best_gain = -np.inf
        best = None  # (feature, threshold, GL, HL)
        for f in range(self.X.shape[1]):
            order = orders[f]
            v = self.X[order, f]
            boundaries = np.flatnonzero(v[1:] != v[:-1])
            if boundaries.size == 0:
                continue
            cg = np.cumsum(g[order])
            ch = np.cumsum(h[order])
            gl = cg[boundaries]
            hl = ch[boundaries]
            gr = total_g - gl
            hr = total_h - hl
            valid = (hl >= params.min_child_hessian) & (hr >= params.min_child_hessian)
            if not valid.any():
                continue
            gains = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent_term) - params.gamma
            gains[~valid] = -np.inf
            local = int(np.argmax(gains))  # first max: lowest threshold wins ties
            if gains[local] > best_gain:
                best_gain = float(gains[local])
                thr = (v[boundaries[local]] + v[boundaries[local] + 1]) / 2.0
                best = (f, float(thr), float(gl[local]), float(hl[local]))

        # Zero-gain splits are accepted (gamma shifts the bar); parity cases
        # like XOR are only separable through them.
        if best is None or best_gain < 0.0:
            return self._leaf(total_g, total_h)

        feature, threshold, gl, hl = best
        left_orders = []
        right_orders = []
        for f in range(self.X.shape[1]):
            order = orders[f]
            mask = self.X[order, feature] < threshold
            left_orders.append(order[mask])
            right_orders.append(order[~mask])
        left = self._grow(left_orders, g, h, gl, hl, depth + 1)
        right = self._grow(right_orders, g, h, total_g - gl, total_h - hl, depth + 1)
        return TreeNode(feature=feature, threshold=threshold, left=left, right=right)


def train(
    features: FeatureMatrix,
    labels,
    params: GbtParams = GbtParams(),
    validation_fraction: float = 0.2,
    seed: int = 0,
) -> tuple[GbtEnsemble, TrainHistory]:
    """Boost ``params.rounds`` rounds of one-tree-per-class on the softmax
    objective, with seeded stratified holdout and early stopping on validation
    log-loss (the ensemble is truncated back to the best round)."""
    params.validate()
    if not 0.0 <= validation_fraction < 1.0:
        raise ParameterError("validation_fraction must be in [0, 1)")

    X = np.ascontiguousarray(features.values, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] == 0:
        raise EmptyInputError("training matrix is empty")
    if y.shape[0] != X.shape[0]:
        raise ShapeError("labels and feature rows are misaligned")

    n_classes = params.n_classes if params.n_classes is not None else int(y.max()) + 1
    if y.min() < 0 or y.max() >= n_classes:
        raise LabelCoverageError(
            f"labels must lie in 0..{n_classes - 1}, got range {y.min()}..{y.max()}"
        )

    train_idx, val_idx = stratified_split(y, validation_fraction, seed)
    y_tr = y[train_idx]
    missing = sorted(set(range(n_classes)) - set(int(c) for c in np.unique(y_tr)))
    if missing:
        raise LabelCoverageError(f"classes {missing} are absent from the training split")
    X_tr = X[train_idx]
    X_val = X[val_idx]
    y_val = y[val_idx]
    has_val = val_idx.shape[0] > 0

    # Canonical rank = position under full-content ordering; rows identical in
    # every feature and label are interchangeable, so this makes split sums
    # independent of the input row order.
    canon_keys = tuple(X_tr[:, f] for f in reversed(range(X.shape[1]))) + (y_tr,)
    canon_rank = np.empty(X_tr.shape[0], dtype=np.int64)
    canon_rank[np.lexsort(canon_keys)] = np.arange(X_tr.shape[0])

    finder = _SplitFinder(X_tr, params, canon_rank)
    base_score = 0.0
    onehot = np.eye(n_classes)[y_tr]
    margins_tr = np.full((X_tr.shape[0], n_classes), base_score)
    margins_val = np.full((X_val.shape[0], n_classes), base_score)

    trees: list[list[TreeNode]] = [[] for _ in range(n_classes)]
    hist_train_loss: list[float] = []
    hist_train_acc: list[float] = []
    hist_val_loss: list[float | None] = []
    hist_val_acc: list[float | None] = []
    best_val = np.inf
    best_round = -1

    for r in range(params.rounds):
        p = softmax(margins_tr)
        round_trees: list[TreeNode] = []
        for c in range(n_classes):
            g = p[:, c] - onehot[:, c]
            h = p[:, c] * (1.0 - p[:, c])
            tree = finder.build_tree(g, h)
            round_trees.append(tree)
            trees[c].append(tree)

        for c, tree in enumerate(round_trees):
            margins_tr[:, c] += _route_batch(tree, X_tr)
            if has_val:
                margins_val[:, c] += _route_batch(tree, X_val)

        p_tr = softmax(margins_tr)
        hist_train_loss.append(_log_loss(p_tr, y_tr))
        hist_train_acc.append(float(np.mean(np.argmax(p_tr, axis=1) == y_tr)))
        if has_val:
            p_val = softmax(margins_val)
            val_loss = _log_loss(p_val, y_val)
            hist_val_loss.append(val_loss)
            hist_val_acc.append(float(np.mean(np.argmax(p_val, axis=1) == y_val)))
            if val_loss < best_val:
                best_val = val_loss
                best_round = r
            elif r - best_round >= params.patience:
                break
        else:
            hist_val_loss.append(None)
            hist_val_acc.append(None)
            best_round = r

    if best_round >= 0:
        kept = best_round + 1
    else:
        kept = 0
    ensemble = GbtEnsemble(
        n_classes=n_classes,
        n_features=X.shape[1],
        rounds=kept,
        learning_rate=params.learning_rate,
        base_score=base_score,
        trees=tuple(tuple(class_trees[:kept]) for class_trees in trees),
    )
    history = TrainHistory(
        train_loss=tuple(hist_train_loss),
        train_accuracy=tuple(hist_train_acc),
        val_loss=tuple(hist_val_loss),
        val_accuracy=tuple(hist_val_acc),
        best_round=best_round,
    )
    return ensemble, history


def _route_batch(tree: TreeNode, X: np.ndarray) -> np.ndarray:
    """Leaf weights of one tree for every row, vectorized level by level."""
    out = np.empty(X.shape[0])
    stack = [(tree, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if node.is_leaf:
            out[idx] = node.weight
            continue
        mask = X[idx, node.feature] < node.threshold
        stack.append((node.left, idx[mask]))
        stack.append((node.right, idx[~mask]))
    return out


def predict_margins(ensemble: GbtEnsemble, row) -> np.ndarray:
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1 or row.shape[0] != ensemble.n_features:
        raise ShapeError(f"expected a row of {ensemble.n_features} features, got shape {row.shape}")
    return ensemble.margins_batch(row.reshape(1, -1))[0]


def predict_proba(ensemble: GbtEnsemble, row) -> np.ndarray:
    margins = predict_margins(ensemble, row)
    return softmax(margins.reshape(1, -1))[0]


def predict_proba_batch(ensemble: GbtEnsemble, X: np.ndarray) -> np.ndarray:
    return softmax(ensemble.margins_batch(X))


def evaluate(ensemble: GbtEnsemble, features: FeatureMatrix, labels) -> EvalReport:
    """Confusion matrix and the usual per-class / averaged metrics.

    Classes never predicted get precision 0 and classes with no support get
    recall 0; both are flagged in the report rather than silently zeroed."""
    X = features.values
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] == 0:
        raise EmptyInputError("evaluation set is empty")
    k = ensemble.n_classes
    preds = np.argmax(predict_proba_batch(ensemble, X), axis=1)

    confusion = np.zeros((k, k), dtype=np.int64)
    for t, p in zip(y, preds):
        confusion[t, p] += 1

    support = confusion.sum(axis=1)
    predicted = confusion.sum(axis=0)
    diag = np.diag(confusion)

    precision = np.where(predicted > 0, diag / np.maximum(predicted, 1), 0.0)
    recall = np.where(support > 0, diag / np.maximum(support, 1), 0.0)
    pr_sum = precision + recall
    f1 = np.where(pr_sum > 0, 2.0 * precision * recall / np.maximum(pr_sum, 1e-300), 0.0)

    total = int(confusion.sum())
    weights = support / total
    return EvalReport(
        confusion=confusion,
        support=tuple(int(s) for s in support),
        precision=tuple(float(v) for v in precision),
        recall=tuple(float(v) for v in recall),
        f1=tuple(float(v) for v in f1),
        accuracy=float(diag.sum() / total),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        weighted_precision=float((precision * weights).sum()),
        weighted_recall=float((recall * weights).sum()),
        weighted_f1=float((f1 * weights).sum()),
        zero_predicted_classes=tuple(int(c) for c in np.flatnonzero(predicted == 0)),
        zero_support_classes=tuple(int(c) for c in np.flatnonzero(support == 0)),
    )


# ---------------------------------------------------------------------------
# Serialization (consumed by the pipeline bundle)


def tree_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"leaf": node.weight}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": tree_to_dict(node.left),
        "right": tree_to_dict(node.right),
    }


def tree_from_dict(doc: dict, n_features: int, path: str = "tree") -> TreeNode:
    from .errors import BundleFormatError

    if "leaf" in doc:
        return TreeNode(weight=float(doc["leaf"]))
    try:
        feature = int(doc["feature"])
        threshold = float(doc["threshold"])
        left = tree_from_dict(doc["left"], n_features, path + ".left")
        right = tree_from_dict(doc["right"], n_features, path + ".right")
    except (KeyError, TypeError) as exc:
        raise BundleFormatError(f"{path}: malformed tree node ({exc})") from None
    if not 0 <= feature < n_features:
        raise BundleFormatError(f"{path}: feature index {feature} out of range")
    return TreeNode(feature=feature, threshold=threshold, left=left, right=right)


def ensemble_to_dict(ensemble: GbtEnsemble) -> dict:
    return {
        "n_classes": ensemble.n_classes,
        "n_features": ensemble.n_features,
        "rounds": ensemble.rounds,
        "learning_rate": ensemble.learning_rate,
        "base_score": ensemble.base_score,
        "trees": [[tree_to_dict(t) for t in class_trees] for class_trees in ensemble.trees],
    }


def ensemble_from_dict(doc: dict) -> GbtEnsemble:
    from .errors import BundleFormatError

    try:
        n_classes = int(doc["n_classes"])
        n_features = int(doc["n_features"])
        rounds = int(doc["rounds"])
        learning_rate = float(doc["learning_rate"])
        base_score = float(doc["base_score"])
        tree_docs = doc["trees"]
    except (KeyError, TypeError) as exc:
        raise BundleFormatError(f"ensemble: missing or malformed field ({exc})") from None
    if len(tree_docs) != n_classes:
        raise BundleFormatError(f"ensemble.trees: expected {n_classes} class lists")
    trees = tuple(
        tuple(tree_from_dict(t, n_features, f"ensemble.trees[{c}][{r}]") for r, t in enumerate(class_trees))
        for c, class_trees in enumerate(tree_docs)
    )
    return GbtEnsemble(
        n_classes=n_classes,
        n_features=n_features,
        rounds=rounds,
        learning_rate=learning_rate,
        base_score=base_score,
        trees=trees,
    )
