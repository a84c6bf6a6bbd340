"""Independent reference implementations used to derive expected test values.

These deliberately avoid the package's own code paths: brute-force
enumeration, pure-Python tree walks, and plain-formula statistics.
"""

import itertools
import math

import numpy as np


def best_two_partition_inertia(points):
    """Exhaustive optimum over all 2-partitions of 1-D points."""
    points = list(points)
    n = len(points)
    best = math.inf
    best_centroids = None
    for bits in itertools.product([0, 1], repeat=n):
        if len(set(bits)) < 2:
            continue
        groups = {0: [], 1: []}
        for b, p in zip(bits, points):
            groups[b].append(p)
        inertia = 0.0
        centroids = []
        for g in groups.values():
            mu = sum(g) / len(g)
            centroids.append(mu)
            inertia += sum((p - mu) ** 2 for p in g)
        if inertia < best:
            best = inertia
            best_centroids = sorted(centroids)
    return best, best_centroids


def blobs(n_per_blob, centers, spread, seed, clip_unit=True):
    """Gaussian blobs around the given centers; returns (matrix, labels)."""
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=float)
    rows = []
    labels = []
    for i, center in enumerate(centers):
        pts = center + rng.normal(0.0, spread, size=(n_per_blob, centers.shape[1]))
        rows.append(pts)
        labels.extend([i] * n_per_blob)
    matrix = np.vstack(rows)
    if clip_unit:
        matrix = np.clip(matrix, 0.0, 1.0)
    return matrix, np.array(labels)


def random_tree_doc(rng, n_features, depth_left):
    """Random serialized tree for oracle comparisons."""
    if depth_left == 0 or rng.random() < 0.35:
        return {"leaf": float(rng.normal())}
    return {
        "feature": int(rng.integers(0, n_features)),
        "threshold": float(rng.random()),
        "left": random_tree_doc(rng, n_features, depth_left - 1),
        "right": random_tree_doc(rng, n_features, depth_left - 1),
    }


def random_ensemble_doc(rng, n_features, n_classes, n_rounds, max_depth=3):
    return {
        "n_classes": n_classes,
        "n_features": n_features,
        "rounds": n_rounds,
        "learning_rate": 0.1,
        "base_score": float(rng.normal() * 0.1),
        "trees": [
            [random_tree_doc(rng, n_features, max_depth) for _ in range(n_rounds)]
            for _ in range(n_classes)
        ],
    }


# ---------------------------------------------------------------------------
# Brute-force Shapley (no memoization, pure-Python tree evaluation)


def walk_tree(tree_doc, row):
    """Evaluate one serialized tree on one row."""
    node = tree_doc
    while "leaf" not in node:
        if row[node["feature"]] < node["threshold"]:
            node = node["left"]
        else:
            node = node["right"]
    return node["leaf"]


def margin_of(ensemble_doc, row, class_id):
    """Margin for one class: base score plus that class's leaves in round order."""
    margin = ensemble_doc["base_score"]
    for tree_doc in ensemble_doc["trees"][class_id]:
        margin += walk_tree(tree_doc, row)
    return margin


def coalition_value(ensemble_doc, instance, background_rows, subset, class_id):
    """Mean margin over background rows with features in ``subset`` taken from
    the instance. Recomputed from scratch on every call (no caching)."""
    margins = []
    for bg in background_rows:
        composite = [instance[j] if j in subset else bg[j] for j in range(len(instance))]
        margins.append(margin_of(ensemble_doc, composite, class_id))
    return math.fsum(margins) / len(background_rows)


def brute_force_shapley(ensemble_doc, instance, background_rows, class_id):
    """Direct evaluation of the permutation-weighted subset sum per feature."""
    n = ensemble_doc["n_features"]
    n_fact = math.factorial(n)
    phi = []
    for j in range(n):
        others = [f for f in range(n) if f != j]
        terms = []
        for size in range(n):
            for combo in itertools.combinations(others, size):
                subset = set(combo)
                weight = math.factorial(size) * math.factorial(n - size - 1) / n_fact
                with_j = coalition_value(ensemble_doc, instance, background_rows, subset | {j}, class_id)
                without_j = coalition_value(ensemble_doc, instance, background_rows, subset, class_id)
                terms.append(weight * (with_j - without_j))
        phi.append(math.fsum(terms))
    return phi
