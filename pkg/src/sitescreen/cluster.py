"""Proxy-label generation: seeded k-means, elbow/silhouette k selection, and
ordinal ranking of clusters into suitability classes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import CLASS_LABELS
from .errors import AlignmentError, InfeasibleKError, UndefinedSilhouetteError
from .preprocess import FeatureMatrix


@dataclass(frozen=True)
class KMeansModel:
    k: int
    centroids: np.ndarray = field(repr=False)
    inertia: float
    iterations_run: int
    seed: int
    # Objective value after each Lloyd iteration; non-increasing by construction.
    inertia_history: tuple[float, ...] = field(repr=False, default=())


@dataclass(frozen=True)
class KSelectionReport:
    candidates: tuple[int, ...]
    inertias: tuple[float, ...]
    silhouettes: tuple[float, ...]
    chosen_k: int
    elbow_k: int


@dataclass(frozen=True)
class ProxyLabeling:
    """Ordinal mapping from cluster id to suitability class, ranked by the
    cluster's mean adjusted-feature score."""

    cluster_to_class: dict[int, int]
    class_labels: tuple[str, ...]
    cluster_feature_means: np.ndarray = field(repr=False)
    cluster_scores: tuple[float, ...]

    def classes_for(self, cluster_ids) -> np.ndarray:
        return np.array([self.cluster_to_class[int(c)] for c in cluster_ids], dtype=np.int64)

    def label_for_class(self, class_id: int) -> str:
        return self.class_labels[class_id]


def _squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # (n, k) squared Euclidean distances via the expansion; clip tiny negatives.
    d2 = (
        np.einsum("ij,ij->i", points, points)[:, None]
        - 2.0 * points @ centers.T
        + np.einsum("ij,ij->i", centers, centers)[None, :]
    )
    return np.maximum(d2, 0.0)


def _kmeans_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = _squared_distances(points, points[chosen])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # All remaining mass is on already-chosen points; take the first unused row.
            for i in range(n):
                if i not in chosen:
                    chosen.append(i)
                    break
            else:
                chosen.append(chosen[-1])
        else:
            idx = int(rng.choice(n, p=d2 / total))
            chosen.append(idx)
        d2 = np.minimum(d2, _squared_distances(points, points[[chosen[-1]]])[:, 0])
    return points[chosen].copy()


def kmeans_fit(
    matrix: FeatureMatrix,
    k: int,
    seed: int,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> KMeansModel:
    """Lloyd iterations from a seeded k-means++ start.

    Stops when the largest centroid shift drops below ``tol`` or after
    ``max_iter`` iterations. Empty clusters are re-seeded with the point
    farthest from its assigned centroid. Fully deterministic for fixed inputs.
    """
    points = matrix.values
    n = points.shape[0]
    if k < 1 or k > n:
        raise InfeasibleKError(f"k={k} infeasible for {n} rows")

    rng = np.random.default_rng(seed)
    centroids = _kmeans_plus_plus(points, k, rng)

    history: list[float] = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        d2 = _squared_distances(points, centroids)
        labels = np.argmin(d2, axis=1)

        # Repair empty clusters before the update step so k stays fixed.
        for cluster in range(k):
            if not np.any(labels == cluster):
                assigned = d2[np.arange(n), labels]
                farthest = int(np.argmax(assigned))
                centroids[cluster] = points[farthest]
                labels[farthest] = cluster
                d2 = _squared_distances(points, centroids)

        new_centroids = np.empty_like(centroids)
        for cluster in range(k):
            members = points[labels == cluster]
            new_centroids[cluster] = members.mean(axis=0)

        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        labels = np.argmin(_squared_distances(points, centroids), axis=1)
        history.append(float(((points - centroids[labels]) ** 2).sum()))
        if shift < tol:
            break

    inertia = history[-1]
    return KMeansModel(
        k=k,
        centroids=centroids,
        inertia=inertia,
        iterations_run=iterations,
        seed=seed,
        inertia_history=tuple(history),
    )


def assign(model: KMeansModel, matrix: FeatureMatrix) -> np.ndarray:
    """Nearest-centroid assignment; ties go to the lowest cluster id."""
    if matrix.values.shape[1] != model.centroids.shape[1]:
        raise AlignmentError(
            f"matrix has {matrix.values.shape[1]} columns, model expects {model.centroids.shape[1]}"
        )
    return np.argmin(_squared_distances(matrix.values, model.centroids), axis=1)


def silhouette(matrix: FeatureMatrix, labels) -> float:
    """Mean silhouette (b - a) / max(a, b), computed exactly in O(n^2).

    a is the mean intra-cluster distance excluding self; b the smallest mean
    distance to another cluster. Singleton clusters score 0; coincident
    intra-cluster points (a == 0) score 1 when b > 0.
    """
    points = matrix.values
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != points.shape[0]:
        raise AlignmentError("labels and matrix rows are misaligned")
    unique = np.unique(labels)
    if unique.size < 2:
        raise UndefinedSilhouetteError("silhouette requires at least two clusters")

    n = points.shape[0]
    counts = np.array([np.sum(labels == c) for c in unique], dtype=float)
    positions = np.searchsorted(unique, labels)
    scores = np.empty(n)
    block = 1024  # bounds peak memory at block * n distances
    for start in range(0, n, block):
        stop = min(start + block, n)
        rows = np.arange(stop - start)
        dist = np.sqrt(_squared_distances(points[start:stop], points))
        cluster_sums = np.empty((stop - start, unique.size))
        for pos, c in enumerate(unique):
            cluster_sums[:, pos] = dist[:, labels == c].sum(axis=1)

        own_pos = positions[start:stop]
        m = counts[own_pos]
        a = cluster_sums[rows, own_pos] / np.maximum(m - 1.0, 1.0)
        mean_other = cluster_sums / counts
        mean_other[rows, own_pos] = np.inf
        b = mean_other.min(axis=1)

        s = (b - a) / np.maximum(np.maximum(a, b), 1e-300)
        s = np.where(a == 0.0, np.where(b > 0.0, 1.0, 0.0), s)
        s = np.where(m == 1.0, 0.0, s)
        scores[start:stop] = s
    return float(scores.mean())


def _restart_seed(seed: int, k: int, restart: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(k, restart)).generate_state(1)[0])


def fit_best_of(
    matrix: FeatureMatrix,
    k: int,
    seed: int,
    n_init: int = 10,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> KMeansModel:
    """Best of ``n_init`` seeded k-means++ restarts by lowest inertia."""
    best: KMeansModel | None = None
    for restart in range(n_init):
        model = kmeans_fit(matrix, k, _restart_seed(seed, k, restart), max_iter, tol)
        if best is None or model.inertia < best.inertia:
            best = model
    assert best is not None
    return best


def _elbow_k(candidates: tuple[int, ...], inertias: tuple[float, ...]) -> int:
    # Point of maximum perpendicular distance from the chord joining the
    # endpoints of the WCSS curve.
    x = np.asarray(candidates, dtype=float)
    y = np.asarray(inertias, dtype=float)
    x0, y0 = x[0], y[0]
    x1, y1 = x[-1], y[-1]
    chord = np.hypot(x1 - x0, y1 - y0)
    if chord == 0.0:
        return int(candidates[0])
    dist = np.abs((y1 - y0) * x - (x1 - x0) * y + x1 * y0 - y1 * x0) / chord
    return int(candidates[int(np.argmax(dist))])


def select_k(
    matrix: FeatureMatrix,
    k_min: int,
    k_max: int,
    seed: int,
    n_init: int = 10,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> KSelectionReport:
    """Fit each candidate k (best of ``n_init`` restarts) and choose the k with
    the highest mean silhouette, preferring smaller k on ties. The elbow point
    of the WCSS curve is reported for reference."""
    n = len(matrix)
    if not (2 <= k_min <= k_max <= n):
        raise InfeasibleKError(f"need 2 <= k_min <= k_max <= rows, got {k_min}..{k_max} on {n}")
    candidates = tuple(range(k_min, k_max + 1))
    inertias: list[float] = []
    sils: list[float] = []
    for k in candidates:
        model = fit_best_of(matrix, k, seed, n_init=n_init, max_iter=max_iter, tol=tol)
        labels = assign(model, matrix)
        inertias.append(model.inertia)
        sils.append(silhouette(matrix, labels))
    best = int(np.argmax(sils))  # argmax keeps the first (smallest k) on ties
    return KSelectionReport(
        candidates=candidates,
        inertias=tuple(inertias),
        silhouettes=tuple(sils),
        chosen_k=candidates[best],
        elbow_k=_elbow_k(candidates, tuple(inertias)),
    )


def rank_clusters(model: KMeansModel, adjusted: FeatureMatrix, labels) -> ProxyLabeling:
    """Order clusters by their mean adjusted-feature score and assign ordinal
    classes 0..k-1 in that order (ties break toward the lower cluster id).
    k = 5 gets the canonical Very Low..Very High labels."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != len(adjusted):
        raise AlignmentError("labels and adjusted matrix are misaligned")

    k = model.k
    feature_means = np.empty((k, adjusted.values.shape[1]))
    scores = np.empty(k)
    for cluster in range(k):
        members = adjusted.values[labels == cluster]
        if members.shape[0] == 0:
            raise AlignmentError(f"cluster {cluster} has no member rows in labels")
        feature_means[cluster] = members.mean(axis=0)
        scores[cluster] = feature_means[cluster].mean()

    order = sorted(range(k), key=lambda c: (scores[c], c))
    cluster_to_class = {cluster: rank for rank, cluster in enumerate(order)}
    if k == len(CLASS_LABELS):
        class_labels = CLASS_LABELS
    else:
        class_labels = tuple(f"Class {i}" for i in range(k))
    return ProxyLabeling(
        cluster_to_class=cluster_to_class,
        class_labels=class_labels,
        cluster_feature_means=feature_means,
        cluster_scores=tuple(float(s) for s in scores),
    )
