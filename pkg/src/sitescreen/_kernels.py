"""Numba kernels for batch evaluation of flattened tree ensembles.

Trees are flattened into structure-of-arrays form (feature, threshold, child
indices, leaf value) with one root offset per tree. Margins accumulate per
class in tree order, so results are bit-identical to a sequential per-tree
walk in Python.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def margins_batch(X, node_feature, node_threshold, node_left, node_right, node_value,
                  tree_roots, tree_class, n_classes, base_score):
    n = X.shape[0]
    out = np.full((n, n_classes), base_score)
    n_trees = tree_roots.shape[0]
    for i in prange(n):
        for t in range(n_trees):
            node = tree_roots[t]
            f = node_feature[node]
            while f >= 0:
                if X[i, f] < node_threshold[node]:
                    node = node_left[node]
                else:
                    node = node_right[node]
                f = node_feature[node]
            out[i, tree_class[t]] += node_value[node]
    return out
