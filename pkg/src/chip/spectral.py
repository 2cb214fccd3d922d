"""Spectral community detection on aggregated event matrices.

The directed variant embeds nodes with the top-k left and right singular
vectors of the count or adjacency matrix, row-normalizes, and clusters with
k-means.  The undirected variant uses the eigenvectors of the k largest-
magnitude eigenvalues of a symmetric matrix, without row normalization.

All entry points are deterministic for a fixed seed.  Singular vector signs
are arbitrary, but a global sign flip reflects the whole embedding and leaves
k-means distances unchanged.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment
from scipy.sparse.linalg import eigsh, svds
from scipy.spatial.distance import cdist

from .network import CommunityAssignment

DENSE_EIGEN_MAX = 2000
KMEANS_RESTARTS = 10
KMEANS_MAX_ITER = 300
KMEANS_REL_TOL = 1e-6


def _as_labels(x) -> np.ndarray:
    if isinstance(x, CommunityAssignment):
        return x.labels
    return np.ascontiguousarray(x, dtype=np.int64)


def _top_singular_vectors(matrix, k: int):
    """Left and right singular vectors of the k largest singular values."""
    n = matrix.shape[0]
    if n <= DENSE_EIGEN_MAX or k >= n:
        dense = matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix)
        u, _, vt = np.linalg.svd(dense.astype(np.float64), full_matrices=False)
        return u[:, :k], vt[:k].T
    fmat = matrix.astype(np.float64)
    v0 = np.full(n, 1.0 / np.sqrt(n))  # fixed start vector keeps runs identical
    u, s, vt = svds(fmat, k=k, v0=v0)
    order = np.argsort(s)[::-1]
    return u[:, order], vt[order].T


def singular_values(matrix, k_max: int) -> np.ndarray:
    """The k_max largest singular values in descending order."""
    n = matrix.shape[0]
    if k_max < 1 or k_max > n:
        raise ValueError(f"k_max must lie in [1, {n}], got {k_max}")
    if n <= DENSE_EIGEN_MAX or k_max >= n - 1:
        dense = matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix)
        return np.linalg.svd(dense.astype(np.float64), compute_uv=False)[:k_max]
    v0 = np.full(n, 1.0 / np.sqrt(n))
    s = svds(matrix.astype(np.float64), k=k_max, v0=v0, return_singular_vectors=False)
    return np.sort(s)[::-1]


def eigengap_select_k(matrix, k_max: int):
    """Pick k at the largest consecutive singular value gap.

    Returns (k, values) where values holds the k_max leading singular values
    and k maximizes values[k-1] - values[k] over k in [1, k_max - 1]; ties go
    to the smallest k.
    """
    if k_max < 2:
        raise ValueError(f"k_max must be >= 2 to form a gap, got {k_max}")
    values = singular_values(matrix, k_max)
    gaps = values[:-1] - values[1:]
    return int(np.argmax(gaps)) + 1, values


def kmeans(
    points: np.ndarray,
    k: int,
    rng: np.random.Generator,
    restarts: int = KMEANS_RESTARTS,
    max_iter: int = KMEANS_MAX_ITER,
    tol: float = KMEANS_REL_TOL,
) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding; best of `restarts` runs.

    Iteration stops when the relative inertia improvement drops below tol.
    A cluster that empties is re-seeded at the point currently farthest from
    its centroid.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    n = points.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    best_labels, best_inertia = None, np.inf
    for _ in range(max(1, restarts)):
        labels, inertia = _kmeans_once(points, k, rng, max_iter, tol)
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return best_labels


def _plus_plus_init(points, k, rng):
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    d2 = cdist(points, centroids[:1], "sqeuclidean").ravel()
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)  # all points coincide with a centroid
        centroids[c] = points[idx]
        d2 = np.minimum(d2, cdist(points, centroids[c : c + 1], "sqeuclidean").ravel())
    return centroids


def _kmeans_once(points, k, rng, max_iter, tol):
    n = points.shape[0]
    centroids = _plus_plus_init(points, k, rng)
    labels = np.zeros(n, dtype=np.int64)
    prev_inertia = np.inf
    for _ in range(max_iter):
        d2 = cdist(points, centroids, "sqeuclidean")
        labels = np.argmin(d2, axis=1)
        point_d2 = d2[np.arange(n), labels]
        for c in range(k):
            mask = labels == c
            if mask.any():
                centroids[c] = points[mask].mean(axis=0)
            else:
                far = int(np.argmax(point_d2))
                centroids[c] = points[far]
                labels[far] = c
                point_d2[far] = 0.0
        inertia = float(point_d2.sum())
        if np.isfinite(prev_inertia) and prev_inertia - inertia <= tol * max(
            prev_inertia, 1e-300
        ):
            break
        prev_inertia = inertia
    d2 = cdist(points, centroids, "sqeuclidean")
    labels = np.argmin(d2, axis=1).astype(np.int64)
    return labels, float(d2[np.arange(n), labels].sum())


def spectral_cluster_directed(
    matrix, k: int, seed: int = 0, restarts: int = KMEANS_RESTARTS
) -> CommunityAssignment:
    """Cluster a directed count or adjacency matrix into k blocks.

    Embeds each node by its rows of [U V] from the top-k SVD, scales every
    nonzero embedding row to unit length (zero rows stay zero), and runs
    k-means on the result.
    """
    n = matrix.shape[0]
    if matrix.shape[0] != matrix.shape[1]:
        raise ValueError("matrix must be square")
    if k < 1 or k > n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    if k == 1:
        return CommunityAssignment(labels=np.zeros(n, dtype=np.int64), k=1)
    u, v = _top_singular_vectors(matrix, k)
    embedding = np.hstack([u, v])
    norms = np.linalg.norm(embedding, axis=1, keepdims=True)
    embedding = np.where(norms > 0, embedding / np.where(norms > 0, norms, 1.0), 0.0)
    labels = kmeans(embedding, k, np.random.default_rng(seed), restarts=restarts)
    return CommunityAssignment(labels=labels, k=k)


def spectral_cluster_undirected(
    matrix, k: int, seed: int = 0, restarts: int = KMEANS_RESTARTS
) -> CommunityAssignment:
    """Cluster a symmetric matrix via its k largest-magnitude eigenvalues.

    Embedding rows are not normalized.  Magnitude ordering keeps strongly
    negative eigenvalues, which carry the structure of disassortative blocks.
    """
    n = matrix.shape[0]
    if matrix.shape[0] != matrix.shape[1]:
        raise ValueError("matrix must be square")
    if k < 1 or k > n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    if k == 1:
        return CommunityAssignment(labels=np.zeros(n, dtype=np.int64), k=1)
    if n <= DENSE_EIGEN_MAX or k >= n - 1:
        dense = matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix)
        values, vectors = np.linalg.eigh(dense.astype(np.float64))
        keep = np.argsort(np.abs(values))[::-1][:k]
    else:
        v0 = np.full(n, 1.0 / np.sqrt(n))
        values, vectors = eigsh(matrix.astype(np.float64), k=k, which="LM", v0=v0)
        keep = np.argsort(np.abs(values))[::-1]
    embedding = vectors[:, keep]
    labels = kmeans(embedding, k, np.random.default_rng(seed))
    return CommunityAssignment(labels=labels, k=k)


def _contingency(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ka = int(a.max()) + 1 if a.size else 1
    kb = int(b.max()) + 1 if b.size else 1
    table = np.zeros((ka, kb), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    return table


def adjusted_rand(a, b) -> float:
    """Adjusted Rand index between two labelings of the same nodes.

    Computed from the contingency table; 1 for identical partitions, about 0
    for independent ones.  When the pair-count denominator degenerates (for
    example both partitions trivial) the partitions are identical and the
    index is 1 by convention.
    """
    a, b = _as_labels(a), _as_labels(b)
    if a.size != b.size:
        raise ValueError("labelings must cover the same nodes")
    if a.size < 2:
        return 1.0

    def comb2(x):
        return x * (x - 1.0) / 2.0

    table = _contingency(a, b)
    sum_cells = comb2(table.astype(np.float64)).sum()
    sum_rows = comb2(table.sum(axis=1).astype(np.float64)).sum()
    sum_cols = comb2(table.sum(axis=0).astype(np.float64)).sum()
    total = comb2(float(a.size))
    expected = sum_rows * sum_cols / total
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def best_label_alignment(truth, pred, k: int) -> np.ndarray:
    """Permutation perm with perm[pred_label] -> truth label, maximizing matches."""
    truth, pred = _as_labels(truth), _as_labels(pred)
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (pred, truth), 1)
    rows, cols = linear_sum_assignment(-confusion)
    perm = np.empty(k, dtype=np.int64)
    perm[rows] = cols
    return perm


def misclustering_rate(truth, pred) -> float:
    """Fraction of misassigned nodes under the best label permutation."""
    truth, pred = _as_labels(truth), _as_labels(pred)
    if truth.size != pred.size:
        raise ValueError("labelings must cover the same nodes")
    if truth.size == 0:
        return 0.0
    confusion = _contingency(truth, pred)
    rows, cols = linear_sum_assignment(-confusion)
    matched = confusion[rows, cols].sum()
    return float(1.0 - matched / truth.size)
