"""Exact k-nearest-neighbour retrieval under Euclidean distance.

The pools this package targets are small enough (tens of thousands of rows)
that exact chunked distance computation beats any index structure, and
exactness matters: downstream scores are asserted to tight tolerances and
ties must break deterministically by ascending pool index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset

# Rows of the query chunk processed per pairwise block; keeps the
# (chunk, n_ref) float64 block well under 100 MB for typical pools.
_CHUNK_ROWS = 256


@dataclass(frozen=True)
class NeighborSet:
    """Distances, labels and pool indices of each query's nearest points.

    Arrays share shape (k,) for a single query or (n_queries, k) for a
    batch. As produced by :func:`knn` each row is sorted by ascending
    distance with ties broken by ascending pool index; the dataclass itself
    does not require sortedness, so entry order may be permuted freely by
    order-insensitive consumers.
    """

    distances: np.ndarray
    labels: np.ndarray
    indices: np.ndarray

    def __post_init__(self) -> None:
        dist = np.asarray(self.distances, dtype=np.float64)
        labels = np.asarray(self.labels)
        idx = np.asarray(self.indices, dtype=np.int64)
        if dist.ndim not in (1, 2) or dist.shape != idx.shape or dist.shape != labels.shape:
            raise ValueError("distances, labels and indices must share shape (k,) or (n, k)")
        if dist.shape[-1] == 0:
            raise ValueError("a NeighborSet must contain at least one entry")
        for a in (dist, labels, idx):
            a.flags.writeable = False
        object.__setattr__(self, "distances", dist)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "indices", idx)

    @property
    def k(self) -> int:
        return self.distances.shape[-1]

    @property
    def is_batch(self) -> bool:
        return self.distances.ndim == 2


def euclidean_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be 1-d vectors of equal length")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def pairwise_sq_distances(queries: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape (n_queries, n_reference).

    Computed per chunk as |q|^2 - 2 q.r + |r|^2 and clamped at zero; the
    expansion can go slightly negative for near-identical points.
    """
    queries = np.asarray(queries, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if queries.ndim != 2 or reference.ndim != 2 or queries.shape[1] != reference.shape[1]:
        raise ValueError("queries and reference must be 2-d with matching columns")
    ref_sq = np.einsum("ij,ij->i", reference, reference)
    out = np.empty((queries.shape[0], reference.shape[0]))
    for start in range(0, queries.shape[0], _CHUNK_ROWS):
        chunk = queries[start : start + _CHUNK_ROWS]
        sq = np.einsum("ij,ij->i", chunk, chunk)[:, None] - 2.0 * (chunk @ reference.T) + ref_sq
        np.maximum(sq, 0.0, out=sq)
        out[start : start + _CHUNK_ROWS] = sq
    return out


def nearest_neighbors(
    queries: np.ndarray,
    reference: np.ndarray,
    k: int,
    exclude_self: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """(indices, distances) of the k nearest reference rows per query row.

    The raw matrix-level core behind :func:`knn`; k must not exceed the
    available reference rows. ``exclude_self`` treats query row i and
    reference row i as the same point and skips it, for scoring a set
    against itself.
    """
    queries = np.asarray(queries, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    n_ref = reference.shape[0]
    budget = n_ref - 1 if exclude_self else n_ref
    if k < 1:
        raise ValueError("k must be at least 1")
    if budget < k:
        raise ValueError(f"k={k} exceeds the {budget} available reference rows")
    if exclude_self and queries.shape[0] != n_ref:
        raise ValueError("exclude_self requires equal query and reference row counts")

    sq = pairwise_sq_distances(queries, reference)
    if exclude_self:
        np.fill_diagonal(sq, np.inf)
    # A stable sort of the full row keeps equal distances in ascending index
    # order; argpartition would be faster but breaks ties arbitrarily.
    order = np.argsort(sq, axis=1, kind="stable")[:, :k]
    picked = np.take_along_axis(sq, order, axis=1)
    return order.astype(np.int64), np.sqrt(picked)


def knn(pool: Dataset, query: np.ndarray, k: int) -> NeighborSet:
    """The min(k, pool size) nearest labelled points for each query.

    ``query`` is one feature vector or a (n, d) batch; entries come back
    sorted by distance, ties by ascending pool index.
    """
    if pool.n_rows < 1:
        raise ValueError("pool is empty")
    if k < 1:
        raise ValueError("k must be at least 1")
    query = np.asarray(query, dtype=np.float64)
    single = query.ndim == 1
    Q = query[None, :] if single else query
    if Q.ndim != 2 or Q.shape[1] != pool.n_features:
        raise ValueError(f"query must have {pool.n_features} features")
    k_eff = min(k, pool.n_rows)
    idx, dist = nearest_neighbors(Q, pool.features, k_eff)
    labels = pool.labels[idx]
    if single:
        idx, dist, labels = idx[0], dist[0], labels[0]
    return NeighborSet(distances=dist, labels=labels, indices=idx)
