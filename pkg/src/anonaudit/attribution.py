"""Nearest-centroid model attribution and one-vs-rest verification."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .store import Dataset


@dataclass(frozen=True)
class CentroidTable:
    """Per-prompt reference centroids; model_ids ascending, centroids float64."""

    model_ids: tuple[int, ...]
    centroids: np.ndarray

    def __post_init__(self) -> None:
        if len(self.model_ids) == 0:
            raise ValueError("centroid table needs at least one model")
        if list(self.model_ids) != sorted(set(self.model_ids)):
            raise ValueError("model ids must be ascending and unique")
        if self.centroids.shape[0] != len(self.model_ids):
            raise ValueError("one centroid per model id")


@dataclass(frozen=True)
class ThresholdModel:
    """Limited-information acceptance region: a centroid plus a radius."""

    centroid: np.ndarray
    lam: float
    alpha: float


def compute_centroid(rows) -> np.ndarray:
    """Arithmetic mean of reference vectors, accumulated in float64."""
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError("need a (k, d) array with k >= 1")
    return arr.mean(axis=0)


def build_centroid_table(ds: Dataset, prompt: int) -> CentroidTable:
    """Centroids for every model holding records at ``prompt``."""
    model_ids = ds.models_for_prompt(prompt)
    if not model_ids:
        raise ValueError(f"no models have records for prompt {prompt}")
    centroids = np.stack([compute_centroid(ds.cells[(m, prompt)]) for m in model_ids])
    return CentroidTable(tuple(model_ids), centroids)


def distances_to_centroids(query, table: CentroidTable) -> np.ndarray:
    """Float64 L2 distance from ``query`` to each table centroid."""
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (table.centroids.shape[1],):
        raise ValueError(f"query shape {q.shape} does not match table dim "
                         f"{table.centroids.shape[1]}")
    return np.linalg.norm(table.centroids - q, axis=1)


def rank_models(query, table: CentroidTable) -> list[int]:
    """Model ids by ascending distance; exact distance ties by ascending id."""
    d = distances_to_centroids(query, table)
    ids = np.asarray(table.model_ids)
    order = np.lexsort((ids, d))
    return [int(ids[i]) for i in order]


def classify(query, table: CentroidTable) -> int:
    return rank_models(query, table)[0]


def classify_batch(queries, table: CentroidTable) -> np.ndarray:
    """Vectorized classify for (n, d) queries; same tie rule as rank_models."""
    q = np.asarray(queries, dtype=np.float64)
    d = np.linalg.norm(q[:, None, :] - table.centroids[None, :, :], axis=2)
    # columns are ascending model id, so the first minimum is the tie winner
    first_min = np.argmax(d == d.min(axis=1, keepdims=True), axis=1)
    ids = np.asarray(table.model_ids)
    return ids[first_min]


def one_vs_rest_full(query, target_model: int, table: CentroidTable) -> bool:
    """Full-information verification: accept iff the nearest centroid is the target."""
    if target_model not in table.model_ids:
        raise ValueError(f"target model {target_model} not in table")
    return classify(query, table) == target_model


def nearest_rank_quantile(values, alpha: float) -> float:
    """ceil(alpha * k)-th smallest value (the nearest-rank quantile).

    alpha in (0, 1]; alpha = 1 gives the maximum.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    arr = np.sort(np.asarray(values, dtype=np.float64))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("need a non-empty 1-D collection")
    k = arr.size
    x = alpha * k
    # snap to the integer rank when alpha*k is integral up to float fuzz,
    # so e.g. alpha=0.8, k=5 lands on rank 4 and not 5
    nearest = round(x)
    rank = nearest if abs(x - nearest) < 1e-9 else math.ceil(x)
    rank = min(max(rank, 1), k)
    return float(arr[rank - 1])


def fit_threshold(reference_rows, alpha: float) -> ThresholdModel:
    """Fit the limited-information model from the target's own references.

    The radius is the nearest-rank alpha-quantile of the in-cluster distances
    from each reference vector to the reference centroid.
    """
    rows = np.asarray(reference_rows, dtype=np.float64)
    centroid = compute_centroid(rows)
    dists = np.linalg.norm(rows - centroid, axis=1)
    lam = nearest_rank_quantile(dists, alpha)
    return ThresholdModel(centroid=centroid, lam=lam, alpha=alpha)


def one_vs_rest_limited(query, model: ThresholdModel) -> bool:
    """Accept iff the query sits within the fitted radius (boundary inclusive)."""
    q = np.asarray(query, dtype=np.float64)
    if q.shape != model.centroid.shape:
        raise ValueError("query dimension does not match the fitted centroid")
    return bool(np.linalg.norm(q - model.centroid) <= model.lam)
