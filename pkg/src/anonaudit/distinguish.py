"""Prompt distinguishability via leave-one-out nearest-neighbor label agreement."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .store import Dataset

DEFAULT_TAU = 0.75


@dataclass(frozen=True)
class PromptPool:
    """Joint embedding pool for one prompt.

    Rows are ordered by (model id, within-cell position), so earlier index
    means lexicographically smaller (model, position). ``labels`` holds the
    model id per row, ``positions`` the within-cell index.
    """

    prompt: int
    vectors: np.ndarray
    labels: np.ndarray
    positions: np.ndarray

    @property
    def model_ids(self) -> list[int]:
        return sorted(set(self.labels.tolist()))


def build_prompt_pool(ds: Dataset, prompt: int) -> PromptPool:
    model_ids = ds.models_for_prompt(prompt)
    if not model_ids:
        raise ValueError(f"no models have records for prompt {prompt}")
    vecs, labels, positions = [], [], []
    for m in model_ids:
        rows = ds.cells[(m, prompt)].astype(np.float64)
        vecs.append(rows)
        labels.extend([m] * rows.shape[0])
        positions.extend(range(rows.shape[0]))
    return PromptPool(prompt=prompt,
                      vectors=np.vstack(vecs),
                      labels=np.asarray(labels, dtype=np.int64),
                      positions=np.asarray(positions, dtype=np.int64))


def nn_label(pool: PromptPool, index: int) -> int:
    """Model label of the nearest other row; exact ties by (model id, position)."""
    n = pool.vectors.shape[0]
    if not 0 <= index < n:
        raise ValueError(f"index {index} outside pool of size {n}")
    if n < 2:
        raise ValueError("pool needs at least two rows for leave-one-out")
    d = np.linalg.norm(pool.vectors - pool.vectors[index], axis=1)
    d[index] = np.inf
    order = np.lexsort((pool.positions, pool.labels, d))
    return int(pool.labels[order[0]])


def nn_labels_all(pool: PromptPool) -> np.ndarray:
    """Leave-one-out NN label for every row at once.

    Rows are stored in ascending (model, position) order, so taking the first
    index that attains the minimum distance applies the tie rule.
    """
    n = pool.vectors.shape[0]
    if n < 2:
        raise ValueError("pool needs at least two rows for leave-one-out")
    diff = pool.vectors[:, None, :] - pool.vectors[None, :, :]
    d = np.linalg.norm(diff, axis=2)
    np.fill_diagonal(d, np.inf)
    first_min = np.argmax(d == d.min(axis=1, keepdims=True), axis=1)
    return pool.labels[first_min]


def frac_same_model(pool: PromptPool, model: int) -> float:
    """Fraction of the model's rows whose leave-one-out NN is same-model."""
    mask = pool.labels == model
    if not mask.any():
        raise ValueError(f"model {model} has no rows in this pool")
    nn = nn_labels_all(pool)
    return float(np.mean(nn[mask] == model))


def prompt_distinguishability(ds: Dataset, prompt: int, tau: float = DEFAULT_TAU) -> float:
    """Share of the prompt's models whose same-model NN fraction exceeds tau (strict)."""
    if not 0.0 <= tau < 1.0:
        raise ValueError("tau must be in [0, 1)")
    pool = build_prompt_pool(ds, prompt)
    models = pool.model_ids
    if len(models) < 2:
        raise ValueError(f"prompt {prompt} has fewer than two models; "
                         "distinguishability is undefined")
    nn = nn_labels_all(pool)
    hits = 0
    for m in models:
        mask = pool.labels == m
        if float(np.mean(nn[mask] == m)) > tau:
            hits += 1
    return hits / len(models)


def rank_prompts(ds: Dataset, tau: float = DEFAULT_TAU) -> list[tuple[int, float]]:
    """All prompts by descending distinguishability, ties by ascending prompt id.

    Prompts where the score is undefined (fewer than two models) are skipped
    with a warning rather than failing the whole ranking.
    """
    scored = []
    for p in range(ds.n_prompts):
        try:
            scored.append((p, prompt_distinguishability(ds, p, tau)))
        except ValueError as exc:
            warnings.warn(f"skipping prompt {p}: {exc}")
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored


def select_prompts(ds: Dataset, tau: float = DEFAULT_TAU, d_min: float = 1.0) -> list[int]:
    """Prompt ids (ascending) whose distinguishability reaches d_min."""
    if not 0.0 <= d_min <= 1.0:
        raise ValueError("d_min must be in [0, 1]")
    return sorted(p for p, d in rank_prompts(ds, tau) if d >= d_min)
