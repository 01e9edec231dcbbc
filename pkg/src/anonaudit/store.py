"""Embedding datasets: EMB1 binary interchange, JSON manifests, synthetic generation."""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EMB1_MAGIC = b"EMB1"


@dataclass(frozen=True)
class Prompt:
    """One leaderboard prompt; text may be empty for synthetic data."""

    id: int
    text: str = ""


@dataclass(frozen=True)
class EmbeddingRecord:
    model: int
    prompt: int
    seed_index: int
    vector: np.ndarray


@dataclass
class Dataset:
    """Immutable-by-convention collection of per-(model, prompt) embedding cells.

    ``cells`` maps (model_id, prompt_id) to a float32 array of shape (k, dim).
    Model and prompt ids are dense 0..n-1; ``model_names[i]`` names model i.
    """

    dim: int
    model_names: list[str]
    prompts: list[Prompt]
    cells: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if len(set(self.model_names)) != len(self.model_names):
            raise ValueError("model names must be unique")
        for i, p in enumerate(self.prompts):
            if p.id != i:
                raise ValueError(f"prompt ids must be dense 0..p-1, got {p.id} at {i}")
        for (m, p), rows in self.cells.items():
            if not (0 <= m < len(self.model_names)):
                raise ValueError(f"cell references unknown model {m}")
            if not (0 <= p < len(self.prompts)):
                raise ValueError(f"cell references unknown prompt {p}")
            if rows.ndim != 2 or rows.shape[1] != self.dim:
                raise ValueError(f"cell ({m},{p}) has shape {rows.shape}, want (*, {self.dim})")
            if rows.shape[0] < 1:
                raise ValueError(f"cell ({m},{p}) is empty")
            if not np.all(np.isfinite(rows)):
                raise ValueError(f"cell ({m},{p}) contains non-finite values")

    @property
    def n_models(self) -> int:
        return len(self.model_names)

    @property
    def n_prompts(self) -> int:
        return len(self.prompts)

    def cell(self, model: int, prompt: int) -> np.ndarray:
        return self.cells[(model, prompt)]

    def models_for_prompt(self, prompt: int) -> list[int]:
        return sorted(m for (m, p) in self.cells if p == prompt)

    def records(self):
        """Iterate EmbeddingRecord rows in deterministic (model, prompt, seed) order."""
        for (m, p) in sorted(self.cells):
            rows = self.cells[(m, p)]
            for j in range(rows.shape[0]):
                yield EmbeddingRecord(m, p, j, rows[j])

    def n_records(self) -> int:
        return sum(rows.shape[0] for rows in self.cells.values())


def write_embedding_file(rows, path) -> None:
    """Write vectors to ``path`` in the EMB1 layout.

    Layout is exactly: magic "EMB1", u32-LE dim, u32-LE count, then
    count*dim float32-LE values row-major.
    """
    arr = np.asarray(rows, dtype=np.float32)
    if arr.size == 0 or arr.ndim == 0 or (arr.ndim >= 1 and arr.shape[0] == 0):
        raise ValueError("no rows")
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"rows must share one dimension, got shape {arr.shape}")
    count, dim = arr.shape
    if dim < 1:
        raise ValueError("vector dimension must be >= 1")
    with open(path, "wb") as f:
        f.write(EMB1_MAGIC)
        f.write(struct.pack("<II", dim, count))
        f.write(arr.astype("<f4").tobytes(order="C"))


def read_embedding_file(path) -> np.ndarray:
    """Read an EMB1 file back into a (count, dim) float32 array."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != EMB1_MAGIC:
        raise ValueError(f"bad magic in {path}: {data[:4]!r}")
    if len(data) < 12:
        raise ValueError(f"truncated header in {path}")
    dim, count = struct.unpack("<II", data[4:12])
    payload = data[12:]
    want = 4 * dim * count
    if len(payload) < want:
        raise ValueError(f"truncated payload in {path}: header claims {count}x{dim}, "
                         f"{len(payload)} bytes present")
    if len(payload) > want:
        raise ValueError(f"trailing bytes in {path}")
    arr = np.frombuffer(payload, dtype="<f4").reshape(count, dim).astype(np.float32)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite values in {path}")
    return arr


def load_manifest(path) -> Dataset:
    """Materialize a Dataset from a manifest.json and its EMB1 cell files.

    Schema: {"dim": int, "models": [str], "prompts": [{"id": int, "text": str}],
    "cells": [{"model": int, "prompt": int, "path": str}]} with cell paths
    relative to the manifest location.
    """
    path = Path(path)
    with open(path) as f:
        doc = json.load(f)
    dim = int(doc["dim"])
    model_names = [str(m) for m in doc["models"]]
    prompts = [Prompt(int(p["id"]), str(p.get("text", ""))) for p in doc["prompts"]]
    cells: dict[tuple[int, int], np.ndarray] = {}
    for entry in doc["cells"]:
        key = (int(entry["model"]), int(entry["prompt"]))
        if key in cells:
            raise ValueError(f"duplicate cell {key} in manifest")
        cell_path = path.parent / entry["path"]
        if not cell_path.exists():
            raise FileNotFoundError(f"manifest references missing file: {cell_path}")
        rows = read_embedding_file(cell_path)
        if rows.shape[1] != dim:
            raise ValueError(f"dimension mismatch: manifest dim={dim} but "
                             f"{cell_path} has dim={rows.shape[1]}")
        cells[key] = rows
    return Dataset(dim=dim, model_names=model_names, prompts=prompts, cells=cells)


def save_dataset(ds: Dataset, out_dir, manifest_name: str = "manifest.json") -> Path:
    """Write ``ds`` as manifest.json plus one EMB1 file per cell; returns manifest path."""
    out = Path(out_dir)
    (out / "cells").mkdir(parents=True, exist_ok=True)
    cell_entries = []
    for (m, p) in sorted(ds.cells):
        rel = f"cells/m{m:03d}_p{p:04d}.emb"
        write_embedding_file(ds.cells[(m, p)], out / rel)
        cell_entries.append({"model": m, "prompt": p, "path": rel})
    doc = {
        "dim": ds.dim,
        "models": list(ds.model_names),
        "prompts": [{"id": p.id, "text": p.text} for p in ds.prompts],
        "cells": cell_entries,
    }
    manifest = out / manifest_name
    with open(manifest, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest


def dataset_hash(ds: Dataset) -> str:
    """Content hash over dims, names, prompts, and raw cell bytes (order-canonical)."""
    h = hashlib.sha256()
    h.update(struct.pack("<I", ds.dim))
    for name in ds.model_names:
        h.update(name.encode())
        h.update(b"\x00")
    for p in ds.prompts:
        h.update(struct.pack("<I", p.id))
        h.update(p.text.encode())
        h.update(b"\x00")
    for (m, p) in sorted(ds.cells):
        h.update(struct.pack("<II", m, p))
        h.update(np.ascontiguousarray(ds.cells[(m, p)], dtype="<f4").tobytes())
    return h.hexdigest()


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic cluster generator.

    ``inter_sep`` is the expected pairwise distance between cell centers;
    ``intra_std`` the per-coordinate noise std within a cell.
    """

    dim: int
    n_models: int
    n_prompts: int
    k_per_cell: int
    inter_sep: float
    intra_std: float
    rng_seed: int = 0

    def __post_init__(self) -> None:
        for name in ("dim", "n_models", "n_prompts", "k_per_cell"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.inter_sep < 0:
            raise ValueError("inter_sep must be >= 0")
        if self.intra_std <= 0:
            raise ValueError("intra_std must be > 0")


def mean_chord_length(dim: int) -> float:
    """Expected distance between two uniform points on the unit sphere S^(dim-1).

    Closed form 2^(d-1) * Gamma(d/2)^2 / (sqrt(pi) * Gamma(d - 1/2)); equals
    4/pi for the circle and 4/3 for the 2-sphere.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    log_val = ((dim - 1) * math.log(2.0) + 2.0 * math.lgamma(dim / 2.0)
               - 0.5 * math.log(math.pi) - math.lgamma(dim - 0.5))
    return math.exp(log_val)


def generate_synthetic(config: SynthConfig) -> Dataset:
    """Draw a clustered dataset: one sphere-sampled center per (prompt, model) cell,
    plus isotropic Gaussian noise per record.

    Centers live on a sphere whose radius makes the expected pairwise center
    distance equal ``inter_sep``. Identical configs give bit-identical datasets.
    """
    rng = np.random.default_rng(config.rng_seed)
    radius = config.inter_sep / mean_chord_length(config.dim)
    cells: dict[tuple[int, int], np.ndarray] = {}
    for p in range(config.n_prompts):
        for m in range(config.n_models):
            g = rng.standard_normal(config.dim)
            norm = np.linalg.norm(g)
            center = (radius / norm) * g if norm > 0 else np.zeros(config.dim)
            noise = rng.standard_normal((config.k_per_cell, config.dim)) * config.intra_std
            cells[(m, p)] = (center + noise).astype(np.float32)
    model_names = [f"model-{m:02d}" for m in range(config.n_models)]
    prompts = [Prompt(p) for p in range(config.n_prompts)]
    return Dataset(dim=config.dim, model_names=model_names, prompts=prompts, cells=cells)


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """Scale vector(s) to unit L2 norm along the last axis; rejects zero vectors."""
    arr = np.asarray(v, dtype=np.float64)
    norms = np.linalg.norm(arr, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("cannot normalize zero vector")
    return arr / norms


def normalized_dataset(ds: Dataset) -> Dataset:
    """Copy of ``ds`` with every record L2-normalized (float32 storage kept)."""
    cells = {key: l2_normalize(rows).astype(np.float32) for key, rows in ds.cells.items()}
    return Dataset(dim=ds.dim, model_names=list(ds.model_names),
                   prompts=list(ds.prompts), cells=cells)


def split_reference_holdout(ds: Dataset, k_ref: int, rng_seed: int) -> tuple[Dataset, Dataset]:
    """Per cell, sample k_ref records without replacement into a reference split;
    the remainder becomes the holdout. Deterministic under rng_seed.
    """
    if k_ref < 1:
        raise ValueError("k_ref must be >= 1")
    rng = np.random.default_rng(rng_seed)
    ref_cells: dict[tuple[int, int], np.ndarray] = {}
    hold_cells: dict[tuple[int, int], np.ndarray] = {}
    for key in sorted(ds.cells):
        rows = ds.cells[key]
        k = rows.shape[0]
        if k <= k_ref:
            raise ValueError(f"cell {key} has {k} records; need more than k_ref={k_ref}")
        perm = rng.permutation(k)
        ref_idx = np.sort(perm[:k_ref])
        hold_idx = np.sort(perm[k_ref:])
        ref_cells[key] = rows[ref_idx]
        hold_cells[key] = rows[hold_idx]
    ref = Dataset(ds.dim, list(ds.model_names), list(ds.prompts), ref_cells)
    hold = Dataset(ds.dim, list(ds.model_names), list(ds.prompts), hold_cells)
    return ref, hold


def concat_prompt_groups(datasets: list[Dataset]) -> Dataset:
    """Stack datasets that share dim and model set into one, renumbering prompts.

    Used to build mixed-separation benchmarks where different prompt blocks come
    from generators with different inter/intra ratios.
    """
    if not datasets:
        raise ValueError("no datasets to concatenate")
    first = datasets[0]
    cells: dict[tuple[int, int], np.ndarray] = {}
    prompts: list[Prompt] = []
    offset = 0
    for ds in datasets:
        if ds.dim != first.dim:
            raise ValueError("all datasets must share dim")
        if ds.model_names != first.model_names:
            raise ValueError("all datasets must share the model list")
        for p in ds.prompts:
            prompts.append(Prompt(offset + p.id, p.text))
        for (m, p), rows in ds.cells.items():
            cells[(m, offset + p)] = rows
        offset += ds.n_prompts
    return Dataset(first.dim, list(first.model_names), prompts, cells)
