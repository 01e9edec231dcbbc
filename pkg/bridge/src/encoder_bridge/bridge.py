"""Tree-to-dataset pipelines: embeddings to EMB1/manifest, images to PGM."""

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .encoder import get_encoder
from .formats import write_canonical_json, write_emb1, write_pgm
from .images import (UnreadableImage, center_crop_square, list_tree,
                     load_image, quantize, resize_square, to_luma)


@dataclass(frozen=True)
class BridgeConfig:
    input_root: Path
    output_root: Path
    encoder: str = "patch-stats-64"
    batch_size: int = 32
    device: str = "cpu"
    grayscale: bool = False
    pgm_side: int = 64

    def __post_init__(self):
        object.__setattr__(self, "input_root", Path(self.input_root))
        object.__setattr__(self, "output_root", Path(self.output_root))
        if not self.input_root.is_dir():
            raise FileNotFoundError(f"input root is not a directory: "
                                    f"{self.input_root}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.pgm_side < 1:
            raise ValueError("pgm_side must be >= 1")


def _prompt_ids(tree) -> dict[str, int]:
    """Stable prompt-name -> id map shared across models: numeric directory
    names keep their numeric ids, otherwise ids follow sorted name order."""
    names = sorted({p for prompts in tree.values() for p in prompts})
    try:
        ids = {n: int(n) for n in names}
    except ValueError:
        return {n: i for i, n in enumerate(names)}
    if len(set(ids.values())) != len(names):
        raise ValueError("prompt directory names collide numerically")
    return ids


def _load_cell(files, skipped) -> list[np.ndarray]:
    images = []
    for path in files:
        try:
            images.append(load_image(path))
        except UnreadableImage as exc:
            warnings.warn(f"skipping unreadable image {path}: {exc}")
            skipped.append({"path": str(path), "reason": str(exc)})
    return images


def embed_tree(cfg: BridgeConfig) -> Path:
    """Walk input_root/<model>/<prompt>/<image>, embed every readable image,
    and write one EMB1 file per cell plus a manifest the audit toolkit loads.

    Embeddings are L2-normalized at write time and the manifest records that
    choice. Unreadable images are skipped with a warning and listed in the
    skipped.json sidecar; a cell with zero readable images is an error.
    """
    tree = list_tree(cfg.input_root)
    enc = get_encoder(cfg.encoder, cfg.device)
    prompt_ids = _prompt_ids(tree)
    model_names = sorted(tree)

    out = cfg.output_root
    (out / "cells").mkdir(parents=True, exist_ok=True)
    skipped: list[dict] = []
    cells = []
    for mi, model in enumerate(model_names):
        for prompt in sorted(tree[model], key=lambda n: prompt_ids[n]):
            images = _load_cell(tree[model][prompt], skipped)
            if not images:
                raise ValueError(f"cell {model}/{prompt} has no readable images")
            if cfg.grayscale:
                images = [to_luma(im) for im in images]
            rows = []
            for i in range(0, len(images), cfg.batch_size):
                rows.append(enc.encode_batch(images[i:i + cfg.batch_size]))
            emb = np.concatenate(rows).astype(np.float64)
            norms = np.linalg.norm(emb, axis=1, keepdims=True)
            if np.any(norms == 0):
                raise ValueError(f"degenerate zero embedding in cell "
                                 f"{model}/{prompt}")
            emb = (emb / norms).astype(np.float32)
            rel = f"cells/m{mi}_p{prompt_ids[prompt]}.emb"
            write_emb1(emb, out / rel)
            cells.append({"model": mi, "prompt": prompt_ids[prompt],
                          "path": rel})

    doc = {
        "dim": enc.dim,
        "models": model_names,
        "prompts": [{"id": prompt_ids[n], "text": n}
                    for n in sorted(prompt_ids, key=lambda n: prompt_ids[n])],
        "cells": cells,
        "encoder": cfg.encoder,
        "normalized": True,
    }
    manifest = out / "manifest.json"
    write_canonical_json(doc, manifest)
    write_canonical_json({"skipped": skipped}, out / "skipped.json")
    return manifest


def to_pgm_tree(cfg: BridgeConfig) -> Path:
    """Convert every readable image to grayscale (luma 0.299/0.587/0.114),
    center-crop to the largest square, resize to pgm_side, and write binary
    PGM mirroring the input layout under output_root."""
    tree = list_tree(cfg.input_root)
    out = cfg.output_root
    for model in sorted(tree):
        for prompt in sorted(tree[model]):
            dest = out / model / prompt
            dest.mkdir(parents=True, exist_ok=True)
            for path in tree[model][prompt]:
                try:
                    img = load_image(path)
                except UnreadableImage as exc:
                    warnings.warn(f"skipping unreadable image {path}: {exc}")
                    continue
                gray = resize_square(center_crop_square(to_luma(img)),
                                     cfg.pgm_side)
                write_pgm(quantize(gray), dest / f"{path.stem}.pgm")
    return out
