"""Writers for the embedding-dataset exchange formats.

The layouts here are a wire contract shared with the audit toolkit, written
independently on purpose: EMB1 is magic "EMB1", u32-LE dim, u32-LE count,
then count*dim float32-LE values row-major; the manifest is canonical JSON
(sorted keys, two-space indent, trailing newline) so reruns are comparable
byte for byte.
"""

import json
import struct
from pathlib import Path

import numpy as np

EMB1_MAGIC = b"EMB1"


def write_emb1(rows: np.ndarray, path) -> None:
    arr = np.asarray(rows, dtype=np.float32)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"need a nonempty (count, dim) array, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("refusing to write non-finite embeddings")
    count, dim = arr.shape
    with open(path, "wb") as f:
        f.write(EMB1_MAGIC)
        f.write(struct.pack("<II", dim, count))
        f.write(arr.astype("<f4").tobytes(order="C"))


def write_canonical_json(doc: dict, path) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
    Path(path).write_text(text)


def write_pgm(img: np.ndarray, path) -> None:
    """Binary 8-bit PGM, exactly header + w*h raster bytes (readers of this
    format reject trailing bytes)."""
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValueError("PGM image must be 2-D grayscale")
    if arr.dtype != np.uint8:
        raise ValueError("PGM raster must be uint8; quantize first")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write(arr.tobytes())
