"""Image featurizers for the bridge.

The default encoder is a deterministic offline featurizer: block statistics
and gradient energies on a fixed working grid, pushed through a frozen random
projection. It exists so the full pipeline runs with no model downloads and
bit-identical outputs everywhere; pretrained backends plug in through
``register_encoder`` without touching the pipeline.
"""

import numpy as np

from .images import center_crop_square, resize_square, to_luma

_WORK_SIDE = 32  # all features are computed on a 32x32 luma grid
_GRID = 8
_PROJECTION_SEED = 9257


class PatchStatsEncoder:
    """Block means/stds + gradient energies -> frozen projection -> tanh."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("embedding dim must be >= 1")
        self._dim = dim
        n_features = 2 * _GRID * _GRID + 2 * 16 + 1
        rng = np.random.default_rng(_PROJECTION_SEED)
        self._proj = rng.standard_normal((n_features, dim)) / np.sqrt(n_features)

    @property
    def dim(self) -> int:
        return self._dim

    def _features(self, img: np.ndarray) -> np.ndarray:
        gray = resize_square(center_crop_square(to_luma(img)), _WORK_SIDE) / 255.0
        b = _WORK_SIDE // _GRID
        blocks = gray.reshape(_GRID, b, _GRID, b).swapaxes(1, 2)
        means = blocks.mean(axis=(2, 3)).ravel()
        stds = blocks.std(axis=(2, 3)).ravel()
        gx = np.abs(np.diff(gray, axis=1))
        gy = np.abs(np.diff(gray, axis=0))
        # gradient energy on a coarser 4x4 grid; the uneven tail column/row of
        # the diff image is folded into the last cell
        gxe = [c.mean() for c in np.array_split(gx, 4, axis=0) for c in
               np.array_split(c, 4, axis=1)]
        gye = [c.mean() for c in np.array_split(gy, 4, axis=0) for c in
               np.array_split(c, 4, axis=1)]
        return np.concatenate([means, stds, gxe, gye, [1.0]])

    def encode_batch(self, images) -> np.ndarray:
        imgs = list(images)
        if not imgs:
            raise ValueError("empty batch")
        feats = np.stack([self._features(im) for im in imgs])
        return np.tanh(feats @ self._proj).astype(np.float32)


_REGISTRY = {
    "patch-stats-64": lambda device: PatchStatsEncoder(64),
    "patch-stats-256": lambda device: PatchStatsEncoder(256),
}


def register_encoder(name: str, factory) -> None:
    """Add a backend: ``factory(device) -> encoder`` with .dim/.encode_batch."""
    if not name:
        raise ValueError("encoder name must be nonempty")
    _REGISTRY[name] = factory


def get_encoder(name: str, device: str = "cpu"):
    try:
        factory = _REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(_REGISTRY))
        raise ValueError(f"unknown encoder {name!r}; registered: {known}") from None
    return factory(device)


def encoder_names() -> list[str]:
    return sorted(_REGISTRY)
