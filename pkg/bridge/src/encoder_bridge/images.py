"""Image loading and geometry for the bridge: tree walking, luma, crop, resize."""

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

# the tree layout is root/<model>/<prompt>/<name>.{png|jpg}
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class UnreadableImage(Exception):
    """Raised when a file in the tree cannot be decoded as an image."""


def list_tree(root) -> dict[str, dict[str, list[Path]]]:
    """Map model dir -> prompt dir -> image files, every level name-sorted."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"input root is not a directory: {root}")
    tree: dict[str, dict[str, list[Path]]] = {}
    for model_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        prompts: dict[str, list[Path]] = {}
        for prompt_dir in sorted(p for p in model_dir.iterdir() if p.is_dir()):
            files = sorted(p for p in prompt_dir.iterdir()
                           if p.suffix.lower() in IMAGE_SUFFIXES)
            if files:
                prompts[prompt_dir.name] = files
        if prompts:
            tree[model_dir.name] = prompts
    if not tree:
        raise ValueError(f"no <model>/<prompt>/<image> cells under {root}")
    return tree


def load_image(path) -> np.ndarray:
    """Decode to uint8, (H, W) for grayscale sources or (H, W, 3) for color."""
    try:
        with Image.open(path) as im:
            if im.mode == "L":
                return np.asarray(im, dtype=np.uint8)
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise UnreadableImage(f"{path}: {exc}") from exc


def to_luma(img: np.ndarray) -> np.ndarray:
    """Grayscale as float64 on the 0..255 scale; single-channel input passes
    through untouched so already-gray pixels survive exactly."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] == 3:
        w = np.asarray(LUMA_WEIGHTS)
        return arr @ w
    raise ValueError(f"expected (H, W) or (H, W, 3), got {arr.shape}")


def center_crop_square(img: np.ndarray) -> np.ndarray:
    """Largest centered square; offsets floor toward the top-left."""
    h, w = img.shape[:2]
    side = min(h, w)
    top = (h - side) // 2
    left = (w - side) // 2
    return img[top:top + side, left:left + side]


def resize_square(gray: np.ndarray, side: int) -> np.ndarray:
    """Bilinear resize of a square float image; identity when already sized
    (the no-resample path is what keeps same-size inputs bit-exact)."""
    if gray.shape[0] == gray.shape[1] == side:
        return gray
    im = Image.fromarray(gray.astype(np.float32), mode="F")
    out = im.resize((side, side), Image.BILINEAR)
    return np.asarray(out, dtype=np.float64)


def quantize(gray: np.ndarray) -> np.ndarray:
    """0..255 float -> uint8 with round-to-nearest."""
    return np.clip(np.rint(gray), 0, 255).astype(np.uint8)
