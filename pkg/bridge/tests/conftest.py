import numpy as np
import pytest
from PIL import Image


def make_tree(root, models, prompts, per_cell, size=(20, 26), seed=0):
    """Write a deterministic PNG tree root/<model>/<prompt>/<ii>.png."""
    rng = np.random.default_rng(seed)
    for model in models:
        for prompt in prompts:
            d = root / model / prompt
            d.mkdir(parents=True)
            for i in range(per_cell):
                arr = rng.integers(0, 256, size=(*size, 3), dtype=np.uint8)
                Image.fromarray(arr, "RGB").save(d / f"{i:02d}.png")
    return root


@pytest.fixture
def toy_tree(tmp_path):
    return make_tree(tmp_path / "imgs", ["modelA", "modelB"], ["0", "1"], 3)
