import numpy as np
import pytest

from anonaudit.store import SynthConfig, generate_synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_dataset():
    """4 models x 3 prompts x 6 records, well separated. Cheap enough for every test."""
    cfg = SynthConfig(dim=8, n_models=4, n_prompts=3, k_per_cell=6,
                      inter_sep=4.0, intra_std=1.0, rng_seed=7)
    return generate_synthetic(cfg)
