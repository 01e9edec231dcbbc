"""Distinguishability: pool construction, NN tie rules, score semantics."""

import numpy as np
import pytest

from anonaudit.distinguish import (
    build_prompt_pool,
    frac_same_model,
    nn_label,
    nn_labels_all,
    prompt_distinguishability,
    rank_prompts,
    select_prompts,
)
from anonaudit.store import Dataset, Prompt, SynthConfig, generate_synthetic


def dataset_from_cells(cells, n_models, n_prompts, dim):
    names = [f"m{i}" for i in range(n_models)]
    prompts = [Prompt(i) for i in range(n_prompts)]
    cast = {k: np.asarray(v, dtype=np.float32) for k, v in cells.items()}
    return Dataset(dim=dim, model_names=names, prompts=prompts, cells=cast)


def line_dataset():
    """Two models on a line, clusters far apart: every NN is same-model."""
    return dataset_from_cells(
        {(0, 0): [[0.0], [1.0]], (1, 0): [[10.0], [11.0]]},
        n_models=2, n_prompts=1, dim=1)


def test_pool_row_order_is_model_then_position():
    ds = line_dataset()
    pool = build_prompt_pool(ds, 0)
    assert pool.labels.tolist() == [0, 0, 1, 1]
    assert pool.positions.tolist() == [0, 1, 0, 1]
    assert pool.vectors[:, 0].tolist() == [0.0, 1.0, 10.0, 11.0]


def test_nn_label_separated_clusters():
    pool = build_prompt_pool(line_dataset(), 0)
    assert [nn_label(pool, i) for i in range(4)] == [0, 0, 1, 1]
    assert nn_labels_all(pool).tolist() == [0, 0, 1, 1]


def test_nn_label_crosses_clusters_when_closer():
    ds = dataset_from_cells(
        {(0, 0): [[0.0], [1.0], [6.0]], (1, 0): [[5.0], [20.0]]},
        n_models=2, n_prompts=1, dim=1)
    pool = build_prompt_pool(ds, 0)
    # model 0's 6.0 sits next to the other model's 5.0
    assert nn_label(pool, 2) == 1
    assert frac_same_model(pool, 0) == pytest.approx(2 / 3)


def test_nn_tie_prefers_lower_model_then_position():
    """Query at 0 with candidates at -1 (model 1) and +1 (model 0): exact tie
    goes to model 0. Within a model, earlier position wins."""
    ds = dataset_from_cells(
        {(0, 0): [[1.0], [30.0]], (1, 0): [[-1.0], [0.0]]},
        n_models=2, n_prompts=1, dim=1)
    pool = build_prompt_pool(ds, 0)
    query_index = pool.vectors[:, 0].tolist().index(0.0)
    assert nn_label(pool, query_index) == 0

    dup = dataset_from_cells({(0, 0): [[5.0], [5.0], [0.0]]},
                             n_models=1, n_prompts=1, dim=1)
    pool2 = build_prompt_pool(dup, 0)
    d = np.linalg.norm(pool2.vectors - pool2.vectors[2], axis=1)
    assert d[0] == d[1]  # genuine tie, resolved by position
    assert nn_label(pool2, 2) == 0


def test_nn_labels_all_matches_scalar(rng):
    cfg = SynthConfig(dim=4, n_models=3, n_prompts=1, k_per_cell=15,
                      inter_sep=1.0, intra_std=1.0, rng_seed=5)
    pool = build_prompt_pool(generate_synthetic(cfg), 0)
    fast = nn_labels_all(pool)
    slow = [nn_label(pool, i) for i in range(pool.vectors.shape[0])]
    assert fast.tolist() == slow


def test_distinguishability_extremes():
    assert prompt_distinguishability(line_dataset(), 0) == 1.0
    # identical point sets per model: leave-one-out always finds another
    # model's copy first (self is excluded), so no model looks distinct
    same = dataset_from_cells(
        {(0, 0): [[0.0], [1.0]], (1, 0): [[0.0], [1.0]], (2, 0): [[0.0], [1.0]]},
        n_models=3, n_prompts=1, dim=1)
    assert prompt_distinguishability(same, 0, tau=0.75) == 0.0


def test_distinguishability_strict_inequality():
    """frac exactly equal to tau must NOT count."""
    # model 0: 4 points, one defects to model 1's cluster -> frac = 0.75
    ds = dataset_from_cells(
        {(0, 0): [[0.0], [0.1], [0.2], [10.0]],
         (1, 0): [[10.1], [10.2], [10.3], [10.4]]},
        n_models=2, n_prompts=1, dim=1)
    pool = build_prompt_pool(ds, 0)
    assert frac_same_model(pool, 0) == 0.75
    assert frac_same_model(pool, 1) == 1.0
    assert prompt_distinguishability(ds, 0, tau=0.75) == 0.5
    assert prompt_distinguishability(ds, 0, tau=0.7499) == 1.0


def test_distinguishability_rigid_motion_invariant(rng):
    cfg = SynthConfig(dim=6, n_models=4, n_prompts=2, k_per_cell=10,
                      inter_sep=3.0, intra_std=1.0, rng_seed=8)
    ds = generate_synthetic(cfg)
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    shift = rng.standard_normal(6).astype(np.float32)
    moved = {k: (v @ q.astype(np.float32).T) + shift for k, v in ds.cells.items()}
    ds2 = Dataset(ds.dim, list(ds.model_names), list(ds.prompts),
                  {k: v.astype(np.float32) for k, v in moved.items()})
    for p in range(2):
        a = prompt_distinguishability(ds, p)
        b = prompt_distinguishability(ds2, p)
        assert a == pytest.approx(b)


def test_rank_prompts_orders_and_tie_breaks():
    cells = {
        # prompt 0: overlapping -> low D; prompt 1: separated -> D = 1
        (0, 0): [[0.0], [0.2]], (1, 0): [[0.1], [0.3]],
        (0, 1): [[0.0], [1.0]], (1, 1): [[50.0], [51.0]],
        (0, 2): [[0.0], [1.0]], (1, 2): [[70.0], [71.0]],
    }
    ds = dataset_from_cells(cells, n_models=2, n_prompts=3, dim=1)
    ranked = rank_prompts(ds)
    assert [p for p, _ in ranked] == [1, 2, 0]  # D ties between 1 and 2 by id
    assert ranked[0][1] == 1.0 and ranked[1][1] == 1.0


def test_rank_prompts_warns_and_skips_single_model():
    cells = {
        (0, 0): [[0.0], [1.0]],  # only one model at prompt 0
        (0, 1): [[0.0], [1.0]], (1, 1): [[9.0], [10.0]],
    }
    ds = dataset_from_cells(cells, n_models=2, n_prompts=2, dim=1)
    with pytest.warns(UserWarning, match="skipping prompt 0"):
        ranked = rank_prompts(ds)
    assert [p for p, _ in ranked] == [1]


def test_select_prompts_threshold():
    cells = {
        (0, 0): [[0.0], [0.2]], (1, 0): [[0.1], [0.3]],
        (0, 1): [[0.0], [1.0]], (1, 1): [[50.0], [51.0]],
    }
    ds = dataset_from_cells(cells, n_models=2, n_prompts=2, dim=1)
    assert select_prompts(ds, d_min=1.0) == [1]
    assert select_prompts(ds, d_min=0.0) == [0, 1]


def test_distinguishability_validates_args(small_dataset):
    with pytest.raises(ValueError):
        prompt_distinguishability(small_dataset, 0, tau=1.0)
    with pytest.raises(ValueError):
        prompt_distinguishability(small_dataset, 0, tau=-0.1)


def test_separation_drives_distinguishability():
    """Well separated synthetic prompts score 1; coincident centers score low."""
    far = generate_synthetic(SynthConfig(dim=16, n_models=4, n_prompts=3,
                                         k_per_cell=12, inter_sep=30.0,
                                         intra_std=1.0, rng_seed=2))
    near = generate_synthetic(SynthConfig(dim=16, n_models=4, n_prompts=3,
                                          k_per_cell=12, inter_sep=0.0,
                                          intra_std=1.0, rng_seed=2))
    for p in range(3):
        assert prompt_distinguishability(far, p) == 1.0
        assert prompt_distinguishability(near, p) <= 0.5
