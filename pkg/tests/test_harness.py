import json

import numpy as np
import pytest

from anonaudit import (
    CostModel,
    EvalReport,
    ImageCorpus,
    SynthConfig,
    attack_cost,
    attribution_accuracy,
    center_crop_square,
    defense_sweep,
    generate_synthetic,
    make_encoder_ensemble,
    planted_image_corpus,
    prompt_distinguishability,
    run_multiclass,
    run_one_vs_rest_full,
    run_one_vs_rest_limited,
    split_reference_holdout,
    success_vs_distinguishability,
    toy_encoder,
)
from anonaudit.harness import noising_accuracy


def separated_ds(sep, seed=11, **kw):
    cfg = dict(dim=8, n_models=4, n_prompts=3, k_per_cell=12,
               inter_sep=sep, intra_std=1.0, rng_seed=seed)
    cfg.update(kw)
    return generate_synthetic(SynthConfig(**cfg))


# --- reports ---

def test_report_json_is_canonical_and_excludes_runtime():
    rep = EvalReport(config={"b": 1, "a": np.int64(2)},
                     metrics={"x": np.float64(0.5), "arr": np.arange(3)},
                     runtime_seconds=123.4)
    text = rep.to_json()
    assert "runtime" not in text
    assert text.endswith("\n")
    doc = json.loads(text)
    assert doc["config"]["a"] == 2 and doc["metrics"]["arr"] == [0, 1, 2]
    # keys are sorted at every level
    assert list(doc) == ["config", "metrics"]
    assert list(doc["config"]) == ["a", "b"]


def test_report_nonfinite_becomes_null():
    rep = EvalReport(config={}, metrics={"bad": float("nan"), "inf": np.inf})
    doc = json.loads(rep.to_json())
    assert doc["metrics"]["bad"] is None
    assert doc["metrics"]["inf"] is None


def test_report_save_load_roundtrip_bytes(tmp_path):
    ds = separated_ds(4.0)
    rep = run_multiclass(ds, k_ref=3, repetitions=2, seed=0)
    path = tmp_path / "rep.json"
    rep.save(path)
    again = EvalReport.load(path)
    assert again.to_json() == rep.to_json()
    assert again.runtime_seconds is None


def test_identical_runs_give_identical_bytes():
    ds = separated_ds(4.0)
    a = run_multiclass(ds, k_ref=3, repetitions=2, seed=5)
    b = run_multiclass(ds, k_ref=3, repetitions=2, seed=5)
    assert a.to_json() == b.to_json()
    assert a.runtime_seconds is not None  # measured, just not serialized


# --- multiclass protocol ---

def test_multiclass_matches_plain_reimplementation():
    ds = separated_ds(3.0, seed=2, n_models=3, n_prompts=2, k_per_cell=6, dim=4)
    k_ref, reps, seed = 2, 2, 9
    rep = run_multiclass(ds, k_ref=k_ref, repetitions=reps, seed=seed)

    hits = {k: 0 for k in (1, 2, 3, 5)}
    total = 0
    for r in range(reps):
        ref, hold = split_reference_holdout(ds, k_ref, seed + r)
        for p in range(ds.n_prompts):
            cents = {m: ref.cells[(m, p)].astype(np.float64).mean(axis=0)
                     for m in ref.models_for_prompt(p)}
            for m in hold.models_for_prompt(p):
                for row in hold.cells[(m, p)].astype(np.float64):
                    ranked = sorted(cents, key=lambda c: (np.linalg.norm(row - cents[c]), c))
                    total += 1
                    for k in hits:
                        hits[k] += m in ranked[:k]
    for k in hits:
        assert rep.metrics["topk_accuracy"][str(k)]["mean"] == pytest.approx(
            hits[k] / total, abs=1e-12)


def test_multiclass_topk_monotone_and_saturates():
    rep = run_multiclass(separated_ds(2.0), k_ref=3, repetitions=3, seed=1)
    accs = [rep.metrics["topk_accuracy"][str(k)]["mean"] for k in (1, 2, 3, 5)]
    assert accs == sorted(accs)
    # k >= number of models: every query trivially hits
    assert accs[-1] == 1.0


def test_multiclass_chance_floor_when_unseparated():
    # label-exchangeable data (all centers coincide): top-1 within 0.02 of 1/n
    # measured over >= 10^4 holdout items
    ds = separated_ds(0.0, seed=21, n_models=8, n_prompts=6, k_per_cell=40)
    rep = run_multiclass(ds, k_ref=10, repetitions=7, seed=3)
    assert rep.metrics["n_holdout_per_repetition"] * 7 >= 10_000
    top1 = rep.metrics["topk_accuracy"]["1"]["mean"]
    assert abs(top1 - 1.0 / 8) < 0.02


def test_multiclass_perfect_when_noiseless():
    ds = separated_ds(8.0, intra_std=1e-4, seed=5)
    rep = run_multiclass(ds, k_ref=3, repetitions=2, seed=0)
    assert rep.metrics["topk_accuracy"]["1"]["mean"] == 1.0


def test_multiclass_reports_both_spreads():
    rep = run_multiclass(separated_ds(3.0), k_ref=3, repetitions=2, seed=0)
    cell = rep.metrics["topk_accuracy"]["1"]
    assert set(cell) == {"mean", "std_across_repetitions", "std_across_prompts"}


# --- one-vs-rest, full knowledge ---

def test_ovr_full_separated_is_confident():
    ds = separated_ds(10.0, seed=13)
    rep = run_one_vs_rest_full(ds, target=2, k_ref=4, repetitions=3, seed=1)
    m = rep.metrics
    assert m["accuracy"]["mean"] > 0.99
    assert m["auc"]["mean"] > 0.995
    assert m["fnr"]["mean"] < 0.01 and m["fpr"]["mean"] < 0.01
    assert m["tpr_at_5pct"]["mean"] > 0.99


def test_ovr_full_fpr_shrinks_with_separation():
    lo = run_one_vs_rest_full(separated_ds(0.0, seed=3), 1, k_ref=4,
                              repetitions=3, seed=2).metrics["fpr"]["mean"]
    hi = run_one_vs_rest_full(separated_ds(8.0, seed=3), 1, k_ref=4,
                              repetitions=3, seed=2).metrics["fpr"]["mean"]
    assert hi < 0.01 < lo


def test_ovr_full_rejects_unknown_target():
    with pytest.raises(ValueError):
        run_one_vs_rest_full(separated_ds(2.0), target=99, k_ref=3)


# --- one-vs-rest, limited knowledge ---

def test_ovr_limited_fnr_tracks_alpha():
    # FNR of the radius-alpha acceptance region should sit near 1 - alpha:
    # the radius is a nearest-rank quantile of the reference distances, and
    # holdout distances are drawn from the same distribution.
    ds = generate_synthetic(SynthConfig(dim=8, n_models=2, n_prompts=2,
                                        k_per_cell=2600, inter_sep=6.0,
                                        intra_std=1.0, rng_seed=31))
    rep = run_one_vs_rest_limited(ds, target=0, alphas=[0.8, 0.95],
                                  k_ref=2500, repetitions=3, seed=4)
    rows = rep.metrics["per_alpha"]
    assert abs(rows["0.8"]["fnr"]["mean"] - 0.2) < 0.05
    assert abs(rows["0.95"]["fnr"]["mean"] - 0.05) < 0.05
    assert rows["0.8"]["fnr"]["mean"] > rows["0.95"]["fnr"]["mean"]


def test_ovr_limited_rows_carry_full_field_set():
    ds = separated_ds(6.0)
    rep = run_one_vs_rest_limited(ds, target=1, alphas=[0.8, 0.9], k_ref=8,
                                  repetitions=2, seed=0)
    rows = rep.metrics["per_alpha"]
    want = {"accuracy", "auc", "fnr", "fpr", "tpr_at_1pct", "tpr_at_5pct"}
    for row in rows.values():
        assert set(row) == want
    # threshold-free metrics do not depend on alpha
    assert rows["0.8"]["auc"] == rows["0.9"]["auc"]
    assert rows["0.8"]["tpr_at_1pct"] == rows["0.9"]["tpr_at_1pct"]


def test_ovr_limited_validates_alphas():
    ds = separated_ds(2.0)
    with pytest.raises(ValueError):
        run_one_vs_rest_limited(ds, target=0, alphas=[], k_ref=3)
    with pytest.raises(ValueError):
        run_one_vs_rest_limited(ds, target=0, alphas=[0.0], k_ref=3)
    with pytest.raises(ValueError):
        run_one_vs_rest_limited(ds, target=0, alphas=[1.5], k_ref=3)


# --- success vs distinguishability ---

def test_success_curve_rows_match_components():
    ds = separated_ds(3.0, seed=17)
    tau, k_ref, seed = 0.75, 3, 6
    curve = success_vs_distinguishability(ds, tau=tau, bins=4, k_ref=k_ref, seed=seed)
    ref, hold = split_reference_holdout(ds, k_ref, seed)
    assert [row["prompt"] for row in curve.per_prompt] == list(range(ds.n_prompts))
    for row in curve.per_prompt:
        assert row["distinguishability"] == prompt_distinguishability(
            ref, row["prompt"], tau)
        assert 0.0 <= row["top1"] <= 1.0
        assert row["n_queries"] == 4 * (12 - 3)


def test_success_curve_bins_partition_unit_interval():
    ds = separated_ds(9.0, intra_std=0.05, seed=23)
    curve = success_vs_distinguishability(ds, bins=4, k_ref=3, seed=0)
    edges = [(b["lo"], b["hi"]) for b in curve.bins]
    assert edges == [(0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)]
    # fully separated data: every prompt has D = 1, landing in the last,
    # inclusive bin; the rest are empty with a null mean
    assert curve.bins[-1]["n_prompts"] == ds.n_prompts
    assert curve.bins[-1]["mean_top1"] == 1.0
    for b in curve.bins[:-1]:
        assert b["n_prompts"] == 0 and b["mean_top1"] is None


def test_success_curve_correlation_on_mixed_separations():
    from anonaudit import concat_prompt_groups
    groups = [separated_ds(s, seed=40 + i, n_prompts=4, k_per_cell=16)
              for i, s in enumerate((0.0, 2.0, 6.0))]
    ds = concat_prompt_groups(groups)
    curve = success_vs_distinguishability(ds, bins=4, k_ref=4, seed=2)
    assert curve.spearman_rho is not None
    assert curve.spearman_rho > 0.6


def test_success_curve_bucket_means_track_distinguishability():
    from anonaudit import concat_prompt_groups
    groups = [separated_ds(s, seed=50 + i, n_prompts=5, k_per_cell=16,
                           n_models=6)
              for i, s in enumerate((0.0, 1.5, 3.0, 8.0))]
    curve = success_vs_distinguishability(concat_prompt_groups(groups),
                                          bins=4, k_ref=4, seed=3)
    filled = [b for b in curve.bins if b["n_prompts"] > 0]
    assert len(filled) >= 2
    inversions = sum(
        1 for a, b in zip(filled, filled[1:]) if b["mean_top1"] < a["mean_top1"])
    small = any(b["n_prompts"] < 10 for b in filled)
    assert inversions <= (1 if small else 0)


def test_success_curve_skips_single_model_prompt():
    from anonaudit import Dataset, Prompt
    rng = np.random.default_rng(0)
    cells = {(m, 0): rng.normal(size=(5, 4)).astype(np.float32) + 10 * m
             for m in range(2)}
    cells[(0, 1)] = rng.normal(size=(5, 4)).astype(np.float32)
    ds = Dataset(dim=4, model_names=("a", "b"),
                 prompts=(Prompt(0), Prompt(1)), cells=cells)
    with pytest.warns(UserWarning, match="prompt 1"):
        curve = success_vs_distinguishability(ds, bins=4, k_ref=2, seed=0)
    assert [row["prompt"] for row in curve.per_prompt] == [0]


def test_success_curve_validates_bins():
    with pytest.raises(ValueError):
        success_vs_distinguishability(separated_ds(2.0), bins=1)


def test_success_curve_report_is_canonical():
    ds = separated_ds(3.0)
    a = success_vs_distinguishability(ds, bins=4, k_ref=3, seed=1).to_report()
    b = success_vs_distinguishability(ds, bins=4, k_ref=3, seed=1).to_report()
    assert a.to_json() == b.to_json()
    assert "per_prompt" in json.loads(a.to_json())["metrics"]


# --- cost accounting ---

def test_attack_cost_examples():
    prices = {0: 0.50, 1: 0.58}
    assert attack_cost(CostModel(prices=prices, images_per_model=5)) == 5.40
    assert attack_cost(CostModel(prices=prices, images_per_model=1)) == 1.08


def test_cost_model_validation():
    with pytest.raises(ValueError):
        CostModel(prices={0: 1.0}, images_per_model=0)
    with pytest.raises(ValueError):
        CostModel(prices={}, images_per_model=1)
    with pytest.raises(ValueError):
        CostModel(prices={0: -0.1}, images_per_model=1)


# --- image utilities ---

def test_center_crop_square_offsets():
    img = np.arange(5 * 8, dtype=np.float64).reshape(5, 8)
    out = center_crop_square(img)
    assert out.shape == (5, 5)
    # width margin 3 -> floor(3/2) = 1 column skipped on the left
    assert np.array_equal(out, img[:, 1:6])
    tall = center_crop_square(img.T)
    assert np.array_equal(tall, img.T[1:6, :])
    square = np.ones((4, 4))
    assert np.array_equal(center_crop_square(square), square)
    with pytest.raises(ValueError):
        center_crop_square(np.zeros((2, 2, 3)))


def test_planted_corpus_shapes_and_determinism():
    a = planted_image_corpus(3, n_train=4, n_test=2, side=16, pattern_amp=0.03,
                             noise_std=0.05, scene_jitter=0.02, rng_seed=8)
    b = planted_image_corpus(3, n_train=4, n_test=2, side=16, pattern_amp=0.03,
                             noise_std=0.05, scene_jitter=0.02, rng_seed=8)
    assert a.n_models == 3
    assert len(a.train[0]) == 4 and len(a.test[2]) == 2
    for img in a.train[1] + a.test[1]:
        assert img.shape == (16, 16)
        assert img.min() >= 0.0 and img.max() <= 1.0
    assert all(np.array_equal(x, y)
               for xs, ys in zip(a.train, b.train) for x, y in zip(xs, ys))
    with pytest.raises(ValueError):
        planted_image_corpus(2, 2, 1, side=15, pattern_amp=0.1, noise_std=0.1,
                             scene_jitter=0.0, rng_seed=0)


# --- attack pipeline ---

def make_pipeline(side=16, m=32, n_models=3):
    corpus = planted_image_corpus(n_models, n_train=8, n_test=3, side=side,
                                  pattern_amp=0.06, noise_std=0.04,
                                  scene_jitter=0.02, rng_seed=12)
    attacker = toy_encoder(9000, (side, side), m)
    surrogates = make_encoder_ensemble(2, side * side, m, rng_seed=300)
    return corpus, attacker, surrogates


def test_attribution_accuracy_on_clean_corpus():
    corpus, attacker, _ = make_pipeline()
    assert attribution_accuracy(corpus, attacker) == 1.0


def test_attribution_accuracy_transform_applies():
    corpus, attacker, _ = make_pipeline()
    # swap every probe for a training image of the next model round-robin
    def impostor(m, img):
        return corpus.train[(m + 1) % corpus.n_models][0]
    assert attribution_accuracy(corpus, attacker, transform=impostor) == 0.0


def test_defense_sweep_epsilon_zero_is_identity():
    corpus, attacker, surrogates = make_pipeline()
    sweep = defense_sweep(corpus, attacker, surrogates, epsilons=[0], iters=5)
    assert sweep["per_epsilon"][0] == attribution_accuracy(corpus, attacker)
    for m, imgs in enumerate(sweep["defended"][0]):
        for img, orig in zip(imgs, corpus.test[m]):
            assert np.array_equal(img, orig)


def test_defense_sweep_respects_budget_and_hurts_attribution():
    corpus, attacker, surrogates = make_pipeline()
    sweep = defense_sweep(corpus, attacker, surrogates, epsilons=[0, 8],
                          iters=40)
    for m, imgs in enumerate(sweep["defended"][8]):
        for img, orig in zip(imgs, corpus.test[m]):
            assert np.max(np.abs(img - orig)) <= 8 / 255 + 1e-12
            assert img.min() >= 0.0 and img.max() <= 1.0
    assert sweep["per_epsilon"][8] <= sweep["per_epsilon"][0]


def test_defense_sweep_rejects_attacker_among_surrogates():
    corpus, attacker, surrogates = make_pipeline()
    with pytest.raises(ValueError):
        defense_sweep(corpus, attacker, [attacker] + surrogates, epsilons=[2])


def test_noising_accuracy_sigma_zero_matches():
    corpus, attacker, _ = make_pipeline()
    base = attribution_accuracy(corpus, attacker)
    assert noising_accuracy(corpus, corpus.test, attacker, sigma=0.0,
                            rng_seed=0) == base


def test_noising_accuracy_deterministic():
    corpus, attacker, _ = make_pipeline()
    a = noising_accuracy(corpus, corpus.test, attacker, sigma=0.02, rng_seed=5)
    b = noising_accuracy(corpus, corpus.test, attacker, sigma=0.02, rng_seed=5)
    assert a == b
