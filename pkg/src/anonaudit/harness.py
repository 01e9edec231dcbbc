"""Experiment orchestration: splits, repetitions, reports, and the attack pipeline."""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import spearmanr

from .attribution import (
    CentroidTable,
    build_centroid_table,
    classify_batch,
    compute_centroid,
    distances_to_centroids,
    nearest_rank_quantile,
)
from .defense import (
    DefenseConfig,
    ToyEncoder,
    defend,
    gaussian_noise_undo,
    select_positive_target,
)
from .distinguish import DEFAULT_TAU, prompt_distinguishability
from .metrics import auc, tpr_at_fpr
from .store import Dataset, dataset_hash, normalized_dataset, split_reference_holdout

DEFAULT_REPETITIONS = 5
DEFAULT_TOP_KS = (1, 2, 3, 5)


def _plain(obj):
    """Recursively convert numpy scalars/arrays so json.dumps never sees them."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else None
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


@dataclass
class EvalReport:
    """Config + metrics of one experiment.

    Serialization is canonical (sorted keys, fixed indentation) so that equal
    inputs give byte-identical JSON; wall-clock runtime is therefore kept out
    of the serialized form.
    """

    config: dict
    metrics: dict
    runtime_seconds: float | None = None

    def to_json(self) -> str:
        doc = {"config": _plain(self.config), "metrics": _plain(self.metrics)}
        return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_json())

    @classmethod
    def load(cls, path) -> "EvalReport":
        with open(path) as f:
            doc = json.load(f)
        return cls(config=doc["config"], metrics=doc["metrics"])


def _spread_stats(per_rep: list[float], per_prompt: list[float] | None = None) -> dict:
    """Mean over repetitions plus both spread conventions, labeled explicitly."""
    reps = np.asarray(per_rep, dtype=np.float64)
    out = {
        "mean": float(reps.mean()),
        "std_across_repetitions": float(reps.std()),
    }
    if per_prompt is not None:
        out["std_across_prompts"] = float(np.asarray(per_prompt, dtype=np.float64).std())
    return out


def _holdout_queries(hold: Dataset, prompt: int) -> tuple[np.ndarray, np.ndarray]:
    models = hold.models_for_prompt(prompt)
    rows = [hold.cells[(m, prompt)] for m in models]
    labels = np.concatenate([np.full(r.shape[0], m, dtype=np.int64)
                             for m, r in zip(models, rows)])
    return np.vstack(rows).astype(np.float64), labels


def _ranked_ids(queries: np.ndarray, table: CentroidTable) -> np.ndarray:
    """(n, n_models) model ids by ascending distance; stable sort keeps the
    ascending-id tie rule since columns are already id-ordered."""
    d = np.linalg.norm(queries[:, None, :] - table.centroids[None, :, :], axis=2)
    order = np.argsort(d, axis=1, kind="stable")
    return np.asarray(table.model_ids)[order]


def run_multiclass(ds: Dataset, k_ref: int, repetitions: int = DEFAULT_REPETITIONS,
                   seed: int = 0, normalize: bool = False,
                   top_ks: tuple[int, ...] = DEFAULT_TOP_KS) -> EvalReport:
    """Repeated split/evaluate of nearest-centroid attribution, top-k scored.

    Per repetition r: split with seed+r, build per-prompt centroid tables from
    the reference half, rank every holdout embedding. Reported spreads cover
    both conventions: across repetitions (overall accuracy per rep) and across
    prompts (per-prompt accuracy averaged over reps).
    """
    t0 = time.perf_counter()
    work = normalized_dataset(ds) if normalize else ds
    hits = {k: np.zeros((repetitions, work.n_prompts)) for k in top_ks}
    counts = np.zeros((repetitions, work.n_prompts))
    for r in range(repetitions):
        ref, hold = split_reference_holdout(work, k_ref, seed + r)
        for p in range(work.n_prompts):
            table = build_centroid_table(ref, p)
            queries, truth = _holdout_queries(hold, p)
            ranked = _ranked_ids(queries, table)
            counts[r, p] = truth.size
            for k in top_ks:
                kk = min(k, ranked.shape[1])
                hits[k][r, p] = np.sum(np.any(ranked[:, :kk] == truth[:, None], axis=1))
    topk = {}
    for k in top_ks:
        per_rep = (hits[k].sum(axis=1) / counts.sum(axis=1)).tolist()
        per_prompt = (hits[k].sum(axis=0) / counts.sum(axis=0)).tolist()
        topk[str(k)] = _spread_stats(per_rep, per_prompt)
    report = EvalReport(
        config={"experiment": "multiclass", "dataset_hash": dataset_hash(ds),
                "k_ref": k_ref, "repetitions": repetitions, "seed": seed,
                "normalize": normalize, "top_ks": list(top_ks)},
        metrics={"topk_accuracy": topk,
                 "n_holdout_per_repetition": float(counts.sum(axis=1)[0])},
    )
    report.runtime_seconds = time.perf_counter() - t0
    return report


def _binary_rates(pred_is_target: np.ndarray, truth_is_target: np.ndarray) -> dict:
    tp = int(np.sum(pred_is_target & truth_is_target))
    fp = int(np.sum(pred_is_target & ~truth_is_target))
    fn = int(np.sum(~pred_is_target & truth_is_target))
    tn = int(np.sum(~pred_is_target & ~truth_is_target))
    n_pos, n_neg = tp + fn, fp + tn
    return {
        "accuracy": (tp + tn) / max(n_pos + n_neg, 1),
        "fpr": fp / max(n_neg, 1),
        "fnr": fn / max(n_pos, 1),
        "n_pos": n_pos,
        "n_neg": n_neg,
    }


def run_one_vs_rest_full(ds: Dataset, target: int, k_ref: int,
                         repetitions: int = DEFAULT_REPETITIONS, seed: int = 0,
                         normalize: bool = False) -> EvalReport:
    """Case 1 verification: accept iff the nearest centroid (all models) is the
    target. AUC and TPR@FPR come from the continuous score -distance(target)."""
    t0 = time.perf_counter()
    work = normalized_dataset(ds) if normalize else ds
    if not (0 <= target < work.n_models):
        raise ValueError(f"target model {target} not in dataset")
    per_rep: dict[str, list[float]] = {m: [] for m in
                                       ("accuracy", "auc", "fpr", "fnr",
                                        "tpr_at_1pct", "tpr_at_5pct")}
    for r in range(repetitions):
        ref, hold = split_reference_holdout(work, k_ref, seed + r)
        preds, truths, scores = [], [], []
        for p in range(work.n_prompts):
            table = build_centroid_table(ref, p)
            if target not in table.model_ids:
                raise ValueError(f"target {target} has no reference records "
                                 f"for prompt {p}")
            queries, truth = _holdout_queries(hold, p)
            preds.append(classify_batch(queries, table) == target)
            truths.append(truth == target)
            t_col = table.model_ids.index(target)
            d = np.linalg.norm(queries - table.centroids[t_col], axis=1)
            scores.append(-d)
        pred = np.concatenate(preds)
        truth = np.concatenate(truths)
        score = np.concatenate(scores)
        rates = _binary_rates(pred, truth)
        per_rep["accuracy"].append(rates["accuracy"])
        per_rep["fpr"].append(rates["fpr"])
        per_rep["fnr"].append(rates["fnr"])
        per_rep["auc"].append(auc(score[truth], score[~truth]))
        per_rep["tpr_at_1pct"].append(tpr_at_fpr(score[truth], score[~truth], 0.01)[0])
        per_rep["tpr_at_5pct"].append(tpr_at_fpr(score[truth], score[~truth], 0.05)[0])
    report = EvalReport(
        config={"experiment": "one_vs_rest_full", "dataset_hash": dataset_hash(ds),
                "target": target, "k_ref": k_ref, "repetitions": repetitions,
                "seed": seed, "normalize": normalize},
        metrics={name: _spread_stats(vals) for name, vals in per_rep.items()},
    )
    report.runtime_seconds = time.perf_counter() - t0
    return report


def run_one_vs_rest_limited(ds: Dataset, target: int, alphas,
                            k_ref: int, repetitions: int = DEFAULT_REPETITIONS,
                            seed: int = 0, normalize: bool = False) -> EvalReport:
    """Case 2 verification: accept iff distance to the target's reference
    centroid is within the per-(prompt, alpha) nearest-rank quantile radius.

    Each alpha row carries the full Table-style field set; AUC and TPR@FPR are
    threshold-free so they repeat identically across rows by construction.
    """
    t0 = time.perf_counter()
    alphas = list(alphas)
    if not alphas or not all(0.0 < a <= 1.0 for a in alphas):
        raise ValueError("alphas must be a nonempty subset of (0, 1]")
    work = normalized_dataset(ds) if normalize else ds
    if not (0 <= target < work.n_models):
        raise ValueError(f"target model {target} not in dataset")
    names = ("accuracy", "fpr", "fnr")
    per_alpha_rep: dict[float, dict[str, list[float]]] = {
        a: {m: [] for m in names} for a in alphas}
    free_rep: dict[str, list[float]] = {m: [] for m in
                                        ("auc", "tpr_at_1pct", "tpr_at_5pct")}
    for r in range(repetitions):
        ref, hold = split_reference_holdout(work, k_ref, seed + r)
        truths, scores = [], []
        accepts: dict[float, list[np.ndarray]] = {a: [] for a in alphas}
        for p in range(work.n_prompts):
            if (target, p) not in ref.cells:
                raise ValueError(f"target {target} has no reference records "
                                 f"for prompt {p}")
            ref_rows = ref.cells[(target, p)].astype(np.float64)
            centroid = compute_centroid(ref_rows)
            ref_d = np.linalg.norm(ref_rows - centroid, axis=1)
            queries, truth = _holdout_queries(hold, p)
            d = np.linalg.norm(queries - centroid, axis=1)
            truths.append(truth == target)
            scores.append(-d)
            for a in alphas:
                lam = nearest_rank_quantile(ref_d, a)
                accepts[a].append(d <= lam)
        truth = np.concatenate(truths)
        score = np.concatenate(scores)
        for a in alphas:
            rates = _binary_rates(np.concatenate(accepts[a]), truth)
            for m in names:
                per_alpha_rep[a][m].append(rates[m])
        free_rep["auc"].append(auc(score[truth], score[~truth]))
        free_rep["tpr_at_1pct"].append(tpr_at_fpr(score[truth], score[~truth], 0.01)[0])
        free_rep["tpr_at_5pct"].append(tpr_at_fpr(score[truth], score[~truth], 0.05)[0])
    rows = {}
    for a in alphas:
        row = {m: _spread_stats(vals) for m, vals in per_alpha_rep[a].items()}
        row.update({m: _spread_stats(vals) for m, vals in free_rep.items()})
        rows[f"{a:g}"] = row
    report = EvalReport(
        config={"experiment": "one_vs_rest_limited", "dataset_hash": dataset_hash(ds),
                "target": target, "alphas": [float(a) for a in alphas],
                "k_ref": k_ref, "repetitions": repetitions, "seed": seed,
                "normalize": normalize},
        metrics={"per_alpha": rows},
    )
    report.runtime_seconds = time.perf_counter() - t0
    return report


@dataclass
class SuccessCurve:
    """Per-prompt distinguishability vs attribution success, plus binned rows."""

    tau: float
    per_prompt: list[dict]
    bins: list[dict]
    spearman_rho: float | None
    config: dict = field(default_factory=dict)

    def to_report(self) -> EvalReport:
        return EvalReport(
            config=self.config,
            metrics={"per_prompt": self.per_prompt, "bins": self.bins,
                     "spearman_rho": self.spearman_rho},
        )


def success_vs_distinguishability(ds: Dataset, tau: float = DEFAULT_TAU,
                                  bins: int = 4, k_ref: int = 1, seed: int = 0,
                                  normalize: bool = False) -> SuccessCurve:
    """One split: distinguishability from the reference half (what a
    prompt-selecting adversary sees), top-1 success on the holdout half.

    Prompts with undefined scores (fewer than two models) are skipped with a
    warning. Buckets partition [0, 1]; empty buckets report n_prompts = 0.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    work = normalized_dataset(ds) if normalize else ds
    ref, hold = split_reference_holdout(work, k_ref, seed)
    per_prompt = []
    for p in range(work.n_prompts):
        try:
            d_score = prompt_distinguishability(ref, p, tau)
        except ValueError as exc:
            warnings.warn(f"skipping prompt {p}: {exc}")
            continue
        table = build_centroid_table(ref, p)
        queries, truth = _holdout_queries(hold, p)
        acc = float(np.mean(classify_batch(queries, table) == truth))
        per_prompt.append({"prompt": p, "distinguishability": float(d_score),
                           "top1": acc, "n_queries": int(truth.size)})
    edges = np.linspace(0.0, 1.0, bins + 1)
    bin_rows = []
    for i in range(bins):
        lo, hi = float(edges[i]), float(edges[i + 1])
        member = [row["top1"] for row in per_prompt
                  if (row["distinguishability"] >= lo)
                  and (row["distinguishability"] < hi or (i == bins - 1
                       and row["distinguishability"] <= hi))]
        bin_rows.append({"lo": lo, "hi": hi,
                         "mean_top1": float(np.mean(member)) if member else None,
                         "n_prompts": len(member)})
    rho = None
    if len(per_prompt) >= 2:
        d_vals = [row["distinguishability"] for row in per_prompt]
        accs = [row["top1"] for row in per_prompt]
        if len(set(d_vals)) > 1 and len(set(accs)) > 1:
            rho = float(spearmanr(d_vals, accs).statistic)
    return SuccessCurve(
        tau=tau, per_prompt=per_prompt, bins=bin_rows, spearman_rho=rho,
        config={"experiment": "success_vs_distinguishability",
                "dataset_hash": dataset_hash(ds), "tau": tau, "bins": bins,
                "k_ref": k_ref, "seed": seed, "normalize": normalize},
    )


@dataclass(frozen=True)
class CostModel:
    """Per-model price list and the number of reference images bought per model."""

    prices: dict[int, float]
    images_per_model: int

    def __post_init__(self) -> None:
        if self.images_per_model < 1:
            raise ValueError("images_per_model must be >= 1")
        if not self.prices:
            raise ValueError("prices must be nonempty")
        if any(p < 0 for p in self.prices.values()):
            raise ValueError("prices must be >= 0")


def attack_cost(cm: CostModel) -> float:
    """Total price of the reference corpus: images_per_model x sum of prices."""
    return cm.images_per_model * float(sum(cm.prices.values()))


def center_crop_square(img: np.ndarray) -> np.ndarray:
    """Largest centered square of a 2-D image (floor offsets on odd margins)."""
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValueError("image must be 2-D grayscale")
    h, w = arr.shape
    side = min(h, w)
    r0, c0 = (h - side) // 2, (w - side) // 2
    return arr[r0:r0 + side, c0:c0 + side]


# --- toy-encoder attack pipeline (defense evaluation) ---


@dataclass
class ImageCorpus:
    """Per-model grayscale image sets with a train/test split."""

    train: list[list[np.ndarray]]
    test: list[list[np.ndarray]]

    @property
    def n_models(self) -> int:
        return len(self.train)


def planted_image_corpus(n_models: int, n_train: int, n_test: int, side: int,
                         pattern_amp: float, noise_std: float, scene_jitter: float,
                         rng_seed: int) -> ImageCorpus:
    """Shared blocky scene + fixed per-model +-amp pixel pattern + pixel noise.

    The pattern is each model's identifying artifact; scene jitter and noise
    control how tight the model clusters are in any encoder's space.
    """
    if side % 8 != 0:
        raise ValueError("side must be a multiple of 8")
    rng = np.random.default_rng(rng_seed)
    base_blocks = rng.uniform(0.3, 0.7, size=(side // 8, side // 8))
    patterns = [rng.choice([-pattern_amp, pattern_amp], size=(side, side))
                for _ in range(n_models)]
    train, test = [], []
    for m in range(n_models):
        sets = []
        for count in (n_train, n_test):
            imgs = []
            for _ in range(count):
                jitter = rng.uniform(-scene_jitter, scene_jitter,
                                     size=base_blocks.shape)
                scene = np.kron(base_blocks + jitter, np.ones((8, 8)))
                noise = rng.normal(0.0, noise_std, size=(side, side))
                imgs.append(np.clip(scene + patterns[m] + noise, 0.0, 1.0))
            sets.append(imgs)
        train.append(sets[0])
        test.append(sets[1])
    return ImageCorpus(train=train, test=test)


def _embedding_table(corpus: ImageCorpus, encoder: ToyEncoder) -> CentroidTable:
    cents = np.stack([
        compute_centroid(np.stack([encoder.encode(img) for img in imgs]))
        for imgs in corpus.train
    ])
    return CentroidTable(tuple(range(corpus.n_models)), cents)


def attribution_accuracy(corpus: ImageCorpus, encoder: ToyEncoder,
                         transform=None) -> float:
    """Top-1 accuracy of nearest-centroid attribution in the encoder's space,
    with an optional per-image transform applied to the test images."""
    table = _embedding_table(corpus, encoder)
    hits = total = 0
    for m, imgs in enumerate(corpus.test):
        for img in imgs:
            probe = img if transform is None else transform(m, img)
            d = distances_to_centroids(encoder.encode(probe), table)
            hits += int(np.argmin(d)) == m  # ids are 0..n-1 in column order
            total += 1
    return hits / total


def defense_sweep(corpus: ImageCorpus, attacker: ToyEncoder,
                  surrogates: list[ToyEncoder], epsilons,
                  eta: float = 0.1, tau_temp: float = 0.1, iters: int = 100,
                  pool_per_model: int = 3) -> dict:
    """Attack accuracy against defended test images across epsilon budgets.

    The defender selects each image's positive target with its own first
    surrogate encoder (never the attacker's), defends with the surrogate
    ensemble, and the attacker attributes the result in its own space.
    Returns {"per_epsilon": {eps: accuracy}, "defended": {eps: images}}.
    """
    if any(s is attacker for s in surrogates):
        raise ValueError("attacker encoder must not appear in the surrogate ensemble")
    selector = surrogates[0]

    def make_pool(own_model):
        pool = []
        for m in range(corpus.n_models):
            if m == own_model:
                continue
            for img in corpus.train[m][:pool_per_model]:
                pool.append((m, img))
        return pool

    per_eps: dict[float, float] = {}
    defended: dict[float, list[list[np.ndarray]]] = {}
    for eps in epsilons:
        if eps == 0:
            imgs_by_model = [list(imgs) for imgs in corpus.test]
        else:
            cfg = DefenseConfig(encoders=surrogates, epsilon_8bit=eps, eta=eta,
                                tau_temp=tau_temp, iters=iters)
            imgs_by_model = []
            for m, imgs in enumerate(corpus.test):
                pool = make_pool(m)
                cand_embs = [(mid, selector.encode(img)) for mid, img in pool]
                out = []
                for img in imgs:
                    idx = select_positive_target(selector.encode(img), cand_embs)
                    out.append(defend(img, pool[idx][1], cfg).image)
                imgs_by_model.append(out)
        defended[eps] = imgs_by_model
        eval_corpus = ImageCorpus(train=corpus.train, test=imgs_by_model)
        per_eps[eps] = attribution_accuracy(eval_corpus, attacker)
    return {"per_epsilon": per_eps, "defended": defended}


def noising_accuracy(corpus: ImageCorpus, defended_test: list[list[np.ndarray]],
                     attacker: ToyEncoder, sigma: float, rng_seed: int) -> float:
    """Attack accuracy after the platform noises the (defended) test images."""
    noised = [[gaussian_noise_undo(img, sigma, rng_seed + 7919 * m + i)
               for i, img in enumerate(imgs)]
              for m, imgs in enumerate(defended_test)]
    return attribution_accuracy(ImageCorpus(train=corpus.train, test=noised), attacker)
