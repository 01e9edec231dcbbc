"""Command-line front end: dataset generation, audits, baselines, defense, reports.

Exit codes: 0 success, 1 validation error (bad flags or bad values), 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .attribution import nearest_rank_quantile  # noqa: F401  (re-export convenience)
from .baselines import (
    DEFAULT_FIT_BAND,
    dzanic_attribute,
    dzanic_signature,
    load_pgm,
    marra_attribute,
    marra_fingerprint,
    write_pgm,
)
from .defense import (
    DEFAULT_ETA,
    DEFAULT_ITERS,
    DEFAULT_TEMP,
    DefenseConfig,
    defend,
    gaussian_noise_undo,
    make_encoder_ensemble,
    select_positive_target,
)
from .distinguish import DEFAULT_TAU, frac_same_model, build_prompt_pool, prompt_distinguishability
from .harness import (
    CostModel,
    EvalReport,
    attack_cost,
    run_multiclass,
    run_one_vs_rest_full,
    run_one_vs_rest_limited,
    success_vs_distinguishability,
)
from .store import SynthConfig, generate_synthetic, load_manifest, save_dataset

DEFAULT_ALPHAS = (0.80, 0.85, 0.90, 0.95)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; here 2 is reserved for
    # I/O problems, so flag problems must surface as validation errors (1)
    def error(self, message):
        raise _UsageError(message)


def _emit_report(report: EvalReport, out: str | None) -> None:
    if out:
        report.save(out)
    else:
        sys.stdout.write(report.to_json())


def _load_pgm_tree(root: str) -> dict[str, list[np.ndarray]]:
    """Read root/<model>/*.pgm; model order and file order are name-sorted."""
    rootp = Path(root)
    if not rootp.is_dir():
        raise FileNotFoundError(f"image root {root} is not a directory")
    tree: dict[str, list[np.ndarray]] = {}
    for sub in sorted(p for p in rootp.iterdir() if p.is_dir()):
        files = sorted(sub.glob("*.pgm"))
        if files:
            tree[sub.name] = [load_pgm(f) for f in files]
    if not tree:
        raise ValueError(f"no <model>/*.pgm files under {root}")
    return tree


def _baseline_report(kind: str, train_root: str, test_root: str, config_extra: dict,
                     signature, attribute) -> EvalReport:
    train = _load_pgm_tree(train_root)
    test = _load_pgm_tree(test_root)
    unknown = sorted(set(test) - set(train))
    if unknown:
        raise ValueError(f"test models missing from training set: {unknown}")
    names = sorted(train)
    sigs = {i: signature(train[name]) for i, name in enumerate(names)}
    predictions = []
    hits = total = 0
    for name in sorted(test):
        truth = names.index(name)
        for j, img in enumerate(test[name]):
            pred = attribute(img, sigs)[0]
            predictions.append({"model": name, "index": j,
                                "predicted": names[pred]})
            hits += pred == truth
            total += 1
    config = {"experiment": kind, "train_root": str(train_root),
              "test_root": str(test_root), "models": names}
    config.update(config_extra)
    return EvalReport(config=config,
                      metrics={"top1_accuracy": hits / total,
                               "n_test": total, "predictions": predictions})


def _cmd_gen_synth(args) -> int:
    ds = generate_synthetic(SynthConfig(
        dim=args.dim, n_models=args.models, n_prompts=args.prompts,
        k_per_cell=args.per_cell, inter_sep=args.sep, intra_std=args.noise,
        rng_seed=args.seed))
    manifest = save_dataset(ds, args.out)
    print(manifest)
    return 0


def _cmd_attribute(args) -> int:
    ds = load_manifest(args.manifest)
    rep = run_multiclass(ds, k_ref=args.k_ref, repetitions=args.reps,
                         seed=args.seed, normalize=args.normalize)
    _emit_report(rep, args.out)
    return 0


def _cmd_one_vs_rest(args) -> int:
    ds = load_manifest(args.manifest)
    if args.mode == "full":
        rep = run_one_vs_rest_full(ds, target=args.target, k_ref=args.k_ref,
                                   repetitions=args.reps, seed=args.seed,
                                   normalize=args.normalize)
    else:
        alphas = args.alpha if args.alpha else list(DEFAULT_ALPHAS)
        rep = run_one_vs_rest_limited(ds, target=args.target, alphas=alphas,
                                      k_ref=args.k_ref, repetitions=args.reps,
                                      seed=args.seed, normalize=args.normalize)
    _emit_report(rep, args.out)
    return 0


def _cmd_distinguishability(args) -> int:
    ds = load_manifest(args.manifest)
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for p in range(ds.n_prompts):
            try:
                d = prompt_distinguishability(ds, p, args.tau)
            except ValueError as exc:
                print(f"skipping prompt {p}: {exc}", file=sys.stderr)
                continue
            pool = build_prompt_pool(ds, p)
            fracs = {m: frac_same_model(pool, m) for m in pool.model_ids}
            rows.append((p, d, fracs))
    header = ["prompt_id", "D"] + [f"frac_{name}" for name in ds.model_names]
    out = sys.stdout if not args.out else open(args.out, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(header)
        for p, d, fracs in rows:
            writer.writerow([p, f"{d:.10g}"] +
                            [f"{fracs[m]:.10g}" if m in fracs else ""
                             for m in range(ds.n_models)])
    finally:
        if args.out:
            out.close()
    return 0


def _cmd_success_curve(args) -> int:
    ds = load_manifest(args.manifest)
    curve = success_vs_distinguishability(ds, tau=args.tau, bins=args.bins,
                                          k_ref=args.k_ref, seed=args.seed,
                                          normalize=args.normalize)
    _emit_report(curve.to_report(), args.out)
    if args.csv:
        with open(args.csv, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["lo", "hi", "mean_top1", "n_prompts"])
            for b in curve.bins:
                mean = "" if b["mean_top1"] is None else f"{b['mean_top1']:.10g}"
                writer.writerow([f"{b['lo']:.10g}", f"{b['hi']:.10g}", mean,
                                 b["n_prompts"]])
    return 0


def _cmd_baseline_marra(args) -> int:
    rep = _baseline_report("baseline_marra", args.train_root, args.test_root, {},
                           marra_fingerprint, marra_attribute)
    _emit_report(rep, args.out)
    return 0


def _cmd_baseline_fourier(args) -> int:
    band = (args.band[0], args.band[1])
    if not 0.0 <= band[0] < band[1] <= 0.5:
        raise ValueError(f"band must satisfy 0 <= lo < hi <= 0.5, got {band}")
    rep = _baseline_report(
        "baseline_fourier", args.train_root, args.test_root, {"band": list(band)},
        lambda imgs: dzanic_signature(imgs, band),
        lambda img, sigs: dzanic_attribute(img, sigs, band))
    _emit_report(rep, args.out)
    return 0


def _cmd_defend(args) -> int:
    image = load_pgm(args.image)
    encoders = make_encoder_ensemble(args.encoders, image.size, args.embed_dim,
                                     rng_seed=args.encoder_seed)
    if args.positive:
        positive = load_pgm(args.positive)
    else:
        if not args.pool_root:
            raise ValueError("need --positive or --pool-root")
        tree = _load_pgm_tree(args.pool_root)
        names = sorted(tree)
        pool = [(i, img) for i, name in enumerate(names) for img in tree[name]]
        bad = {p.shape for _, p in pool if p.shape != image.shape}
        if bad:
            raise ValueError(f"pool images must match the input shape "
                             f"{image.shape}, found {sorted(bad)}")
        cands = [(mid, encoders[0].encode(img)) for mid, img in pool]
        idx = select_positive_target(encoders[0].encode(image), cands)
        positive = pool[idx][1]
        print(f"positive target: model {names[pool[idx][0]]}", file=sys.stderr)
    cfg = DefenseConfig(encoders=encoders, epsilon_8bit=args.epsilon,
                        eta=args.eta, tau_temp=args.temp, iters=args.iters)
    result = defend(image, positive, cfg)
    write_pgm(result.image, args.out)
    if args.loss_csv:
        with open(args.loss_csv, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["iteration", "loss"])
            for i, loss in enumerate(result.loss_history):
                writer.writerow([i, f"{loss:.17g}"])
    return 0


def _cmd_undo_noise(args) -> int:
    image = load_pgm(args.image)
    out = gaussian_noise_undo(image, args.sigma, args.seed)
    write_pgm(out, args.out)
    return 0


def _cmd_cost(args) -> int:
    prices = {i: p for i, p in enumerate(args.price)}
    total = attack_cost(CostModel(prices=prices, images_per_model=args.images))
    if args.out:
        EvalReport(config={"experiment": "attack_cost", "prices": args.price,
                           "images_per_model": args.images},
                   metrics={"total": total}).save(args.out)
    print(f"{total:.10g}")
    return 0


def _cmd_report(args) -> int:
    rep = EvalReport.load(args.in_path)
    if not isinstance(rep.config, dict) or not isinstance(rep.metrics, dict):
        raise ValueError("report must carry config and metrics objects")
    if args.out:
        rep.save(args.out)
    else:
        name = rep.config.get("experiment", "<unnamed>")
        print(f"experiment: {name}")
        for key in sorted(rep.metrics):
            print(f"  {key}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="anonaudit",
                     description="Audit how anonymous leaderboard image "
                                 "generations actually are.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_eval_flags(p, k_ref_default=1):
        p.add_argument("--manifest", required=True)
        p.add_argument("--k-ref", type=int, default=k_ref_default)
        p.add_argument("--reps", type=int, default=5)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--normalize", action="store_true")
        p.add_argument("--out")

    p = sub.add_parser("gen-synth", help="write a synthetic embedding dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--models", type=int, default=22)
    p.add_argument("--prompts", type=int, default=50)
    p.add_argument("--per-cell", type=int, default=30)
    p.add_argument("--sep", type=float, default=4.0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gen_synth)

    p = sub.add_parser("attribute", help="multi-class attribution report")
    add_eval_flags(p)
    p.set_defaults(func=_cmd_attribute)

    p = sub.add_parser("one-vs-rest", help="single-target verification report")
    add_eval_flags(p)
    p.add_argument("--mode", choices=["full", "limited"], default="full")
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--alpha", type=float, action="append",
                   help="coverage level for limited mode; repeatable")
    p.set_defaults(func=_cmd_one_vs_rest)

    p = sub.add_parser("distinguishability",
                       help="per-prompt distinguishability CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_distinguishability)

    p = sub.add_parser("success-curve",
                       help="attribution success binned by distinguishability")
    add_eval_flags(p)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--bins", type=int, default=4)
    p.add_argument("--csv", help="also write the binned rows as CSV")
    p.set_defaults(func=_cmd_success_curve)

    p = sub.add_parser("baseline-marra",
                       help="residual-fingerprint attribution over PGM trees")
    p.add_argument("--train-root", required=True)
    p.add_argument("--test-root", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_baseline_marra)

    p = sub.add_parser("baseline-fourier",
                       help="spectral power-law attribution over PGM trees")
    p.add_argument("--train-root", required=True)
    p.add_argument("--test-root", required=True)
    p.add_argument("--band", type=float, nargs=2, default=list(DEFAULT_FIT_BAND),
                   metavar=("LO", "HI"))
    p.add_argument("--out")
    p.set_defaults(func=_cmd_baseline_fourier)

    p = sub.add_parser("defend", help="perturb an image against attribution")
    p.add_argument("--image", required=True)
    p.add_argument("--positive", help="PGM to imitate; omit with --pool-root")
    p.add_argument("--pool-root",
                   help="PGM tree to auto-select the least similar target from")
    p.add_argument("--encoders", type=int, default=3)
    p.add_argument("--embed-dim", type=int, default=48)
    p.add_argument("--encoder-seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=8.0)
    p.add_argument("--eta", type=float, default=DEFAULT_ETA)
    p.add_argument("--temp", type=float, default=DEFAULT_TEMP)
    p.add_argument("--iters", type=int, default=DEFAULT_ITERS)
    p.add_argument("--out", required=True)
    p.add_argument("--loss-csv")
    p.set_defaults(func=_cmd_defend)

    p = sub.add_parser("undo-noise", help="add pixel noise to wash out a defense")
    p.add_argument("--image", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_undo_noise)

    p = sub.add_parser("cost", help="reference-corpus price for an attack")
    p.add_argument("--price", type=float, action="append", required=True,
                   help="per-model image price; repeatable")
    p.add_argument("--images", type=int, default=1,
                   help="reference images bought per model")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_cost)

    p = sub.add_parser("report", help="validate and re-emit a report")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
