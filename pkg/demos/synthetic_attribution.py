"""Which generator made this? Nearest-centroid attribution on synthetic clusters.

Walks the core loop end to end: build clustered embedding datasets at several
separation levels, hold out queries, and watch top-k attribution accuracy climb
from the chance floor to near-perfect as the clusters pull apart.
"""

from anonaudit import SynthConfig, generate_synthetic, run_multiclass

N_MODELS = 8

print(f"{N_MODELS} candidate models, 12 prompts, 12 generations per cell, "
      "d=32; chance is 1/8 = 0.125\n")
print(f"{'sep/std':>8} {'top-1':>8} {'top-2':>8} {'top-3':>8} {'top-5':>8}")
for ratio in (0, 2, 4, 8):
    ds = generate_synthetic(SynthConfig(dim=32, n_models=N_MODELS,
                                        n_prompts=12, k_per_cell=12,
                                        inter_sep=float(ratio), intra_std=1.0,
                                        rng_seed=40 + ratio))
    report = run_multiclass(ds, k_ref=6, repetitions=3, seed=1)
    row = [report.metrics["topk_accuracy"][k]["mean"] for k in ("1", "2", "3", "5")]
    print(f"{ratio:>8} " + " ".join(f"{v:>8.3f}" for v in row))

print("""
Two things to notice: at separation 0 the attacker does no better than
guessing, and the climb is monotone — the separation ratio is the whole story
for this attack. The acceptance suite pins the same sweep at paper scale
(22 models, d=64).""")
