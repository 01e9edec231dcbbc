"""Not all prompts identify their generator equally well — measure, then pick.

A prompt's distinguishability D is the share of models whose generations are
"recognizably theirs": the fraction of a model's images whose nearest neighbor
(among all models' images for that prompt) comes from the same model, tested
against a threshold tau. High-D prompts make attribution easy; an auditor can
select them up front, before attacking anything.
"""

import numpy as np

from anonaudit import (SynthConfig, build_centroid_table, classify_batch,
                       concat_prompt_groups, generate_synthetic, rank_prompts,
                       select_prompts, split_reference_holdout)

# half the prompts nearly indistinguishable (sep 1), half well separated
groups = [generate_synthetic(SynthConfig(dim=16, n_models=6, n_prompts=6,
                                         k_per_cell=30, inter_sep=sep,
                                         intra_std=1.0, rng_seed=60 + i))
          for i, sep in enumerate((1.0, 8.0))]
ds = concat_prompt_groups(groups)
ref, hold = split_reference_holdout(ds, k_ref=15, rng_seed=0)

print("prompt  D(ref)  holdout top-1")
for prompt, d_value in rank_prompts(ref, tau=0.75):
    table = build_centroid_table(ref, prompt)
    hits = total = 0
    for model in hold.models_for_prompt(prompt):
        preds = classify_batch(hold.cell(model, prompt), table)
        hits += int(np.sum(preds == model))
        total += preds.size
    print(f"{prompt:>6}  {d_value:>6.2f}  {hits / total:>13.3f}")

chosen = select_prompts(ref, tau=0.9, d_min=1.0)
print(f"\nPrompts with D = 1 at tau=0.9: {chosen}")
print("""
The ranking and the realized accuracy tell the same story: D computed on the
reference split alone predicts how well holdout queries will attribute. On the
D = 1 subset the attack is essentially free.""")
