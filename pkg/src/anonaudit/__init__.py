"""Audit toolkit for the anonymity of text-to-image leaderboard generations."""

__version__ = "0.1.0"

from .store import (  # noqa: F401
    Dataset,
    EmbeddingRecord,
    Prompt,
    SynthConfig,
    concat_prompt_groups,
    dataset_hash,
    generate_synthetic,
    l2_normalize,
    load_manifest,
    normalized_dataset,
    read_embedding_file,
    save_dataset,
    split_reference_holdout,
    write_embedding_file,
)
from .attribution import (  # noqa: F401
    CentroidTable,
    ThresholdModel,
    build_centroid_table,
    classify,
    classify_batch,
    compute_centroid,
    distances_to_centroids,
    fit_threshold,
    nearest_rank_quantile,
    one_vs_rest_full,
    one_vs_rest_limited,
    rank_models,
)
from .distinguish import (  # noqa: F401
    DEFAULT_TAU,
    PromptPool,
    build_prompt_pool,
    frac_same_model,
    nn_label,
    nn_labels_all,
    prompt_distinguishability,
    rank_prompts,
    select_prompts,
)
from .metrics import auc, top_k_hit, tpr_at_fpr  # noqa: F401
from .baselines import (  # noqa: F401
    denoise,
    dzanic_attribute,
    dzanic_signature,
    fit_power_law,
    load_pgm,
    marra_attribute,
    marra_fingerprint,
    reduced_spectrum,
    residual,
    write_pgm,
)
from .defense import (  # noqa: F401
    DefenseConfig,
    DefenseResult,
    ToyEncoder,
    contrastive_loss,
    cosine_similarity,
    defend,
    gaussian_noise_undo,
    make_encoder_ensemble,
    project_linf,
    select_positive_target,
    toy_encoder,
)
from .harness import (  # noqa: F401
    CostModel,
    EvalReport,
    ImageCorpus,
    SuccessCurve,
    attack_cost,
    attribution_accuracy,
    center_crop_square,
    defense_sweep,
    planted_image_corpus,
    run_multiclass,
    run_one_vs_rest_full,
    run_one_vs_rest_limited,
    success_vs_distinguishability,
)
