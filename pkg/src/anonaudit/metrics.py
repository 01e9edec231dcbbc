"""Detection metrics shared by the evaluation harness."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import rankdata


def _snap_int(x: float) -> float:
    # guard float fuzz like 0.3 * 10 = 2.9999999999999996 before floor/ceil
    nearest = round(x)
    return float(nearest) if abs(x - nearest) < 1e-9 else x


def auc(pos_scores, neg_scores) -> float:
    """P(pos > neg) + 0.5 P(pos == neg) over all pairs, via the rank identity.

    The midrank form equals explicit pair counting exactly: rank sums are
    integers plus halves, which binary floating point represents without error.
    """
    pos = np.asarray(pos_scores, dtype=np.float64).ravel()
    neg = np.asarray(neg_scores, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ValueError("need at least one score on each side")
    if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(neg))):
        raise ValueError("scores must be finite")
    ranks = rankdata(np.concatenate([pos, neg]))
    n_pos, n_neg = pos.size, neg.size
    pos_rank_sum = float(ranks[:n_pos].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def tpr_at_fpr(pos_scores, neg_scores, target_fpr: float) -> tuple[float, float]:
    """TPR at the largest threshold whose FPR cannot exceed ``target_fpr``.

    Threshold is the (k+1)-th largest negative with k = floor(target * n_neg);
    detection counts scores strictly above it. Returns (tpr, threshold). The
    achieved FPR is conservative: at most the target, never rounded up past it.
    """
    if not 0.0 <= target_fpr <= 1.0:
        raise ValueError("target_fpr must be in [0, 1]")
    pos = np.asarray(pos_scores, dtype=np.float64).ravel()
    neg = np.asarray(neg_scores, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ValueError("need at least one score on each side")
    k = int(math.floor(_snap_int(target_fpr * neg.size)))
    if k >= neg.size:
        threshold = -np.inf
    else:
        threshold = float(np.sort(neg)[::-1][k])
    tpr = float(np.mean(pos > threshold))
    return tpr, threshold


def top_k_hit(ranking, true_model: int, k: int) -> bool:
    """True iff ``true_model`` appears within the first k entries of ``ranking``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return true_model in list(ranking)[:k]
