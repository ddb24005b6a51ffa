"""AUROC via the tie-aware Mann-Whitney statistic.

The implementation computes average ranks (ties share their midrank),
which is algebraically identical to crediting 1 per correctly ordered
(positive, negative) pair and 0.5 per tie.  The O(P*N) pairwise oracle
lives in the test suite only.
"""

import numpy as np

from .. import rng as rngmod
from ..errors import InvalidInputError, UndefinedMetricError

PIXEL_BUDGET = 1_000_000


def _average_ranks(values):
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auroc(scores, labels):
    """Area under the ROC curve for scalar scores and binary labels."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise InvalidInputError("scores and labels must be equal-length vectors")
    if not np.isfinite(scores).all():
        raise InvalidInputError("non-finite scores")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            f"AUROC needs both classes; got {n_pos} positive / {n_neg} negative"
        )
    ranks = _average_ranks(scores)
    rank_sum = float(ranks[labels == 1].sum())
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def pixel_auroc(maps, masks, budget=PIXEL_BUDGET, seed=0):
    """Pixel-level AUROC over all images' pixels pooled together.

    Above ``budget`` pixels a seed-deterministic uniform subsample keeps
    the computation bounded.
    """
    if len(maps) != len(masks):
        raise InvalidInputError("need one mask per map")
    flat_scores, flat_labels = [], []
    for amap, mask in zip(maps, masks):
        amap = np.asarray(amap, dtype=np.float64)
        mask = np.zeros(amap.shape, dtype=bool) if mask is None else np.asarray(mask)
        if amap.shape != mask.shape:
            raise InvalidInputError(
                f"map/mask shapes differ: {amap.shape} vs {mask.shape}"
            )
        flat_scores.append(amap.ravel())
        flat_labels.append(mask.ravel().astype(np.int64))
    scores = np.concatenate(flat_scores)
    labels = np.concatenate(flat_labels)
    if budget is not None and scores.size > budget:
        idx = rngmod.stream(seed, "pixel-auroc", "subsample").choice(
            scores.size, size=budget, replace=False
        )
        scores, labels = scores[idx], labels[idx]
    return auroc(scores, labels)
