from .scoring import (
    COV_SHRINKAGE,
    SMOOTHING_SIGMA,
    GaussianStats,
    dihedral_transforms,
    fit_support_stats,
    image_score,
    mahalanobis_map,
    recon_error_map,
    recon_eval_features,
    score_episode_recon,
    score_episode_siamese,
    siamese_support_stats,
    upsample_map,
)
from .metrics import PIXEL_BUDGET, auroc, pixel_auroc
from .report import (
    RunResult,
    aggregate,
    render_percent,
    render_table_csv,
    render_table_markdown,
)
from .embeddings import dump_embeddings, pooled_embedding

__all__ = [
    "COV_SHRINKAGE",
    "SMOOTHING_SIGMA",
    "GaussianStats",
    "dihedral_transforms",
    "fit_support_stats",
    "image_score",
    "mahalanobis_map",
    "recon_error_map",
    "recon_eval_features",
    "score_episode_recon",
    "score_episode_siamese",
    "siamese_support_stats",
    "upsample_map",
    "PIXEL_BUDGET",
    "auroc",
    "pixel_auroc",
    "RunResult",
    "aggregate",
    "render_percent",
    "render_table_csv",
    "render_table_markdown",
    "dump_embeddings",
    "pooled_embedding",
]
