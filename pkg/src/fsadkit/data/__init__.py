from .index import DatasetIndex, CategoryIndex, TestItem, scan_dataset
from .synthetic import SyntheticSpec, generate_synthetic, category_names
from .episode import (
    Episode,
    EpisodeSpec,
    TestSample,
    build_episode,
    sample_pair,
    sample_pair_batch,
    sample_image_batch,
    support_indices,
)
from .preprocess import (
    DEFAULT_RESOLUTION,
    load_image,
    load_mask,
    load_and_preprocess,
    preprocess,
    resize_bilinear,
    resize_nearest,
)

__all__ = [
    "DatasetIndex",
    "CategoryIndex",
    "TestItem",
    "scan_dataset",
    "SyntheticSpec",
    "generate_synthetic",
    "category_names",
    "Episode",
    "EpisodeSpec",
    "TestSample",
    "build_episode",
    "sample_pair",
    "sample_pair_batch",
    "sample_image_batch",
    "support_indices",
    "DEFAULT_RESOLUTION",
    "load_image",
    "load_mask",
    "load_and_preprocess",
    "preprocess",
    "resize_bilinear",
    "resize_nearest",
]
