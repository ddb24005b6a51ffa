import os
import sys

import pytest
import torch

from fsadkit.data.synthetic import SyntheticSpec, generate_synthetic

sys.path.insert(0, os.path.dirname(__file__))

torch.set_num_threads(1)

TINY_SPEC = SyntheticSpec(
    n_categories=3,
    train_per_category=5,
    test_normal_per_category=3,
    test_anomalous_per_category=3,
    resolution=32,
    defect_area_fraction=0.08,
    seed=11,
)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """A small on-disk synthetic dataset shared across tests."""
    root = tmp_path_factory.mktemp("tinyset")
    index = generate_synthetic(TINY_SPEC, str(root))
    return str(root), index
