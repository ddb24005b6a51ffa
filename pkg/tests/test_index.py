import os

import numpy as np
import pytest
from PIL import Image

from fsadkit.data.index import scan_dataset
from fsadkit.errors import NotFoundError, SchemaViolationError


def _png(path, value=128, size=8):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    Image.fromarray(np.full((size, size, 3), value, dtype=np.uint8)).save(path)


def _make_mvtec_fixture(root, with_mask=True):
    for cat in ("alpha", "beta"):
        for i in range(3):
            _png(f"{root}/{cat}/train/good/{i}.png")
        _png(f"{root}/{cat}/test/good/0.png")
        _png(f"{root}/{cat}/test/crack/0.png")
        if with_mask:
            _png(f"{root}/{cat}/ground_truth/crack/0_mask.png", value=255)


def test_missing_root_raises_not_found(tmp_path):
    with pytest.raises(NotFoundError):
        scan_dataset(str(tmp_path / "nope"), "mvtec-style")


def test_empty_root_raises_not_found(tmp_path):
    with pytest.raises(NotFoundError):
        scan_dataset(str(tmp_path), "mvtec-style")


def test_fixture_tree_counts_match_walk_oracle(tmp_path):
    root = str(tmp_path)
    _make_mvtec_fixture(root)
    index = scan_dataset(root, "mvtec-style")
    assert index.categories == ("alpha", "beta")
    # oracle: count files independently with os.walk
    for cat in index.categories:
        train_files = sum(
            len(files)
            for base, _, files in os.walk(os.path.join(root, cat, "train"))
        )
        test_files = sum(
            len(files)
            for base, _, files in os.walk(os.path.join(root, cat, "test"))
        )
        c = index.category(cat)
        assert len(c.train_normals) == train_files == 3
        assert len(c.test_items) == test_files == 2
        labels = sorted(t.label for t in c.test_items)
        assert labels == [0, 1]


def test_anomalous_without_mask_is_schema_violation(tmp_path):
    root = str(tmp_path)
    _make_mvtec_fixture(root, with_mask=False)
    with pytest.raises(SchemaViolationError):
        scan_dataset(root, "mvtec-style")


def test_category_without_train_images_is_schema_violation(tmp_path):
    root = str(tmp_path)
    _make_mvtec_fixture(root)
    _png(f"{root}/gamma/test/good/0.png")
    os.makedirs(f"{root}/gamma/train/good", exist_ok=True)
    with pytest.raises(SchemaViolationError):
        scan_dataset(root, "mvtec-style")


def test_unknown_layout_rejected(tmp_path):
    with pytest.raises(SchemaViolationError):
        scan_dataset(str(tmp_path), "imagenet-style")


def test_dagm_style_layout(tmp_path):
    root = str(tmp_path)
    for cat in ("Class1", "Class2"):
        for i in range(2):
            _png(f"{root}/{cat}/train/{i}.png")
        _png(f"{root}/{cat}/test/0.png")
        _png(f"{root}/{cat}/test/1.png")
        _png(f"{root}/{cat}/test/label/1_label.png", value=255)
    index = scan_dataset(root, "dagm-style")
    assert index.categories == ("Class1", "Class2")
    c = index.category("Class1")
    assert len(c.train_normals) == 2
    by_label = {t.label: t for t in c.test_items}
    assert by_label[1].mask is not None and by_label[0].mask is None


def test_dagm_labeled_train_rejected(tmp_path):
    root = str(tmp_path)
    _png(f"{root}/Class1/train/0.png")
    _png(f"{root}/Class1/train/label/0_label.png")
    _png(f"{root}/Class1/test/0.png")
    with pytest.raises(SchemaViolationError):
        scan_dataset(root, "dagm-style")
