"""Dataset indexing for the two supported on-disk layouts.

mvtec-style::

    <root>/<category>/train/good/*.png
    <root>/<category>/test/good/*.png                 (normal test images)
    <root>/<category>/test/<defect_type>/*.png        (anomalous test images)
    <root>/<category>/ground_truth/<defect_type>/<stem>_mask.png

dagm-style::

    <root>/<ClassN>/train/*.png                       (normal only)
    <root>/<ClassN>/test/*.png
    <root>/<ClassN>/test/label/<stem>_label.png       (mask => anomalous)

In both layouts every anomalous test image must have a mask and train
splits contain only normal images.
"""

import os
from dataclasses import dataclass, field

from ..errors import NotFoundError, SchemaViolationError

IMAGE_EXTS = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


@dataclass(frozen=True)
class TestItem:
    """One test image: path, binary label (1 = anomalous), optional mask path."""

    image: str
    label: int
    mask: str | None = None


@dataclass(frozen=True)
class CategoryIndex:
    name: str
    train_normals: tuple
    test_items: tuple


@dataclass(frozen=True)
class DatasetIndex:
    """Immutable listing of categories with train/test splits."""

    categories: tuple
    by_category: dict = field(repr=False)

    def category(self, name):
        return self.by_category[name]

    def validate(self):
        if len(self.categories) < 1:
            raise SchemaViolationError("dataset has no categories")
        if len(set(self.categories)) != len(self.categories):
            raise SchemaViolationError("duplicate category names")
        for name in self.categories:
            cat = self.by_category[name]
            if not name:
                raise SchemaViolationError("empty category name")
            if not cat.train_normals:
                raise SchemaViolationError(f"category {name} has no train images")
            for item in cat.test_items:
                if item.label not in (0, 1):
                    raise SchemaViolationError(f"bad label {item.label} in {name}")
                if item.label == 1 and item.mask is None:
                    raise SchemaViolationError(
                        f"anomalous test image {item.image} has no mask"
                    )
                if item.label == 0 and item.mask is not None:
                    raise SchemaViolationError(
                        f"normal test image {item.image} has a mask"
                    )
        return self


def _list_images(directory):
    if not os.path.isdir(directory):
        return []
    names = [
        n for n in sorted(os.listdir(directory))
        if n.lower().endswith(IMAGE_EXTS)
    ]
    return [os.path.join(directory, n) for n in names]


def _scan_mvtec_category(root, name):
    cat_dir = os.path.join(root, name)
    train = _list_images(os.path.join(cat_dir, "train", "good"))
    test_dir = os.path.join(cat_dir, "test")
    gt_dir = os.path.join(cat_dir, "ground_truth")
    items = []
    if os.path.isdir(test_dir):
        for defect_type in sorted(os.listdir(test_dir)):
            sub = os.path.join(test_dir, defect_type)
            if not os.path.isdir(sub):
                continue
            for img in _list_images(sub):
                stem = os.path.splitext(os.path.basename(img))[0]
                if defect_type == "good":
                    items.append(TestItem(image=img, label=0))
                else:
                    mask = os.path.join(gt_dir, defect_type, stem + "_mask.png")
                    if not os.path.isfile(mask):
                        raise SchemaViolationError(
                            f"missing mask for anomalous test image {img}"
                        )
                    items.append(TestItem(image=img, label=1, mask=mask))
    return CategoryIndex(name=name, train_normals=tuple(train), test_items=tuple(items))


def _scan_dagm_category(root, name):
    cat_dir = os.path.join(root, name)
    train_dir = os.path.join(cat_dir, "train")
    if _list_images(os.path.join(train_dir, "label")):
        raise SchemaViolationError(
            f"train split of {name} contains labeled (anomalous) images"
        )
    train = _list_images(train_dir)
    test_dir = os.path.join(cat_dir, "test")
    label_dir = os.path.join(test_dir, "label")
    items = []
    for img in _list_images(test_dir):
        stem = os.path.splitext(os.path.basename(img))[0]
        mask = os.path.join(label_dir, stem + "_label.png")
        if os.path.isfile(mask):
            items.append(TestItem(image=img, label=1, mask=mask))
        else:
            items.append(TestItem(image=img, label=0))
    return CategoryIndex(name=name, train_normals=tuple(train), test_items=tuple(items))


def scan_dataset(root, layout="mvtec-style"):
    """Walk ``root`` and build a validated DatasetIndex.

    Categories are the immediate subdirectories of ``root``, sorted
    lexicographically.
    """
    if layout not in ("mvtec-style", "dagm-style"):
        raise SchemaViolationError(f"unknown layout {layout!r}")
    if not os.path.isdir(root):
        raise NotFoundError(f"dataset root {root} does not exist")
    names = sorted(
        n for n in os.listdir(root) if os.path.isdir(os.path.join(root, n))
    )
    if not names:
        raise NotFoundError(f"dataset root {root} contains no category directories")
    scan = _scan_mvtec_category if layout == "mvtec-style" else _scan_dagm_category
    by_category = {name: scan(root, name) for name in names}
    index = DatasetIndex(categories=tuple(names), by_category=by_category)
    return index.validate()
