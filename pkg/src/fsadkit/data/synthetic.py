"""Desk-scale synthetic dataset generator.

Each category is a distinct procedural texture (stripes, checker, dots,
waves, patches) with a category-specific color pair; normal images vary
only by small shifts, amplitude jitter and pixel noise.  Anomalous test
images carry one contiguous elliptical defect filled with the
complementary color, together with its exact binary mask.

The dataset is written in mvtec-style layout so ``scan_dataset`` reads it
back unchanged.  Generation is a pure function of the spec: identical
specs produce byte-identical trees.
"""

import os
from dataclasses import dataclass, asdict

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter

from .. import rng as rngmod
from ..errors import InvalidSpecError
from .index import scan_dataset

FAMILIES = ("stripes", "checker", "dots", "waves", "patches")

# Two-color palettes cycled across categories (RGB in [0,1]).
PALETTE = (
    ((0.10, 0.15, 0.45), (0.85, 0.90, 1.00)),
    ((0.45, 0.10, 0.10), (1.00, 0.85, 0.70)),
    ((0.05, 0.35, 0.10), (0.80, 1.00, 0.80)),
    ((0.35, 0.25, 0.05), (1.00, 0.95, 0.70)),
    ((0.30, 0.05, 0.35), (0.95, 0.80, 1.00)),
)


@dataclass(frozen=True)
class SyntheticSpec:
    n_categories: int = 5
    train_per_category: int = 12
    test_normal_per_category: int = 8
    test_anomalous_per_category: int = 8
    resolution: int = 64
    defect_area_fraction: float = 0.05
    defect_contrast: float = 1.0
    noise_level: float = 0.02
    seed: int = 0

    def validate(self):
        if self.n_categories < 2:
            raise InvalidSpecError("need at least 2 categories")
        if min(self.train_per_category, self.test_normal_per_category) < 1:
            raise InvalidSpecError("train and normal-test counts must be >= 1")
        if self.test_anomalous_per_category < 0:
            raise InvalidSpecError("negative anomalous-test count")
        if self.resolution < 16:
            raise InvalidSpecError("resolution must be >= 16")
        if not 0.0 <= self.defect_area_fraction < 1.0:
            raise InvalidSpecError("defect_area_fraction must be in [0, 1)")
        if self.defect_area_fraction == 0.0 and self.test_anomalous_per_category > 0:
            raise InvalidSpecError(
                "zero-area defects requested together with anomalous test images"
            )
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidSpecError(f"unknown synthetic-spec keys: {sorted(unknown)}")
        return cls(**data).validate()


def category_names(spec):
    return tuple(
        f"{FAMILIES[i % len(FAMILIES)]}{i}" for i in range(spec.n_categories)
    )


def _coords(res):
    y, x = np.mgrid[0:res, 0:res].astype(np.float64)
    return y / res, x / res


def _base_pattern(family, res, params):
    """Scalar pattern in [0, 1], shifted per image by params['shift']."""
    y, x = _coords(res)
    y = y + params["shift"][0]
    x = x + params["shift"][1]
    theta = params["angle"]
    u = np.cos(theta) * x + np.sin(theta) * y
    v = -np.sin(theta) * x + np.cos(theta) * y
    freq = params["freq"]
    if family == "stripes":
        return 0.5 + 0.5 * np.sin(2 * np.pi * freq * u)
    if family == "checker":
        return (np.floor(u * freq) + np.floor(v * freq)) % 2
    if family == "dots":
        return (
            (0.5 + 0.5 * np.sin(2 * np.pi * freq * u))
            * (0.5 + 0.5 * np.sin(2 * np.pi * freq * v))
        )
    if family == "waves":
        return 0.5 + 0.5 * np.sin(2 * np.pi * (freq * u + np.sin(2 * np.pi * v)))
    if family == "patches":
        cell = np.floor(u * freq) * 31 + np.floor(v * freq) * 17
        return (np.sin(cell * 12.9898) * 43758.5453) % 1.0
    raise InvalidSpecError(f"unknown texture family {family}")


def _category_params(spec, cat_idx):
    s = rngmod.stream(spec.seed, "synthetic", "category", cat_idx)
    return {
        "freq": float(s.uniform(3.0, 6.0)),
        "angle": float(s.uniform(0, np.pi)),
        "colors": PALETTE[cat_idx % len(PALETTE)],
    }


def _render_normal(spec, family, cat_params, img_stream):
    res = spec.resolution
    params = {
        "freq": cat_params["freq"],
        "angle": cat_params["angle"],
        "shift": img_stream.uniform(0.0, 1.0, size=2),
    }
    pattern = _base_pattern(family, res, params)
    amp = 1.0 + img_stream.uniform(-0.1, 0.1)
    pattern = np.clip(0.5 + (pattern - 0.5) * amp, 0.0, 1.0)
    c0 = np.asarray(cat_params["colors"][0])
    c1 = np.asarray(cat_params["colors"][1])
    img = c0[None, None, :] + pattern[..., None] * (c1 - c0)[None, None, :]
    img = img + img_stream.normal(0.0, spec.noise_level, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def _ellipse_mask(res, area, img_stream):
    """Boolean mask of one ellipse with pixel count close to ``area``."""
    aspect = img_stream.uniform(0.6, 1.6)
    a = np.sqrt(area * aspect / np.pi)
    b = area / (np.pi * a)
    angle = img_stream.uniform(0, np.pi)
    margin = max(a, b) + 1.0
    lo, hi = margin, res - margin
    if lo >= hi:
        raise InvalidSpecError("defect too large for the image resolution")
    cy = img_stream.uniform(lo, hi)
    cx = img_stream.uniform(lo, hi)
    y, x = np.mgrid[0:res, 0:res].astype(np.float64)
    dy, dx = y + 0.5 - cy, x + 0.5 - cx
    u = np.cos(angle) * dx + np.sin(angle) * dy
    v = -np.sin(angle) * dx + np.cos(angle) * dy
    return (u / a) ** 2 + (v / b) ** 2 <= 1.0


def _apply_defect(spec, img, cat_params, img_stream):
    res = spec.resolution
    area = spec.defect_area_fraction * res * res
    mask = _ellipse_mask(res, area, img_stream)
    c0 = np.asarray(cat_params["colors"][0])
    c1 = np.asarray(cat_params["colors"][1])
    complement = 1.0 - (c0 + c1) / 2.0
    fill = complement[None, None, :] + img_stream.normal(0.0, 0.05, size=img.shape)
    blend = spec.defect_contrast
    out = img.copy()
    out[mask] = (1.0 - blend) * img[mask] + blend * np.clip(fill, 0.0, 1.0)[mask]
    # soften the defect boundary a little so it is not a pure box edge
    soft = gaussian_filter(mask.astype(np.float64), sigma=0.6)[..., None]
    out = np.where(soft > 0.05, out, img)
    return np.clip(out, 0.0, 1.0), mask


def _save_png(path, img):
    arr = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path, format="PNG")


def _save_mask(path, mask):
    Image.fromarray((mask.astype(np.uint8)) * 255).save(path, format="PNG")


def generate_synthetic(spec, root):
    """Materialize the dataset under ``root`` and return its scanned index."""
    spec.validate()
    names = category_names(spec)
    for idx, name in enumerate(names):
        family = FAMILIES[idx % len(FAMILIES)]
        cat_params = _category_params(spec, idx)
        cat_dir = os.path.join(root, name)
        train_dir = os.path.join(cat_dir, "train", "good")
        test_good = os.path.join(cat_dir, "test", "good")
        test_bad = os.path.join(cat_dir, "test", "defect")
        gt_bad = os.path.join(cat_dir, "ground_truth", "defect")
        os.makedirs(train_dir, exist_ok=True)
        os.makedirs(test_good, exist_ok=True)
        if spec.test_anomalous_per_category:
            os.makedirs(test_bad, exist_ok=True)
            os.makedirs(gt_bad, exist_ok=True)
        for i in range(spec.train_per_category):
            s = rngmod.stream(spec.seed, "synthetic", name, "train", i)
            _save_png(
                os.path.join(train_dir, f"{i:03d}.png"),
                _render_normal(spec, family, cat_params, s),
            )
        for i in range(spec.test_normal_per_category):
            s = rngmod.stream(spec.seed, "synthetic", name, "test-good", i)
            _save_png(
                os.path.join(test_good, f"{i:03d}.png"),
                _render_normal(spec, family, cat_params, s),
            )
        for i in range(spec.test_anomalous_per_category):
            s = rngmod.stream(spec.seed, "synthetic", name, "test-defect", i)
            img = _render_normal(spec, family, cat_params, s)
            img, mask = _apply_defect(spec, img, cat_params, s)
            _save_png(os.path.join(test_bad, f"{i:03d}.png"), img)
            _save_mask(os.path.join(gt_bad, f"{i:03d}_mask.png"), mask)
    return scan_dataset(root, layout="mvtec-style")
