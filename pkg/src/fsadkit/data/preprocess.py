"""Image decoding and preprocessing.

The working representation of an image is a ``(3, R, R)`` float32 array
with raw values in ``[0, 1]`` ("image tensor").  Grayscale sources are
replicated to 3 channels so every model sees one signature. Resizing is
bilinear with the half-pixel-center convention (cv2.INTER_LINEAR); masks
are resized with nearest-neighbor so they stay binary.
"""

import numpy as np
import cv2
from PIL import Image, UnidentifiedImageError

from ..errors import DecodeError, InvalidInputError

DEFAULT_RESOLUTION = 224

# Optional per-channel standardization constants (ImageNet convention).
CHANNEL_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
CHANNEL_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


def load_image(path):
    """Decode an image file to an (H, W, 3) uint8 array.

    Grayscale images are replicated to 3 channels.  Raises DecodeError on
    unreadable or unsupported files.
    """
    try:
        with Image.open(path) as img:
            img = img.convert("RGB")
            return np.asarray(img, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode image {path}: {exc}") from exc


def resize_bilinear(data, height, width):
    """Bilinear resize of an (H, W) or (H, W, C) float array."""
    out = cv2.resize(
        np.ascontiguousarray(data, dtype=np.float32),
        (width, height),
        interpolation=cv2.INTER_LINEAR,
    )
    return out


def resize_nearest(data, height, width):
    """Nearest-neighbor resize; keeps binary masks binary."""
    return cv2.resize(
        np.ascontiguousarray(data),
        (width, height),
        interpolation=cv2.INTER_NEAREST,
    )


def preprocess(raw, resolution=DEFAULT_RESOLUTION, standardize=False):
    """Turn a decoded (H, W, C) uint8/float image into a (3, R, R) tensor.

    Values are scaled to [0, 1]; with ``standardize`` the documented
    per-channel constants are applied afterwards.
    """
    arr = np.asarray(raw)
    if arr.ndim == 2:
        arr = np.stack([arr] * 3, axis=-1)
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise InvalidInputError(f"expected HxWx{{1,3}} image, got shape {arr.shape}")
    if arr.shape[2] == 1:
        arr = np.repeat(arr, 3, axis=2)
    if arr.dtype == np.uint8:
        arr = arr.astype(np.float32) / 255.0
    else:
        arr = arr.astype(np.float32)
    arr = resize_bilinear(arr, resolution, resolution)
    if standardize:
        arr = (arr - CHANNEL_MEAN) / CHANNEL_STD
    tensor = np.ascontiguousarray(arr.transpose(2, 0, 1))
    if not np.isfinite(tensor).all():
        raise InvalidInputError("non-finite values after preprocessing")
    return tensor


def load_and_preprocess(path, resolution=DEFAULT_RESOLUTION, standardize=False):
    return preprocess(load_image(path), resolution=resolution, standardize=standardize)


def load_mask(path, resolution):
    """Load a ground-truth mask as a boolean (R, R) array."""
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("L"))
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode mask {path}: {exc}") from exc
    binary = (arr > 127).astype(np.uint8)
    resized = resize_nearest(binary, resolution, resolution)
    return resized.astype(bool)
