"""Anomaly scoring for both hosts.

Siamese host: per-position Gaussians are fitted over the support set
(augmented by the 8 dihedral transforms) and test features are scored by
Mahalanobis distance, PaDiM-style.  Reconstruction host: every position
is masked once via complementary mask grids and scored by its per-position
squared reconstruction error.  Low-resolution grids are upsampled
bilinearly to image resolution and Gaussian-smoothed.
"""

from dataclasses import dataclass

import numpy as np
import torch
from scipy.ndimage import gaussian_filter

from .. import rng as rngmod
from ..data.preprocess import resize_bilinear
from ..errors import InvalidInputError, NumericalError, ShapeError
from ..models.masking import apply_mask_token, complementary_mask_grids

COV_SHRINKAGE = 0.01
SMOOTHING_SIGMA = 4.0


def dihedral_transforms(image):
    """The 8 rotation/flip variants of a (C, H, W) array."""
    views = []
    for k in range(4):
        rot = np.rot90(image, k, axes=(1, 2))
        views.append(np.ascontiguousarray(rot))
        views.append(np.ascontiguousarray(rot[:, :, ::-1]))
    return views


@dataclass
class GaussianStats:
    """Per-position mean and shrunk covariance of support features.

    ``sigma`` already includes the ``shrinkage * I`` term, so it is the
    matrix inverted by the Mahalanobis map.
    """

    mean: np.ndarray       # (P, C)
    sigma: np.ndarray      # (P, C, C)
    shrinkage: float
    height: int
    width: int


def fit_support_stats(feature_maps, shrinkage=COV_SHRINKAGE):
    """Fit per-position Gaussians over a list of (C, H, W) feature maps.

    Uses the unbiased (n-1) covariance; a single sample yields the pure
    shrinkage matrix.
    """
    if not feature_maps:
        raise InvalidInputError("no support feature maps")
    stack = np.stack([np.asarray(f, dtype=np.float64) for f in feature_maps])
    n, c, h, w = stack.shape
    flat = stack.transpose(2, 3, 0, 1).reshape(h * w, n, c)
    mean = flat.mean(axis=1)
    centered = flat - mean[:, None, :]
    if n > 1:
        sigma = np.einsum("pnc,pnd->pcd", centered, centered) / (n - 1)
    else:
        sigma = np.zeros((h * w, c, c))
    sigma = sigma + shrinkage * np.eye(c)[None, :, :]
    return GaussianStats(mean=mean, sigma=sigma, shrinkage=shrinkage, height=h, width=w)


def mahalanobis_map(stats, feature_map):
    """Per-position Mahalanobis distance grid for one (C, H, W) map."""
    f = np.asarray(feature_map, dtype=np.float64)
    c, h, w = f.shape
    if (h, w) != (stats.height, stats.width) or stats.mean.shape[1] != c:
        raise ShapeError("feature map does not match the fitted statistics")
    flat = f.transpose(1, 2, 0).reshape(h * w, c)
    diff = flat - stats.mean
    try:
        solved = np.linalg.solve(stats.sigma, diff[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"covariance not invertible: {exc}") from exc
    d2 = np.einsum("pc,pc->p", diff, solved)
    if not np.isfinite(d2).all():
        raise NumericalError("non-finite Mahalanobis distances")
    return np.sqrt(np.clip(d2, 0.0, None)).reshape(h, w)


def recon_error_map(z, z_hat):
    """Per-position channel-summed squared error for (C, H, W) maps."""
    z = np.asarray(z, dtype=np.float64)
    z_hat = np.asarray(z_hat, dtype=np.float64)
    if z.shape != z_hat.shape:
        raise ShapeError(f"shapes differ: {z.shape} vs {z_hat.shape}")
    return ((z - z_hat) ** 2).sum(axis=0)


def upsample_map(grid, resolution, sigma=SMOOTHING_SIGMA):
    """Bilinear upsample to (R, R) followed by Gaussian smoothing."""
    grid = np.asarray(grid, dtype=np.float32)
    if not np.isfinite(grid).all():
        raise NumericalError("non-finite anomaly grid")
    up = resize_bilinear(grid, resolution, resolution)
    if sigma > 0:
        up = gaussian_filter(up.astype(np.float64), sigma=sigma)
    return np.clip(up, 0.0, None)


def image_score(anomaly_map, reduction="max", top_k=50):
    """Scalar image score: map maximum, or mean of the top-k pixels."""
    flat = np.asarray(anomaly_map).ravel()
    if reduction == "max":
        return float(flat.max())
    if reduction == "top-k":
        k = min(top_k, flat.size)
        return float(np.sort(flat)[-k:].mean())
    raise InvalidInputError(f"unknown reduction {reduction!r}")


def _embed(model, images):
    with torch.no_grad():
        feats = model.embed(torch.from_numpy(np.stack(images)).float())
    return feats.numpy()


def siamese_support_stats(model, episode, shrinkage=COV_SHRINKAGE):
    """Dihedral-augmented per-position Gaussians of the support features."""
    augmented = []
    for img in episode.support:
        augmented.extend(dihedral_transforms(img))
    feats = _embed(model, augmented)
    return fit_support_stats(list(feats), shrinkage=shrinkage)


def score_episode_siamese(model, episode, shrinkage=COV_SHRINKAGE,
                          sigma=SMOOTHING_SIGMA, reduction="max"):
    """Anomaly maps and image scores for every test image of the episode."""
    stats = siamese_support_stats(model, episode, shrinkage)
    feats = _embed(model, [t.image for t in episode.test])
    maps, scores = [], []
    for f in feats:
        amap = upsample_map(mahalanobis_map(stats, f), episode.resolution, sigma)
        maps.append(amap)
        scores.append(image_score(amap, reduction))
    return maps, scores


def recon_eval_features(model, images, seed):
    """Reconstruct every feature position once via complementary masks.

    Returns (z, z_hat) numpy arrays of shape (B, C, H, W); position p of
    z_hat comes from the pass in which p was masked.
    """
    grids = complementary_mask_grids(
        model.feature_side,
        model.feature_side,
        model.mask_fraction,
        rngmod.stream(seed, "eval", "mask-partition"),
    )
    batch = torch.from_numpy(np.stack(images)).float()
    with torch.no_grad():
        z = model.encode(batch)
        z_hat = torch.zeros_like(z)
        any_masked = torch.zeros(z.shape[0], model.feature_side, model.feature_side,
                                 dtype=torch.bool)
        for grid in grids:
            if not bool(grid.any()):
                z_hat = model.decoder(z)
                any_masked |= True
                continue
            expanded = grid.unsqueeze(0).expand(z.shape[0], -1, -1)
            masked = apply_mask_token(z, model.token, expanded)
            out = model.decoder(masked)
            sel = expanded.unsqueeze(1)
            z_hat = torch.where(sel, out, z_hat)
            any_masked |= expanded
    if not bool(any_masked.all()):
        raise NumericalError("complementary masks did not cover every position")
    return z.numpy(), z_hat.numpy()


def score_episode_recon(model, episode, sigma=SMOOTHING_SIGMA, reduction="max"):
    """Reconstruction-error scoring of every test image of the episode."""
    z, z_hat = recon_eval_features(
        model, [t.image for t in episode.test], episode.seed
    )
    maps, scores = [], []
    for zi, zh in zip(z, z_hat):
        amap = upsample_map(recon_error_map(zi, zh), episode.resolution, sigma)
        maps.append(amap)
        scores.append(image_score(amap, reduction))
    return maps, scores
