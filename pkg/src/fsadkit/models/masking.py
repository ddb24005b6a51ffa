"""Neighborhood masking of feature maps with a learned token.

A fraction of positions is selected without replacement, dilated to a
k x k neighborhood, and every covered position is replaced by the mask
token.  Selection comes from a numpy stream so it can be replayed:
``round(fraction * N)`` indices via ``rng.choice(N, size, replace=False)``
over row-major positions, independently per batch sample.
"""

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import ConfigError


def select_mask_grid(batch, height, width, fraction, neighborhood, rng):
    """Boolean (B, H, W) tensor of positions to replace."""
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError(f"mask fraction must be in [0, 1], got {fraction}")
    if neighborhood % 2 != 1 or neighborhood < 1:
        raise ConfigError(f"neighborhood must be an odd positive integer, got {neighborhood}")
    if neighborhood > min(height, width):
        raise ConfigError("neighborhood larger than the feature map")
    n = height * width
    n_sel = int(round(fraction * n))
    sel = torch.zeros(batch, height, width, dtype=torch.bool)
    for b in range(batch):
        if n_sel == 0:
            continue
        idx = rng.choice(n, size=n_sel, replace=False)
        flat = torch.zeros(n, dtype=torch.bool)
        flat[torch.as_tensor(np.asarray(idx, dtype=np.int64))] = True
        sel[b] = flat.view(height, width)
    if neighborhood > 1:
        pad = neighborhood // 2
        dilated = F.max_pool2d(
            sel.unsqueeze(1).float(), kernel_size=neighborhood, stride=1, padding=pad
        )
        sel = dilated.squeeze(1) > 0.5
    return sel


def apply_mask_token(features, token, grid):
    """Replace grid-covered positions of (B, C, H, W) features by the token."""
    expanded = grid.unsqueeze(1).to(features.device)
    tok = token.view(1, -1, 1, 1).to(features.dtype)
    return torch.where(expanded, tok, features)


def mask_features(features, token, fraction, neighborhood, rng):
    """Random neighborhood masking; returns (masked features, mask grid)."""
    b, _, h, w = features.shape
    grid = select_mask_grid(b, h, w, fraction, neighborhood, rng)
    return apply_mask_token(features, token, grid), grid


def complementary_mask_grids(height, width, fraction, rng):
    """Partition all positions into ~1/fraction disjoint mask grids.

    Used at inference so every position is reconstructed exactly once from
    unmasked context.  fraction == 0 yields a single empty grid (no
    masking).
    """
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError(f"mask fraction must be in [0, 1], got {fraction}")
    n = height * width
    if fraction == 0.0:
        return [torch.zeros(height, width, dtype=torch.bool)]
    groups = max(1, int(round(1.0 / fraction)))
    perm = np.asarray(rng.permutation(n), dtype=np.int64)
    grids = []
    for chunk in np.array_split(perm, groups):
        flat = torch.zeros(n, dtype=torch.bool)
        flat[torch.as_tensor(chunk)] = True
        grids.append(flat.view(height, width))
    return grids
