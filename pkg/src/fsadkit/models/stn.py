"""Spatial transformer: affine regressor plus bilinear resampling.

The warp works in center-origin pixel coordinates: a target pixel at
offset (x, y) from the image center samples the source at

    sx = a*x + b*y + tx * W/2 + cx
    sy = c*x + d*y + ty * H/2 + cy

with theta = [[a, b, tx], [c, d, ty]].  The identity theta reproduces the
input bit-exactly (integer source coordinates, so the bilinear weights
are exactly 0/1), which is what the identity-initialized regressor emits
at step 0.  Out-of-range samples clamp to the border.
"""

import torch
from torch import nn

from ..errors import NumericalError

IDENTITY_THETA = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0)


def affine_warp(images, theta):
    """Resample a (B, C, H, W) batch through per-sample affine maps.

    ``theta`` is (B, 2, 3).  Differentiable w.r.t. both inputs.
    """
    b, c, h, w = images.shape
    dtype = images.dtype
    device = images.device
    cy = (h - 1) / 2.0
    cx = (w - 1) / 2.0
    ys = torch.arange(h, dtype=dtype, device=device) - cy
    xs = torch.arange(w, dtype=dtype, device=device) - cx
    y, x = torch.meshgrid(ys, xs, indexing="ij")

    a = theta[:, 0, 0].view(b, 1, 1)
    bb = theta[:, 0, 1].view(b, 1, 1)
    tx = theta[:, 0, 2].view(b, 1, 1)
    cc = theta[:, 1, 0].view(b, 1, 1)
    d = theta[:, 1, 1].view(b, 1, 1)
    ty = theta[:, 1, 2].view(b, 1, 1)

    sx = a * x + bb * y + tx * (w / 2.0) + cx
    sy = cc * x + d * y + ty * (h / 2.0) + cy

    x0 = torch.floor(sx)
    y0 = torch.floor(sy)
    wx = sx - x0
    wy = sy - y0

    def clamp_x(v):
        return v.clamp(0, w - 1).long()

    def clamp_y(v):
        return v.clamp(0, h - 1).long()

    x0i, x1i = clamp_x(x0), clamp_x(x0 + 1)
    y0i, y1i = clamp_y(y0), clamp_y(y0 + 1)

    flat = images.reshape(b, c, h * w)

    def gather(yi, xi):
        idx = (yi * w + xi).reshape(b, 1, h * w).expand(b, c, h * w)
        return torch.gather(flat, 2, idx).reshape(b, c, h, w)

    v00 = gather(y0i, x0i)
    v01 = gather(y0i, x1i)
    v10 = gather(y1i, x0i)
    v11 = gather(y1i, x1i)

    wx = wx.unsqueeze(1)
    wy = wy.unsqueeze(1)
    return (
        (1 - wy) * ((1 - wx) * v00 + wx * v01)
        + wy * ((1 - wx) * v10 + wx * v11)
    )


class SpatialTransformer(nn.Module):
    """Predicts a 2x3 affine from the image and warps the image through it.

    The final regressor layer starts at zero weight with the identity
    affine as bias, so an untrained transformer is exactly a no-op.
    """

    def __init__(self, in_channels=3, hidden=8):
        super().__init__()
        self.localization = nn.Sequential(
            nn.Conv2d(in_channels, hidden, kernel_size=5, stride=4, padding=2),
            nn.ReLU(),
            nn.Conv2d(hidden, hidden, kernel_size=3, stride=2, padding=1),
            nn.ReLU(),
            nn.AdaptiveAvgPool2d(4),
        )
        self.regressor = nn.Linear(hidden * 16, 6)
        self.init_identity()

    def init_identity(self):
        nn.init.zeros_(self.regressor.weight)
        with torch.no_grad():
            self.regressor.bias.copy_(
                torch.tensor(IDENTITY_THETA, dtype=self.regressor.bias.dtype)
            )

    def predict_theta(self, images):
        feats = self.localization(images).flatten(1)
        return self.regressor(feats).view(-1, 2, 3)

    def forward(self, images):
        theta = self.predict_theta(images)
        if not torch.isfinite(theta).all():
            raise NumericalError("non-finite affine parameters predicted")
        return affine_warp(images, theta)
