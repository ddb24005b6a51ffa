"""Siamese registration host: STN -> encoder -> predictor per branch.

Both branches share one set of weights.  The training signal is the
negative cosine similarity between each branch's predictor output and the
*constant* (stop-gradient) encoder output of the other branch, the usual
Siamese trick that keeps the two feature maps aligned without collapsing.
"""

from dataclasses import dataclass
from typing import NamedTuple

import torch
from torch import nn

from ..errors import ShapeError
from .backbones import ConvEncoder, Predictor, init_from_stream
from .stn import SpatialTransformer

COSINE_EPS = 1e-8


class FeaturePair(NamedTuple):
    """The two same-shape feature maps fed to the adversarial loss."""

    f0: torch.Tensor
    f1: torch.Tensor

    def check(self):
        if self.f0.shape != self.f1.shape:
            raise ShapeError(
                f"feature pair shapes differ: {tuple(self.f0.shape)} vs "
                f"{tuple(self.f1.shape)}"
            )
        return self


@dataclass
class SiameseOutputs:
    z0: torch.Tensor
    z1: torch.Tensor
    p0: torch.Tensor
    p1: torch.Tensor
    pair: FeaturePair


class SiameseModel(nn.Module):
    def __init__(self, in_channels=3, widths=(16, 32, 64), use_stn=True):
        super().__init__()
        self.stn = SpatialTransformer(in_channels) if use_stn else None
        self.encoder = ConvEncoder(in_channels, widths)
        self.predictor = Predictor(self.encoder.out_channels)
        self.feature_channels = self.encoder.out_channels

    def embed(self, images):
        """Single-branch features (the f0 side): predictor(encoder(stn(x)))."""
        z = self.encode(images)
        return self.predictor(z)

    def encode(self, images):
        if self.stn is not None:
            images = self.stn(images)
        return self.encoder(images)

    def forward(self, i0, i1):
        z0 = self.encode(i0)
        z1 = self.encode(i1)
        p0 = self.predictor(z0)
        p1 = self.predictor(z1)
        pair = FeaturePair(f0=p0, f1=p1).check()
        return SiameseOutputs(z0=z0, z1=z1, p0=p0, p1=p1, pair=pair)

    def init_parameters(self, rng):
        init_from_stream(self, rng)
        if self.stn is not None:
            self.stn.init_identity()
        return self


def _cosine_map(p, z):
    """Per-position cosine similarity over channels for (B, C, H, W) maps."""
    num = (p * z).sum(dim=1)
    denom = p.norm(dim=1) * z.norm(dim=1) + COSINE_EPS
    return num / denom


def registration_loss(outputs):
    """Symmetric negative cosine with stop-gradient on the z side.

    -0.5 * [cos(p0, sg(z1)) + cos(p1, sg(z0))], averaged over batch and
    spatial positions; always in [-1, 1].
    """
    c0 = _cosine_map(outputs.p0, outputs.z1.detach())
    c1 = _cosine_map(outputs.p1, outputs.z0.detach())
    return -0.5 * (c0.mean() + c1.mean())
