"""Masked feature-reconstruction host.

A frozen convolutional backbone plays the role of the usual pretrained
feature extractor; a trainable 1x1 projection produces the working
feature map z (the decoder input), which is randomly neighborhood-masked
and handed to the attention decoder to reproduce.  The adversarial
feature pair is (z, decoder output) by default; a flag switches f0 to the
post-masking map instead.
"""

from dataclasses import dataclass

import torch
from torch import nn

from ..errors import ShapeError
from .backbones import ConvEncoder, init_from_stream
from .decoder import FeatureDecoder
from .masking import apply_mask_token, mask_features
from .siamese import FeaturePair


@dataclass
class ReconOutputs:
    z: torch.Tensor            # pre-masking feature map (decoder input)
    mask: torch.Tensor         # boolean (B, H_f, W_f) grid of replaced positions
    z_hat: torch.Tensor        # decoder output
    pair: FeaturePair


class MaskedReconModel(nn.Module):
    def __init__(
        self,
        resolution,
        in_channels=3,
        widths=(16, 32, 64),
        decoder_depth=2,
        mask_fraction=0.25,
        mask_neighborhood=1,
        pair_from="pre-mask",
    ):
        super().__init__()
        if pair_from not in ("pre-mask", "post-mask"):
            raise ValueError(f"bad pair_from {pair_from!r}")
        self.backbone = ConvEncoder(in_channels, widths)
        channels = self.backbone.out_channels
        self.input_proj = nn.Conv2d(channels, channels, kernel_size=1)
        side = resolution // 8
        self.decoder = FeatureDecoder(channels, side, side, depth=decoder_depth)
        self.token = nn.Parameter(torch.zeros(channels))
        self.mask_fraction = mask_fraction
        self.mask_neighborhood = mask_neighborhood
        self.pair_from = pair_from
        self.feature_channels = channels
        self.feature_side = side
        self._freeze_backbone()

    def _freeze_backbone(self):
        # stands in for the frozen pretrained backbone of the baseline
        for p in self.backbone.parameters():
            p.requires_grad_(False)

    def init_parameters(self, rng):
        init_from_stream(self, rng)
        with torch.no_grad():
            self.pos_init(rng)
        self._freeze_backbone()
        return self

    def pos_init(self, rng):
        values = rng.uniform(-0.02, 0.02, size=tuple(self.decoder.pos.shape))
        self.decoder.pos.copy_(torch.as_tensor(values, dtype=self.decoder.pos.dtype))

    def encode(self, images):
        return self.input_proj(self.backbone(images))

    def embed(self, images):
        """f0-side features used for scoring and embedding dumps."""
        return self.encode(images)

    def forward(self, images, rng=None, mask_grid=None):
        z = self.encode(images)
        if mask_grid is not None:
            masked = apply_mask_token(z, self.token, mask_grid)
            grid = mask_grid
        elif rng is not None:
            masked, grid = mask_features(
                z, self.token, self.mask_fraction, self.mask_neighborhood, rng
            )
        else:
            raise ValueError("forward needs either rng or mask_grid")
        z_hat = self.decoder(masked)
        f0 = z if self.pair_from == "pre-mask" else masked
        pair = FeaturePair(f0=f0, f1=z_hat).check()
        return ReconOutputs(z=z, mask=grid, z_hat=z_hat, pair=pair)


def reconstruction_loss(z, z_hat):
    """Mean squared error over every element of the feature map."""
    if z.shape != z_hat.shape:
        raise ShapeError(
            f"reconstruction shapes differ: {tuple(z.shape)} vs {tuple(z_hat.shape)}"
        )
    return ((z - z_hat) ** 2).mean()
