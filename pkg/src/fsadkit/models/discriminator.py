"""Feature-pair discriminator shared by both hosts.

Conv -> instance norm -> LeakyReLU blocks, global average pooling and a
linear head to a single probability.  Instance norm layers carry no
affine parameters, so their outputs always have per-sample per-channel
zero mean and unit variance.

A stride-2 block is only used while the spatial extent stays above 3
pixels; instance norm over a single position would zero the activations
and stop all learning, so the remaining blocks run at stride 1.
"""

import torch
from torch import nn

from ..errors import ShapeError
from .backbones import init_from_stream

LEAKY_SLOPE = 0.2


def _strides_for(side, depth=3):
    strides = []
    for _ in range(depth):
        if side > 3:
            strides.append(2)
            side = (side + 1) // 2
        else:
            strides.append(1)
    return strides


class Discriminator(nn.Module):
    def __init__(self, in_channels, feature_side, width=64, depth=3):
        super().__init__()
        self.in_channels = in_channels
        blocks = []
        prev = in_channels
        for stride in _strides_for(feature_side, depth):
            blocks += [
                nn.Conv2d(prev, width, kernel_size=3, stride=stride, padding=1),
                nn.InstanceNorm2d(width),
                nn.LeakyReLU(LEAKY_SLOPE),
            ]
            prev = width
        self.blocks = nn.Sequential(*blocks)
        self.head = nn.Linear(prev, 1)

    def logit(self, features):
        if features.dim() == 3:
            features = features.unsqueeze(0)
        if features.dim() != 4 or features.shape[1] != self.in_channels:
            raise ShapeError(
                f"expected (B, {self.in_channels}, H, W) features, got "
                f"{tuple(features.shape)}"
            )
        x = self.blocks(features)
        pooled = x.mean(dim=(2, 3))
        return self.head(pooled).squeeze(-1)

    def forward(self, features):
        """Probability in (0, 1) that the features belong to class 1."""
        return torch.sigmoid(self.logit(features))

    def init_parameters(self, rng):
        return init_from_stream(self, rng)
