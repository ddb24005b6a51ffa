"""Shared convolutional pieces: encoder and predictor head."""

import torch
from torch import nn

from ..errors import ConfigError


class ConvEncoder(nn.Module):
    """Three stride-2 conv blocks mapping (3, R, R) to (C_f, R/8, R/8)."""

    def __init__(self, in_channels=3, widths=(16, 32, 64)):
        super().__init__()
        layers = []
        prev = in_channels
        for width in widths:
            layers += [
                nn.Conv2d(prev, width, kernel_size=3, stride=2, padding=1),
                nn.ReLU(),
            ]
            prev = width
        self.blocks = nn.Sequential(*layers)
        self.out_channels = prev

    def forward(self, images):
        if images.shape[-1] % 8 or images.shape[-2] % 8:
            raise ConfigError(
                f"encoder needs a resolution divisible by 8, got {tuple(images.shape[-2:])}"
            )
        return self.blocks(images)


class Predictor(nn.Module):
    """Shape-preserving projection head: two 1x1 convs."""

    def __init__(self, channels, hidden=None):
        super().__init__()
        hidden = hidden or channels
        self.net = nn.Sequential(
            nn.Conv2d(channels, hidden, kernel_size=1),
            nn.ReLU(),
            nn.Conv2d(hidden, channels, kernel_size=1),
        )

    def forward(self, features):
        return self.net(features)


def init_from_stream(module, rng):
    """Deterministically re-initialize all parameters from a numpy stream.

    Weights get uniform(-b, b) with b = 1/sqrt(fan_in); biases get zeros.
    Walking named_parameters in definition order makes initialization a
    pure function of the stream, independent of torch's global RNG.
    """
    with torch.no_grad():
        for name, param in module.named_parameters():
            if param.dim() <= 1:
                param.zero_()
            else:
                fan_in = param[0].numel()
                bound = 1.0 / (fan_in ** 0.5)
                values = rng.uniform(-bound, bound, size=tuple(param.shape))
                param.copy_(torch.as_tensor(values, dtype=param.dtype))
    return module
