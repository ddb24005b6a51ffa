"""Feature decoder: softmax attention over spatial positions.

Each block is single-head scaled dot-product attention with a residual
connection followed by a residual position-wise MLP.  A learned
positional encoding is added once before the first block.  Attention
rows are softmax-normalized, so they sum to one by construction.
"""

import math

import torch
from torch import nn

from ..errors import NumericalError


class AttentionBlock(nn.Module):
    def __init__(self, channels, mlp_hidden=None):
        super().__init__()
        self.q = nn.Linear(channels, channels)
        self.k = nn.Linear(channels, channels)
        self.v = nn.Linear(channels, channels)
        self.out = nn.Linear(channels, channels)
        hidden = mlp_hidden or 2 * channels
        self.mlp = nn.Sequential(
            nn.Linear(channels, hidden),
            nn.ReLU(),
            nn.Linear(hidden, channels),
        )
        self.scale = 1.0 / math.sqrt(channels)

    def forward(self, x):
        """x: (B, N, C) -> (same shape, attention weights (B, N, N))."""
        attn = torch.softmax(
            torch.bmm(self.q(x), self.k(x).transpose(1, 2)) * self.scale, dim=-1
        )
        x = x + self.out(torch.bmm(attn, self.v(x)))
        x = x + self.mlp(x)
        return x, attn


class FeatureDecoder(nn.Module):
    def __init__(self, channels, height, width, depth=2):
        super().__init__()
        self.height = height
        self.width = width
        self.pos = nn.Parameter(torch.zeros(channels, height, width))
        self.blocks = nn.ModuleList(AttentionBlock(channels) for _ in range(depth))
        self.last_attention = None

    def forward(self, features):
        b, c, h, w = features.shape
        x = features + self.pos.unsqueeze(0)
        x = x.reshape(b, c, h * w).transpose(1, 2)
        attentions = []
        for block in self.blocks:
            x, attn = block(x)
            attentions.append(attn)
        self.last_attention = attentions
        out = x.transpose(1, 2).reshape(b, c, h, w)
        if not torch.isfinite(out).all():
            raise NumericalError("non-finite decoder output")
        return out
