"""Gated convolutional fusion of the two branch outputs.

Each branch is rescaled by a sigmoid gate computed from its own pooled
statistics (average pooling for the first input, max pooling for the second),
the gated maps are summed into a third stream, all three pass through 3x3
depthwise separable convolutions, and each branch output is a 1x1 convolution
of its stream concatenated with the shared stream plus a residual from the
gated map. The two branch outputs are concatenated along channels.
"""

import torch
import torch.nn as nn

from .errors import ConfigError


class DepthwiseSeparableConv(nn.Module):
    """Depthwise 3x3 followed by pointwise 1x1, no nonlinearity inside."""

    def __init__(self, channels: int):
        super().__init__()
        self.depthwise = nn.Conv2d(channels, channels, 3, padding=1, groups=channels)
        self.pointwise = nn.Conv2d(channels, channels, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.pointwise(self.depthwise(x))


class DeepFeatureWeightedFusion(nn.Module):
    """Fuse two same-shape feature maps into one with doubled channels."""

    def __init__(self, channels: int):
        super().__init__()
        self.channels = channels
        self.conv_first = DepthwiseSeparableConv(channels)
        self.conv_second = DepthwiseSeparableConv(channels)
        self.conv_shared = DepthwiseSeparableConv(channels)
        self.out_first = nn.Conv2d(2 * channels, channels, 1)
        self.out_second = nn.Conv2d(2 * channels, channels, 1)

    def forward(self, first: torch.Tensor, second: torch.Tensor) -> torch.Tensor:
        squeeze = first.dim() == 3
        if squeeze:
            first = first.unsqueeze(0)
            second = second.unsqueeze(0)
        if first.shape != second.shape:
            raise ConfigError(
                f"branch shapes differ: {tuple(first.shape)} vs {tuple(second.shape)}"
            )
        if first.shape[1] != self.channels:
            raise ConfigError(
                f"inputs have {first.shape[1]} channels, module expects {self.channels}"
            )
        gate_first = torch.sigmoid(first.mean(dim=(2, 3)))[:, :, None, None]
        gate_second = torch.sigmoid(second.amax(dim=(2, 3)))[:, :, None, None]
        gated_first = first * gate_first
        gated_second = second * gate_second
        shared = gated_first + gated_second

        d1 = self.conv_first(gated_first)
        d2 = self.conv_second(gated_second)
        d3 = self.conv_shared(shared)

        c1 = torch.relu(self.out_first(torch.cat([d1, d3], dim=1)) + gated_first)
        c2 = torch.relu(self.out_second(torch.cat([d2, d3], dim=1)) + gated_second)
        out = torch.cat([c1, c2], dim=1)
        return out.squeeze(0) if squeeze else out
