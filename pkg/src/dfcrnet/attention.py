"""Drop-in channel/spatial attention blocks for the comparison experiments.

SE, ECA, and CBAM in their standard formulations, all shape-preserving, all
with gate values strictly in (0, 1). Each can replace the dictionary-driven
local enhancement at the per-layer call sites of the CNN branch.
"""

import math

import torch
import torch.nn as nn

from .errors import ConfigError
from .gcam import GlobalChannelAttention

ATTENTION_VARIANTS = ("se", "eca", "cbam", "cdlm_lfem")


class SqueezeExcitation(nn.Module):
    """Average-pooled squeeze, two-layer excitation, sigmoid channel scale."""

    def __init__(self, channels: int, reduction: int = 16):
        super().__init__()
        if channels % reduction != 0:
            raise ConfigError(
                f"channels ({channels}) must be divisible by reduction ({reduction})"
            )
        self.channels = channels
        self.fc1 = nn.Linear(channels, channels // reduction)
        self.fc2 = nn.Linear(channels // reduction, channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        squeeze = x.dim() == 3
        if squeeze:
            x = x.unsqueeze(0)
        pooled = x.mean(dim=(2, 3))
        weights = torch.sigmoid(self.fc2(torch.relu(self.fc1(pooled))))
        out = x * weights[:, :, None, None]
        return out.squeeze(0) if squeeze else out


def eca_kernel_size(channels: int) -> int:
    """Default odd kernel for the channel count, t = |log2(C) + 1| / 2 bumped to odd."""
    t = int(abs(math.log2(channels) + 1.0) / 2.0)
    return t if t % 2 == 1 else t + 1


class EfficientChannelAttention(nn.Module):
    """Channel gate from a 1-D convolution over the pooled channel vector."""

    def __init__(self, channels: int, kernel_size: int | None = None):
        super().__init__()
        if kernel_size is None:
            kernel_size = eca_kernel_size(channels)
        if kernel_size % 2 == 0:
            raise ConfigError(f"kernel size must be odd, got {kernel_size}")
        self.channels = channels
        self.kernel_size = kernel_size
        self.conv = nn.Conv1d(1, 1, kernel_size, padding=kernel_size // 2, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        squeeze = x.dim() == 3
        if squeeze:
            x = x.unsqueeze(0)
        pooled = x.mean(dim=(2, 3))  # [B, C]
        weights = torch.sigmoid(self.conv(pooled.unsqueeze(1)).squeeze(1))
        out = x * weights[:, :, None, None]
        return out.squeeze(0) if squeeze else out


class ConvBlockAttention(nn.Module):
    """Channel gate (shared-MLP max+avg) followed by a 7x7 spatial gate."""

    def __init__(self, channels: int, reduction: int = 16, spatial_kernel: int = 7):
        super().__init__()
        self.channel_gate = GlobalChannelAttention(channels, reduction)
        self.spatial_conv = nn.Conv2d(2, 1, spatial_kernel, padding=spatial_kernel // 2)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        squeeze = x.dim() == 3
        if squeeze:
            x = x.unsqueeze(0)
        x = self.channel_gate(x)
        avg_map = x.mean(dim=1, keepdim=True)
        max_map = x.amax(dim=1, keepdim=True)
        gate = torch.sigmoid(self.spatial_conv(torch.cat([avg_map, max_map], dim=1)))
        out = x * gate
        return out.squeeze(0) if squeeze else out


def build_attention(variant: str, channels: int, reduction: int = 16) -> nn.Module:
    """Instantiate a zoo block by config key (se, eca, cbam)."""
    if variant == "se":
        return SqueezeExcitation(channels, reduction)
    if variant == "eca":
        return EfficientChannelAttention(channels)
    if variant == "cbam":
        return ConvBlockAttention(channels, reduction)
    raise ConfigError(f"unknown attention variant {variant!r}")
