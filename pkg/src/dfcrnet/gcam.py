"""Global channel attention: pooled statistics through a shared MLP gate.

A feature map is squeezed by global max pooling and global average pooling,
both pooled vectors pass through one shared two-layer MLP, the sum of the two
logits goes through a sigmoid, and the resulting per-channel weights rescale
the input. Weights are strictly inside (0, 1).
"""

import torch
import torch.nn as nn

from .errors import ConfigError


class GlobalChannelAttention(nn.Module):
    """Channel gate driven by both max- and average-pooled statistics.

    Args:
        channels: number of input channels C.
        reduction: hidden width of the shared MLP is C // reduction.
        bias: include bias terms in the MLP layers.
    """

    def __init__(self, channels: int, reduction: int = 16, bias: bool = True):
        super().__init__()
        if channels % reduction != 0:
            raise ConfigError(
                f"channels ({channels}) must be divisible by reduction ({reduction})"
            )
        self.channels = channels
        self.reduction = reduction
        hidden = channels // reduction
        self.fc1 = nn.Linear(channels, hidden, bias=bias)
        self.fc2 = nn.Linear(hidden, channels, bias=bias)

    def _mlp(self, pooled: torch.Tensor) -> torch.Tensor:
        return self.fc2(torch.relu(self.fc1(pooled)))

    def channel_weights(self, features: torch.Tensor) -> torch.Tensor:
        """Sigmoid channel weights in (0, 1), shape [B, C]."""
        if features.dim() != 4:
            features = features.unsqueeze(0)
        if features.shape[1] != self.channels:
            raise ConfigError(
                f"feature map has {features.shape[1]} channels, gate expects {self.channels}"
            )
        avg = features.mean(dim=(2, 3))
        mx = features.amax(dim=(2, 3))
        return torch.sigmoid(self._mlp(mx) + self._mlp(avg))

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        """Rescale features by the channel weights; output shape equals input."""
        squeeze = features.dim() == 3
        if squeeze:
            features = features.unsqueeze(0)
        weights = self.channel_weights(features)
        out = features * weights[:, :, None, None]
        return out.squeeze(0) if squeeze else out
