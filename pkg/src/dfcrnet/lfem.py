"""Local feature enhancement: spatial attention from the key semantic set.

The feature map is flattened to N x C, both the flattened features and the
semantic set columns are projected into a shared width, their inner products
are averaged over the semantic axis, and a softmax over the N spatial
positions yields attention coefficients that sum to 1. The attended map is
added back to the input through a residual connection.
"""

import torch
import torch.nn as nn

from .errors import ConfigError


class LocalFeatureEnhancement(nn.Module):
    """Attention over spatial positions driven by semantic reconstruction.

    Args:
        channels: channel width C of the enhanced feature map.
        semantic_dim: dimension d of the semantic set columns.
        proj_dim: shared projection width for both inputs.
    """

    def __init__(self, channels: int, semantic_dim: int, proj_dim: int):
        super().__init__()
        self.channels = channels
        self.semantic_dim = semantic_dim
        self.fc_features = nn.Linear(channels, proj_dim)
        self.fc_semantic = nn.Linear(semantic_dim, proj_dim)

    def forward(
        self, features: torch.Tensor, semantic_set: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Enhance features [B, C, H, W] with semantic_set [B, d, K].

        Returns (output [B, C, H, W], attention [B, N]) where N = H * W and
        each attention row sums to 1.
        """
        squeeze = features.dim() == 3
        if squeeze:
            features = features.unsqueeze(0)
            semantic_set = semantic_set.unsqueeze(0)
        b, c, h, w = features.shape
        if c != self.channels:
            raise ConfigError(f"feature map has {c} channels, expected {self.channels}")
        if semantic_set.shape[1] != self.semantic_dim:
            raise ConfigError(
                f"semantic set has dimension {semantic_set.shape[1]}, "
                f"expected {self.semantic_dim}"
            )
        flat = features.flatten(2).transpose(1, 2)  # [B, N, C]
        proj_f = self.fc_features(flat)  # [B, N, C']
        proj_z = self.fc_semantic(semantic_set.transpose(1, 2))  # [B, K, C']
        scores = proj_f @ proj_z.transpose(1, 2)  # [B, N, K]
        contribution = scores.mean(dim=2)  # one value per spatial position
        attention = torch.softmax(contribution, dim=1)  # [B, N]
        out = features + attention.reshape(b, 1, h, w) * features
        if squeeze:
            return out.squeeze(0), attention.squeeze(0)
        return out, attention
