"""Local branch: residual CNN backbone, feature unification, per-layer attention.

Plain residual stages (two 3x3 convolutions per block, identity shortcuts)
produce one feature map per stage at halving scales. All stage maps are
brought to the final stage's shape (1x1 channel projection, then strided
average pooling), each unified map passes through its own attention block,
and the attended maps are summed into the branch output.
"""

from dataclasses import dataclass

import torch
import torch.nn as nn

from .attention import build_attention
from .errors import ConfigError, ShapeError
from .lfem import LocalFeatureEnhancement


@dataclass
class CnnConfig:
    channels: tuple[int, int, int, int] = (32, 64, 128, 256)
    blocks: tuple[int, int, int, int] = (2, 2, 2, 2)
    stem_stride: int = 2


class ResidualBlock(nn.Module):
    def __init__(self, in_channels: int, out_channels: int, stride: int = 1):
        super().__init__()
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, stride, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(out_channels)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, 1, 1, bias=False)
        self.bn2 = nn.BatchNorm2d(out_channels)
        if stride != 1 or in_channels != out_channels:
            self.shortcut = nn.Sequential(
                nn.Conv2d(in_channels, out_channels, 1, stride, bias=False),
                nn.BatchNorm2d(out_channels),
            )
        else:
            self.shortcut = nn.Identity()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = torch.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return torch.relu(out + self.shortcut(x))


class CnnBackbone(nn.Module):
    """Stem plus four residual stages, each halving the spatial size."""

    def __init__(self, cfg: CnnConfig, in_channels: int = 9):
        super().__init__()
        self.cfg = cfg
        self.in_channels = in_channels
        self.stem = nn.Sequential(
            nn.Conv2d(in_channels, cfg.channels[0], 3, cfg.stem_stride, 1, bias=False),
            nn.BatchNorm2d(cfg.channels[0]),
            nn.ReLU(),
        )
        stages = []
        prev = cfg.channels[0]
        for width, depth in zip(cfg.channels, cfg.blocks):
            blocks = [ResidualBlock(prev, width, stride=2)]
            blocks += [ResidualBlock(width, width) for _ in range(depth - 1)]
            stages.append(nn.Sequential(*blocks))
            prev = width
        self.stages = nn.ModuleList(stages)

    def total_stride(self) -> int:
        return self.cfg.stem_stride * (2 ** len(self.stages))

    def forward(self, image: torch.Tensor) -> list[torch.Tensor]:
        if image.dim() != 4:
            raise ShapeError(f"expected a batched [B, C, H, W] image, got {image.dim()}D")
        stride = self.total_stride()
        if image.shape[2] % stride != 0 or image.shape[3] % stride != 0:
            raise ShapeError(
                f"input spatial size {image.shape[2]}x{image.shape[3]} must be a "
                f"multiple of the cumulative stride {stride}"
            )
        x = self.stem(image)
        features = []
        for stage in self.stages:
            x = stage(x)
            features.append(x)
        return features


class FeatureUnifier(nn.Module):
    """Project every stage map to the last stage's channel width and scale.

    Earlier stages go through a 1x1 channel projection then strided average
    pooling down to the target spatial size; the last stage passes through
    unchanged.
    """

    def __init__(self, channels: tuple[int, ...] | list[int]):
        super().__init__()
        self.channels = tuple(channels)
        target = self.channels[-1]
        self.projections = nn.ModuleList(
            nn.Conv2d(c, target, 1) for c in self.channels[:-1]
        )

    def forward(self, stages: list[torch.Tensor]) -> list[torch.Tensor]:
        if not stages:
            raise ConfigError("stage list is empty")
        if len(stages) != len(self.channels):
            raise ConfigError(
                f"got {len(stages)} stage maps, unifier built for {len(self.channels)}"
            )
        target_h, target_w = stages[-1].shape[2], stages[-1].shape[3]
        unified = []
        for i, fmap in enumerate(stages[:-1]):
            x = self.projections[i](fmap)
            factor = fmap.shape[2] // target_h
            if factor > 1:
                x = nn.functional.avg_pool2d(x, factor, stride=factor)
            unified.append(x)
        unified.append(stages[-1])
        return unified


class CnnBranch(nn.Module):
    """Backbone, unification, per-layer attention, and summed fusion.

    attention selects the per-layer block: "cdlm_lfem" uses the dictionary's
    semantic set through local feature enhancement, "se" / "eca" / "cbam" use
    the corresponding zoo block, and "identity" disables attention entirely
    (the documented ablation pass-through).
    """

    def __init__(
        self,
        cfg: CnnConfig,
        in_channels: int = 9,
        attention: str = "cdlm_lfem",
        semantic_dim: int = 64,
        lfem_proj_dim: int = 64,
        attention_reduction: int = 16,
    ):
        super().__init__()
        self.cfg = cfg
        self.attention = attention
        self.backbone = CnnBackbone(cfg, in_channels)
        self.unifier = FeatureUnifier(cfg.channels)
        width = cfg.channels[-1]
        n_layers = len(cfg.channels)
        if attention == "cdlm_lfem":
            self.attn_blocks = nn.ModuleList(
                LocalFeatureEnhancement(width, semantic_dim, lfem_proj_dim)
                for _ in range(n_layers)
            )
        elif attention == "identity":
            self.attn_blocks = nn.ModuleList(nn.Identity() for _ in range(n_layers))
        else:
            self.attn_blocks = nn.ModuleList(
                build_attention(attention, width, attention_reduction)
                for _ in range(n_layers)
            )

    def forward(
        self, image: torch.Tensor, semantic_set: torch.Tensor | None = None
    ) -> tuple[torch.Tensor, list[torch.Tensor]]:
        """Returns (fused map at the final stage's shape, per-layer attention).

        The attention list carries the spatial attention vectors of the
        dictionary-driven blocks; it is empty for the other variants.
        """
        if self.attention == "cdlm_lfem" and semantic_set is None:
            raise ConfigError("cdlm_lfem attention needs the key semantic set")
        stages = self.backbone(image)
        unified = self.unifier(stages)
        fused = None
        attentions = []
        for fmap, block in zip(unified, self.attn_blocks):
            if isinstance(block, LocalFeatureEnhancement):
                attended, attn = block(fmap, semantic_set)
                attentions.append(attn)
            else:
                attended = block(fmap)
            fused = attended if fused is None else fused + attended
        return fused, attentions
