"""Multi-scale global branch: windowed self-attention backbone plus fusion.

A patch embedding followed by four stages of windowed transformer blocks with
patch merging in between produces a pyramid F1..F4 (spatial halving, channel
doubling). The fusion walks the pyramid bottom-up: the running fused map is
downsampled and channel-projected to the next stage, channel-attention weights
computed from that carrier rescale the stage's own map, and the carrier is
added back. The result is one global feature map at the coarsest scale.
"""

from dataclasses import dataclass, field

import torch
import torch.nn as nn

from .errors import ConfigError, ShapeError
from .gcam import GlobalChannelAttention


@dataclass
class BackboneConfig:
    """Every knob of the hierarchical attention backbone.

    Input height and width must be divisible by patch_size * 8 so all four
    stages have integral spatial sizes. Window sizes larger than a stage's
    resolution are clamped to it.
    """

    in_channels: int = 9
    patch_size: int = 4
    base_dim: int = 32
    depths: tuple[int, int, int, int] = (2, 2, 2, 2)
    window_size: int = 4
    num_heads: tuple[int, int, int, int] = (2, 4, 8, 16)
    mlp_ratio: float = 4.0

    def stage_dims(self) -> tuple[int, int, int, int]:
        return tuple(self.base_dim * (2**i) for i in range(4))


def window_partition(x: torch.Tensor, window: int) -> torch.Tensor:
    """[B, H, W, C] -> [B * nWindows, window*window, C]."""
    b, h, w, c = x.shape
    x = x.view(b, h // window, window, w // window, window, c)
    return x.permute(0, 1, 3, 2, 4, 5).reshape(-1, window * window, c)


def window_reverse(windows: torch.Tensor, window: int, h: int, w: int) -> torch.Tensor:
    """Inverse of window_partition back to [B, H, W, C]."""
    c = windows.shape[-1]
    b = windows.shape[0] // ((h // window) * (w // window))
    x = windows.view(b, h // window, w // window, window, window, c)
    return x.permute(0, 1, 3, 2, 4, 5).reshape(b, h, w, c)


class WindowAttention(nn.Module):
    def __init__(self, dim: int, num_heads: int):
        super().__init__()
        if dim % num_heads != 0:
            raise ConfigError(f"dim {dim} not divisible by num_heads {num_heads}")
        self.num_heads = num_heads
        self.scale = (dim // num_heads) ** -0.5
        self.qkv = nn.Linear(dim, dim * 3)
        self.proj = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, n, c = x.shape
        qkv = (
            self.qkv(x)
            .reshape(b, n, 3, self.num_heads, c // self.num_heads)
            .permute(2, 0, 3, 1, 4)
        )
        q, k, v = qkv.unbind(0)
        attn = torch.softmax((q @ k.transpose(-2, -1)) * self.scale, dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, n, c)
        return self.proj(out)


class TransformerBlock(nn.Module):
    """Pre-norm windowed attention plus an MLP, both with residuals."""

    def __init__(self, dim: int, num_heads: int, window: int, mlp_ratio: float):
        super().__init__()
        self.window = window
        self.norm1 = nn.LayerNorm(dim)
        self.attn = WindowAttention(dim, num_heads)
        self.norm2 = nn.LayerNorm(dim)
        hidden = max(1, int(dim * mlp_ratio))
        self.mlp = nn.Sequential(
            nn.Linear(dim, hidden), nn.GELU(), nn.Linear(hidden, dim)
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        # x: [B, H, W, C]
        b, h, w, c = x.shape
        win = min(self.window, h, w)
        if h % win != 0 or w % win != 0:
            raise ShapeError(
                f"stage resolution {h}x{w} not divisible by window size {win}"
            )
        shortcut = x
        windows = window_partition(self.norm1(x), win)
        x = shortcut + window_reverse(self.attn(windows), win, h, w)
        return x + self.mlp(self.norm2(x))


class PatchMerging(nn.Module):
    """Concatenate 2x2 neighborhoods and project 4C -> 2C."""

    def __init__(self, dim: int):
        super().__init__()
        self.norm = nn.LayerNorm(4 * dim)
        self.reduce = nn.Linear(4 * dim, 2 * dim, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, h, w, c = x.shape
        x = x.view(b, h // 2, 2, w // 2, 2, c).permute(0, 1, 3, 2, 4, 5)
        x = x.reshape(b, h // 2, w // 2, 4 * c)
        return self.reduce(self.norm(x))


class PyramidBackbone(nn.Module):
    """Four-stage windowed-attention backbone emitting the feature pyramid."""

    def __init__(self, cfg: BackboneConfig):
        super().__init__()
        self.cfg = cfg
        dims = cfg.stage_dims()
        self.patch_embed = nn.Conv2d(
            cfg.in_channels, dims[0], cfg.patch_size, stride=cfg.patch_size
        )
        self.embed_norm = nn.LayerNorm(dims[0])
        self.stages = nn.ModuleList(
            nn.ModuleList(
                TransformerBlock(dims[i], cfg.num_heads[i], cfg.window_size, cfg.mlp_ratio)
                for _ in range(cfg.depths[i])
            )
            for i in range(4)
        )
        self.merges = nn.ModuleList(PatchMerging(dims[i]) for i in range(3))

    def forward(self, image: torch.Tensor) -> list[torch.Tensor]:
        """Image [B, in_channels, H, W] -> [F1..F4], channels-first."""
        if image.dim() != 4:
            raise ShapeError(f"expected a batched [B, C, H, W] image, got {image.dim()}D")
        h, w = image.shape[2], image.shape[3]
        multiple = self.cfg.patch_size * 8
        if h % multiple != 0 or w % multiple != 0:
            raise ShapeError(
                f"input spatial size {h}x{w} must be a multiple of "
                f"patch_size * 8 = {multiple}"
            )
        if image.shape[1] != self.cfg.in_channels:
            raise ConfigError(
                f"image has {image.shape[1]} bands, backbone expects {self.cfg.in_channels}"
            )
        x = self.patch_embed(image).permute(0, 2, 3, 1)  # [B, H', W', C1]
        x = self.embed_norm(x)
        pyramid = []
        for i in range(4):
            for block in self.stages[i]:
                x = block(x)
            pyramid.append(x.permute(0, 3, 1, 2))
            if i < 3:
                x = self.merges[i](x)
        return pyramid


class PyramidFusion(nn.Module):
    """Bottom-up fusion of a feature pyramid with per-stage channel attention.

    Stage 1 seeds the recursion with attention applied to the finest map
    itself; every later stage pools the running fusion 2x2, projects it to the
    stage width, uses it to compute the channel weights for the stage's own
    map, and adds it back as a carrier. With use_attention=False the weighting
    is skipped and each stage reduces to map + carrier (ablation pass-through).
    """

    def __init__(
        self,
        stage_channels: tuple[int, ...] | list[int],
        reduction: int = 16,
        use_attention: bool = True,
    ):
        super().__init__()
        self.stage_channels = tuple(stage_channels)
        self.use_attention = use_attention
        self.gates = nn.ModuleList(
            GlobalChannelAttention(c, reduction) for c in self.stage_channels
        )
        self.pool = nn.AvgPool2d(2, stride=2)
        self.projections = nn.ModuleList(
            nn.Conv2d(self.stage_channels[i - 1], self.stage_channels[i], 1)
            for i in range(1, len(self.stage_channels))
        )

    def forward(self, pyramid: list[torch.Tensor]) -> torch.Tensor:
        if len(pyramid) != len(self.stage_channels):
            raise ConfigError(
                f"pyramid has {len(pyramid)} stages, fusion built for "
                f"{len(self.stage_channels)}"
            )
        for level, expected in zip(pyramid, self.stage_channels):
            if level.shape[1] != expected:
                raise ConfigError(
                    f"stage with {level.shape[1]} channels does not match the "
                    f"configured width {expected}"
                )
        if self.use_attention:
            fused = self.gates[0](pyramid[0])
        else:
            fused = pyramid[0]
        for i in range(1, len(pyramid)):
            carrier = self.projections[i - 1](self.pool(fused))
            if self.use_attention:
                weights = self.gates[i].channel_weights(carrier)
                attended = pyramid[i] * weights[:, :, None, None]
            else:
                attended = pyramid[i]
            fused = attended + carrier
        return fused


@dataclass
class TransformerBranchConfig:
    backbone: BackboneConfig = field(default_factory=BackboneConfig)
    gcam_reduction: int = 16
    use_gcam: bool = True


class TransformerBranch(nn.Module):
    """Backbone plus pyramid fusion; returns both the pyramid and the fusion."""

    def __init__(self, cfg: TransformerBranchConfig):
        super().__init__()
        self.backbone = PyramidBackbone(cfg.backbone)
        self.fusion = PyramidFusion(
            cfg.backbone.stage_dims(), cfg.gcam_reduction, cfg.use_gcam
        )

    def forward(self, image: torch.Tensor) -> tuple[list[torch.Tensor], torch.Tensor]:
        pyramid = self.backbone(image)
        return pyramid, self.fusion(pyramid)
