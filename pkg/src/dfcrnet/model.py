"""Full dual-branch model: assembly, classification head, and multi-loss.

The global branch produces the fused transformer map and a pooled feature
vector that the collaborative dictionary represents; the local branch enhances
its unified stage maps with the dictionary's key semantic set; the weighted
fusion module combines both branch outputs; a pooled linear head emits the
class logits. The training objective is cross-entropy plus a weighted
dictionary reconstruction loss.
"""

from dataclasses import dataclass, field

import torch
import torch.nn as nn

from .cdlm import CollaborativeDictionary
from .cnn_branch import CnnBranch, CnnConfig
from .dfwfm import DeepFeatureWeightedFusion
from .errors import ConfigError, NumericError
from .transformer import BackboneConfig, TransformerBranch, TransformerBranchConfig


@dataclass
class ModelConfig:
    backbone: BackboneConfig = field(default_factory=BackboneConfig)
    cnn: CnnConfig = field(default_factory=CnnConfig)
    num_classes: int = 4
    dict_dim: int = 64
    dict_lambda: float = 0.01
    lfem_proj_dim: int = 64
    fusion_channels: int = 256
    gcam_reduction: int = 16
    attention: str = "cdlm_lfem"
    alpha: float = 1.0
    # Ablation toggles; disabled modules become documented pass-throughs.
    use_gcam: bool = True
    use_cdlm_lfem: bool = True
    use_dfwfm: bool = True

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")

    def effective_attention(self) -> str:
        """Per-layer attention after applying the ablation toggle."""
        if self.attention == "cdlm_lfem" and not self.use_cdlm_lfem:
            return "identity"
        return self.attention


@dataclass
class ModelOutput:
    logits: torch.Tensor  # [B, K]
    dict_loss: torch.Tensor  # scalar, batch mean
    coefficients: torch.Tensor | None = None  # [B, K] dictionary coefficients
    attention_sums: list[torch.Tensor] = field(default_factory=list)  # per layer, [B]
    zero_norm_skips: int = 0


def _guard_finite(tensor: torch.Tensor, stage: str) -> torch.Tensor:
    if not bool(torch.isfinite(tensor).all()):
        raise NumericError(f"non-finite values produced at stage {stage!r}")
    return tensor


class DFCRNet(nn.Module):
    """Dual-branch collaborative-representation classifier."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.transformer = TransformerBranch(
            TransformerBranchConfig(cfg.backbone, cfg.gcam_reduction, cfg.use_gcam)
        )
        attention = cfg.effective_attention()
        self.cnn = CnnBranch(
            cfg.cnn,
            in_channels=cfg.backbone.in_channels,
            attention=attention,
            semantic_dim=cfg.dict_dim,
            lfem_proj_dim=cfg.lfem_proj_dim,
            attention_reduction=cfg.gcam_reduction,
        )
        global_dim = cfg.backbone.stage_dims()[-1]
        if attention == "cdlm_lfem":
            self.feature_proj = nn.Linear(global_dim, cfg.dict_dim)
            self.cdlm = CollaborativeDictionary(
                cfg.dict_dim, cfg.num_classes, cfg.dict_lambda
            )
        else:
            self.feature_proj = None
            self.cdlm = None
        self.proj_global = nn.Conv2d(global_dim, cfg.fusion_channels, 1)
        self.proj_local = nn.Conv2d(cfg.cnn.channels[-1], cfg.fusion_channels, 1)
        self.fusion = (
            DeepFeatureWeightedFusion(cfg.fusion_channels) if cfg.use_dfwfm else None
        )
        self.head = nn.Linear(2 * cfg.fusion_channels, cfg.num_classes)

    def attention_parameter_names(self) -> list[str]:
        """Names of the parameters belonging to the swappable attention parts."""
        prefixes = ("cnn.attn_blocks.", "cdlm.", "feature_proj.")
        return [n for n, _ in self.named_parameters() if n.startswith(prefixes)]

    def non_attention_parameter_count(self) -> int:
        attn = set(self.attention_parameter_names())
        return sum(p.numel() for n, p in self.named_parameters() if n not in attn)

    def forward(self, images: torch.Tensor) -> ModelOutput:
        """Classify a batch of [B, bands, H, W] images."""
        _, global_map = self.transformer(images)
        _guard_finite(global_map, "transformer.fusion")

        coefficients = None
        semantic_set = None
        skips = 0
        if self.cdlm is not None:
            pooled = global_map.mean(dim=(2, 3))
            x = _guard_finite(self.feature_proj(pooled), "feature_projection")
            before = self.cdlm.zero_norm_skips
            coefficients, _, semantic_set, dict_losses = self.cdlm(x)
            skips = self.cdlm.zero_norm_skips - before
            _guard_finite(coefficients, "cdlm.solve")
            dict_loss = dict_losses.mean()
        else:
            dict_loss = images.new_zeros(())

        local_map, attentions = self.cnn(images, semantic_set)
        _guard_finite(local_map, "cnn_branch")

        ft = self.proj_global(global_map)
        fc = self.proj_local(local_map)
        if ft.shape[2:] != fc.shape[2:]:
            raise ConfigError(
                f"branch spatial sizes differ before fusion: {tuple(ft.shape[2:])} "
                f"vs {tuple(fc.shape[2:])}"
            )
        if self.fusion is not None:
            fused = self.fusion(ft, fc)
        else:
            fused = torch.cat([ft, fc], dim=1)  # plain-concat pass-through
        _guard_finite(fused, "fusion")

        logits = self.head(fused.mean(dim=(2, 3)))
        _guard_finite(logits, "head")
        return ModelOutput(
            logits=logits,
            dict_loss=dict_loss,
            coefficients=coefficients,
            attention_sums=[a.sum(dim=1) for a in attentions],
            zero_norm_skips=skips,
        )


def total_loss(
    output: ModelOutput, labels: torch.Tensor, alpha: float
) -> torch.Tensor:
    """Cross-entropy plus alpha times the dictionary loss (batch means)."""
    k = output.logits.shape[-1]
    if labels.numel() and (labels.min() < 0 or labels.max() >= k):
        raise ValueError(f"labels must lie in [0, {k}), got range "
                         f"[{int(labels.min())}, {int(labels.max())}]")
    ce = nn.functional.cross_entropy(output.logits, labels)
    return ce + alpha * output.dict_loss


def predict(output: ModelOutput) -> torch.Tensor:
    """Argmax class per sample; ties break toward the lowest class index."""
    return output.logits.argmax(dim=-1)
