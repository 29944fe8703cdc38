"""Dual-branch global-local collaborative representation network.

Library layout follows the architecture: gcam (channel attention),
transformer (global branch), cdlm (collaborative dictionary), lfem (local
enhancement), cnn_branch (local branch), dfwfm (branch fusion), model (full
assembly), attention (drop-in comparison blocks), metrics, data (MBT format,
synthetic generator, splits), and the experiment harness (config, training,
experiments, report, cli).
"""

from .attention import (
    ATTENTION_VARIANTS,
    ConvBlockAttention,
    EfficientChannelAttention,
    SqueezeExcitation,
    build_attention,
    eca_kernel_size,
)
from .cdlm import CollaborativeDictionary, normalized_reconstruction_loss
from .cnn_branch import CnnBackbone, CnnBranch, CnnConfig, FeatureUnifier
from .dfwfm import DeepFeatureWeightedFusion, DepthwiseSeparableConv
from .errors import (
    ConfigError,
    MbtFormatError,
    MbtTruncationError,
    NumericError,
    ShapeError,
)
from .gcam import GlobalChannelAttention
from .lfem import LocalFeatureEnhancement
from .metrics import ConfusionMatrix, MetricsReport, compute_metrics
from .model import DFCRNet, ModelConfig, ModelOutput, predict, total_loss
from .transformer import (
    BackboneConfig,
    PyramidBackbone,
    PyramidFusion,
    TransformerBranch,
    TransformerBranchConfig,
)

__version__ = "0.1.0"

__all__ = [
    "ATTENTION_VARIANTS",
    "BackboneConfig",
    "CnnBackbone",
    "CnnBranch",
    "CnnConfig",
    "CollaborativeDictionary",
    "ConfigError",
    "ConfusionMatrix",
    "ConvBlockAttention",
    "DFCRNet",
    "DeepFeatureWeightedFusion",
    "DepthwiseSeparableConv",
    "EfficientChannelAttention",
    "FeatureUnifier",
    "GlobalChannelAttention",
    "LocalFeatureEnhancement",
    "MbtFormatError",
    "MbtTruncationError",
    "MetricsReport",
    "ModelConfig",
    "ModelOutput",
    "NumericError",
    "PyramidBackbone",
    "PyramidFusion",
    "ShapeError",
    "SqueezeExcitation",
    "TransformerBranch",
    "TransformerBranchConfig",
    "build_attention",
    "compute_metrics",
    "eca_kernel_size",
    "normalized_reconstruction_loss",
    "predict",
    "total_loss",
]
