"""Multi-seed experiment orchestration: repeats, ablation, attention comparison."""

import copy
import time
from dataclasses import dataclass, field

import numpy as np
import torch

from .config import ExperimentConfig, config_hash
from .data.manifest import DatasetManifest
from .metrics import MetricsReport
from .model import DFCRNet
from .training import TrainOutcome, train_model

AGGREGATED_METRICS = ("oa", "macro_precision", "macro_recall", "macro_f1", "kappa")

# The six toggle rows of the module ablation, in presentation order:
# (gcam, cdlm_lfem, dfwfm).
ABLATION_ROWS = (
    (False, False, False),
    (True, False, False),
    (False, True, False),
    (False, False, True),
    (True, True, False),
    (True, True, True),
)


@dataclass
class RunReport:
    """Per-seed metrics plus mean/std aggregates for one configuration."""

    config_hash: str
    seeds: list[int]
    per_seed: list[dict]  # test-split MetricsReport dicts, one per seed
    aggregate: dict  # metric -> {"mean": float, "std": float | None}
    wall_time_s: float | None

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "seeds": self.seeds,
            "per_seed": self.per_seed,
            "aggregate": self.aggregate,
            "wall_time_s": self.wall_time_s,
        }


def aggregate_metrics(reports: list[MetricsReport]) -> dict:
    """Mean and sample std per metric; std omitted below two seeds."""
    out = {}
    for name in AGGREGATED_METRICS:
        values = [getattr(r, name) for r in reports]
        entry = {"mean": float(np.mean(values))}
        entry["std"] = float(np.std(values, ddof=1)) if len(values) >= 2 else None
        out[name] = entry
    return out


def run_multi_seed(
    config: ExperimentConfig,
    manifest: DatasetManifest,
    seeds=None,
) -> tuple[RunReport, list[TrainOutcome]]:
    """Train once per seed and aggregate the test-split metrics."""
    seeds = list(config.seeds if seeds is None else seeds)
    start = time.time()
    outcomes = []
    for seed in seeds:
        outcomes.append(train_model(config, seed, manifest))
    reports = [o.test_report for o in outcomes]
    report = RunReport(
        config_hash=config_hash(config),
        seeds=seeds,
        per_seed=[r.to_dict() for r in reports],
        aggregate=aggregate_metrics(reports),
        wall_time_s=None if config.deterministic else time.time() - start,
    )
    return report, outcomes


def _with_toggles(config: ExperimentConfig, gcam: bool, cdlm_lfem: bool, dfwfm: bool):
    variant = copy.deepcopy(config)
    variant.model.use_gcam = gcam
    variant.model.use_cdlm_lfem = cdlm_lfem
    variant.model.use_dfwfm = dfwfm
    return variant


@dataclass
class AblationResult:
    rows: list[dict] = field(default_factory=list)  # toggles + RunReport dict

    def to_dict(self) -> dict:
        return {"rows": self.rows}


def run_ablation(config: ExperimentConfig, manifest: DatasetManifest) -> AblationResult:
    """Run the six toggle combinations with one shared seed set (paired)."""
    result = AblationResult()
    for gcam, cdlm_lfem, dfwfm in ABLATION_ROWS:
        variant = _with_toggles(config, gcam, cdlm_lfem, dfwfm)
        report, _ = run_multi_seed(variant, manifest)
        result.rows.append(
            {
                "gcam": gcam,
                "cdlm_lfem": cdlm_lfem,
                "dfwfm": dfwfm,
                "report": report.to_dict(),
            }
        )
    return result


@dataclass
class AttentionComparisonResult:
    rows: list[dict] = field(default_factory=list)
    non_attention_parameters: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "non_attention_parameters": self.non_attention_parameters,
        }


def non_attention_parameter_counts(config: ExperimentConfig) -> dict[str, int]:
    """Parameter count of everything outside the swappable attention blocks."""
    counts = {}
    for variant in ("se", "eca", "cbam", "cdlm_lfem"):
        cfg = copy.deepcopy(config)
        cfg.model.attention = variant
        torch.manual_seed(0)
        counts[variant] = DFCRNet(cfg.model).non_attention_parameter_count()
    return counts


def run_attention_comparison(
    config: ExperimentConfig, manifest: DatasetManifest
) -> AttentionComparisonResult:
    """Run the four attention variants under one architecture and seed set."""
    counts = non_attention_parameter_counts(config)
    if len(set(counts.values())) != 1:
        raise AssertionError(
            f"non-attention parameter counts differ across variants: {counts}"
        )
    result = AttentionComparisonResult(non_attention_parameters=counts)
    for variant in ("se", "eca", "cbam", "cdlm_lfem"):
        cfg = copy.deepcopy(config)
        cfg.model.attention = variant
        report, _ = run_multi_seed(cfg, manifest)
        result.rows.append({"attention": variant, "report": report.to_dict()})
    return result
