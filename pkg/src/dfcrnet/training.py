"""Training and evaluation loops for one model on one data manifest."""

import random
import time
from dataclasses import dataclass, field

import numpy as np
import torch

from .checkpoint import save_checkpoint
from .config import ExperimentConfig, config_hash
from .data.manifest import DatasetManifest, load_split_arrays
from .errors import NumericError
from .metrics import ConfusionMatrix, MetricsReport, compute_metrics
from .model import DFCRNet, predict, total_loss


def set_determinism(seed: int, deterministic: bool = False) -> None:
    """Seed every RNG in play; deterministic mode also pins torch algorithms."""
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    if deterministic:
        torch.use_deterministic_algorithms(True)
        torch.set_num_threads(1)


@dataclass
class BandStats:
    mean: list[float]
    std: list[float]

    def apply(self, images: np.ndarray) -> np.ndarray:
        mean = np.asarray(self.mean, dtype=np.float32)[None, :, None, None]
        std = np.asarray(self.std, dtype=np.float32)[None, :, None, None]
        return (images - mean) / std


def band_stats(images: np.ndarray) -> BandStats:
    """Per-band mean and std over the training images, floored away from 0."""
    mean = images.mean(axis=(0, 2, 3))
    std = np.maximum(images.std(axis=(0, 2, 3)), 1e-6)
    return BandStats(mean=[float(m) for m in mean], std=[float(s) for s in std])


@dataclass
class TrainHistory:
    epochs: list[int] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    val_oa: list[float] = field(default_factory=list)

    def append(self, epoch: int, loss: float, oa: float) -> None:
        self.epochs.append(epoch)
        self.train_loss.append(loss)
        self.val_oa.append(oa)


@dataclass
class TrainOutcome:
    model: DFCRNet
    stats: BandStats
    history: TrainHistory
    best_val_oa: float
    best_epoch: int
    steps: int
    val_report: MetricsReport
    test_report: MetricsReport
    wall_time_s: float
    initial_train_loss: float
    final_train_loss: float


def split_loss(
    model: DFCRNet,
    images: np.ndarray,
    labels: np.ndarray,
    alpha: float,
    batch_size: int = 64,
) -> float:
    """Sample-weighted mean of the training objective over one split, eval mode."""
    model.eval()
    total = 0.0
    with torch.no_grad():
        for start in range(0, len(images), batch_size):
            batch_x = torch.from_numpy(images[start : start + batch_size])
            batch_y = torch.from_numpy(labels[start : start + batch_size])
            loss = total_loss(model(batch_x), batch_y, alpha)
            total += float(loss) * len(batch_y)
    return total / len(images)


def evaluate_model(
    model: DFCRNet,
    images: np.ndarray,
    labels: np.ndarray,
    batch_size: int = 64,
) -> MetricsReport:
    """Side-effect-free evaluation of one split into a metrics report."""
    model.eval()
    k = model.cfg.num_classes
    cm = ConfusionMatrix.empty(k)
    with torch.no_grad():
        for start in range(0, len(images), batch_size):
            batch = torch.from_numpy(images[start : start + batch_size])
            out = model(batch)
            cm.accumulate(labels[start : start + batch_size], predict(out).numpy())
    return compute_metrics(cm)


def train_model(
    config: ExperimentConfig,
    seed: int,
    manifest: DatasetManifest,
) -> TrainOutcome:
    """Train one model on the manifest's train split, tracking best val OA.

    Deterministic for a given seed in deterministic mode. The best-validation
    weights are restored before the final val/test evaluation.
    """
    start_time = time.time()
    set_determinism(seed, config.deterministic)

    train_x, train_y = load_split_arrays(manifest, "train")
    val_x, val_y = load_split_arrays(manifest, "val")
    test_x, test_y = load_split_arrays(manifest, "test")
    stats = band_stats(train_x)
    train_x = stats.apply(train_x)
    val_x = stats.apply(val_x)
    test_x = stats.apply(test_x)

    model = DFCRNet(config.model)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.optim.lr)
    labels_t = torch.from_numpy(train_y)
    images_t = torch.from_numpy(train_x)
    alpha = config.model.alpha

    shuffler = torch.Generator().manual_seed(seed)
    batch = config.optim.batch_size
    history = TrainHistory()
    best_oa = -1.0
    best_epoch = -1
    best_state = None
    steps = 0
    initial_train_loss = split_loss(model, train_x, train_y, alpha, batch)

    for epoch in range(config.optim.epochs):
        model.train()
        order = torch.randperm(len(images_t), generator=shuffler)
        epoch_losses = []
        for start in range(0, len(order), batch):
            idx = order[start : start + batch]
            out = model(images_t[idx])
            loss = total_loss(out, labels_t[idx], alpha)
            if not torch.isfinite(loss):
                raise NumericError(
                    f"non-finite loss at epoch {epoch}, step {steps}"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            steps += 1
            epoch_losses.append(float(loss.detach()))
        val_report = evaluate_model(model, val_x, val_y, batch)
        history.append(epoch, float(np.mean(epoch_losses)), val_report.oa)
        if val_report.oa > best_oa:
            best_oa = val_report.oa
            best_epoch = epoch
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
        target = config.optim.early_stop_oa
        if target is not None and val_report.oa >= target:
            break

    final_train_loss = split_loss(model, train_x, train_y, alpha, batch)
    if best_state is not None:
        model.load_state_dict(best_state)
    val_report = evaluate_model(model, val_x, val_y, batch)
    test_report = evaluate_model(model, test_x, test_y, batch)
    return TrainOutcome(
        model=model,
        stats=stats,
        history=history,
        best_val_oa=best_oa,
        best_epoch=best_epoch,
        steps=steps,
        val_report=val_report,
        test_report=test_report,
        wall_time_s=time.time() - start_time,
        initial_train_loss=initial_train_loss,
        final_train_loss=final_train_loss,
    )


def save_outcome_checkpoint(
    path, outcome: TrainOutcome, config: ExperimentConfig, seed: int
) -> None:
    save_checkpoint(
        path,
        outcome.model.state_dict(),
        config=config.to_dict(),
        seed=seed,
        step=outcome.steps,
        epoch=outcome.best_epoch,
        extra={
            "config_hash": config_hash(config),
            "band_mean": outcome.stats.mean,
            "band_std": outcome.stats.std,
            "best_val_oa": outcome.best_val_oa,
        },
    )
