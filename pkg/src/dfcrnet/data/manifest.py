"""Dataset manifest, tiling, and deterministic train/val/test splitting."""

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mbt import load_mbt

SPLITS = ("train", "val", "test")


@dataclass
class ManifestEntry:
    path: str
    label: int
    split: str = "train"


@dataclass
class DatasetManifest:
    class_names: list[str]
    seed: int
    entries: list[ManifestEntry] = field(default_factory=list)
    generator: dict = field(default_factory=dict)
    root: Path | None = None  # directory entry paths are relative to; not serialized

    def to_dict(self) -> dict:
        return {
            "class_names": self.class_names,
            "seed": self.seed,
            "generator": self.generator,
            "entries": [
                {"path": e.path, "label": e.label, "split": e.split}
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        return cls(
            class_names=list(d["class_names"]),
            seed=int(d["seed"]),
            generator=dict(d.get("generator", {})),
            entries=[
                ManifestEntry(e["path"], int(e["label"]), e.get("split", "train"))
                for e in d["entries"]
            ],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        manifest = cls.from_dict(json.loads(Path(path).read_text()))
        manifest.root = Path(path).parent
        return manifest

    def split_entries(self, split: str) -> list[ManifestEntry]:
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}, expected one of {SPLITS}")
        return [e for e in self.entries if e.split == split]

    def split_counts(self) -> dict[str, int]:
        return {s: len(self.split_entries(s)) for s in SPLITS}


def tile_image(image: np.ndarray, window: int) -> list[np.ndarray]:
    """Cut non-overlapping windows in row-major order, dropping remainders.

    image is [bands, H, W] (or [H, W]); each tile keeps the band axis.
    """
    if window <= 0:
        raise ValueError(f"window must be positive, got {window}")
    squeeze = image.ndim == 2
    if squeeze:
        image = image[None]
    h, w = image.shape[1], image.shape[2]
    if window > h or window > w:
        return []
    tiles = []
    for r in range(0, h - window + 1, window):
        for c in range(0, w - window + 1, window):
            tile = image[:, r : r + window, c : c + window].copy()
            tiles.append(tile[0] if squeeze else tile)
    return tiles


def _allocate(n: int, fractions: tuple[float, float, float]) -> tuple[int, int, int]:
    # Floor each split, then give the remainder to train.
    counts = [int(np.floor(n * f)) for f in fractions]
    counts[0] += n - sum(counts)
    return tuple(counts)


def split_dataset(
    manifest: DatasetManifest,
    fractions: tuple[float, float, float] = (0.6, 0.2, 0.2),
    seed: int = 0,
    stratified: bool = True,
) -> DatasetManifest:
    """Assign train/val/test splits in place and return the manifest.

    Fractions must sum to 1. Stratified mode (the default) applies the
    floor-then-remainder rule per class; otherwise it applies globally.
    Deterministic for a given seed.
    """
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must sum to 1, got {fractions}")
    rng = np.random.default_rng(seed)

    if stratified:
        groups = {}
        for idx, entry in enumerate(manifest.entries):
            groups.setdefault(entry.label, []).append(idx)
        group_lists = [groups[label] for label in sorted(groups)]
    else:
        group_lists = [list(range(len(manifest.entries)))]

    for indices in group_lists:
        if len(indices) < len(SPLITS):
            warnings.warn(
                f"class group with {len(indices)} samples is smaller than the "
                "number of splits; assigning best-effort"
            )
        order = rng.permutation(len(indices))
        shuffled = [indices[i] for i in order]
        n_train, n_val, _ = _allocate(len(shuffled), fractions)
        for pos, idx in enumerate(shuffled):
            if pos < n_train:
                manifest.entries[idx].split = "train"
            elif pos < n_train + n_val:
                manifest.entries[idx].split = "val"
            else:
                manifest.entries[idx].split = "test"
    return manifest


def load_split_arrays(
    manifest: DatasetManifest, split: str, root: str | Path | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Load one split into (images [N, bands, H, W] float32, labels [N] int64)."""
    entries = manifest.split_entries(split)
    if not entries:
        raise ValueError(f"split {split!r} has no entries")
    root = Path(root) if root is not None else manifest.root
    images = []
    labels = []
    for entry in entries:
        path = Path(entry.path)
        if root is not None and not path.is_absolute():
            path = root / path
        images.append(load_mbt(path).data)
        labels.append(entry.label)
    return np.stack(images), np.asarray(labels, dtype=np.int64)
