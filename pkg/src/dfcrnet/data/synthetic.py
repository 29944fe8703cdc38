"""Synthetic 9-band scene generator with per-class spectral signatures.

Bands, in order: R, G, B, NIR, SAR backscatter, DEM, slope, aspect, hillshade.
Classes, in label order: mine, tree cover, cropland, water. Each class gets a
distinct band-mean signature plus characteristic spatial structure:

    mine      bare-soil optics, high-variance SAR speckle, disturbed DEM/slope
    tree      high NIR, blobby canopy texture, moderate SAR
    cropland  periodic row stripes across the optical bands, low slope
    water     very low NIR, smooth low SAR, flat DEM, near-zero slope

Band means are separated far beyond the per-tile jitter, so a linear
classifier on the 9 band means alone separates the classes; this is checked
by the linear-probe sanity gate before any deep model trains on the data.
"""

from pathlib import Path

import numpy as np

from .manifest import DatasetManifest, ManifestEntry
from .mbt import MbtTile, save_mbt

CLASS_NAMES = ("mine", "tree_cover", "cropland", "water")

# Default per-class tile counts in the 4-class proportions 672:800:204:869.
DEFAULT_CLASS_COUNTS = (672, 800, 204, 869)

BANDS = ("R", "G", "B", "NIR", "SAR", "DEM", "slope", "aspect", "hillshade")

# Per-class base band means; rows follow CLASS_NAMES, columns follow BANDS.
_BASE_MEANS = np.array(
    [
        [0.55, 0.50, 0.45, 0.30, 0.55, 0.50, 0.55, 0.50, 0.60],  # mine
        [0.15, 0.35, 0.12, 0.80, 0.45, 0.60, 0.35, 0.50, 0.45],  # tree cover
        [0.35, 0.50, 0.25, 0.60, 0.30, 0.35, 0.10, 0.45, 0.50],  # cropland
        [0.22, 0.30, 0.38, 0.05, 0.10, 0.20, 0.02, 0.50, 0.50],  # water
    ],
    dtype=np.float64,
)

_TILE_JITTER = 0.02  # std of the per-tile band-mean offset
_PIXEL_NOISE = 0.03  # std of independent per-pixel noise on every band


def _smooth_noise(rng: np.random.Generator, size: int, cells: int, amp: float) -> np.ndarray:
    """Blobby zero-mean field: coarse noise upsampled to the tile size."""
    cells = max(1, min(cells, size))
    coarse = rng.normal(0.0, amp, size=(cells, cells))
    reps = int(np.ceil(size / cells))
    field = np.kron(coarse, np.ones((reps, reps)))[:size, :size]
    return field - field.mean()


def _stripes(rng: np.random.Generator, size: int, amp: float) -> np.ndarray:
    """Periodic row texture with a random orientation and phase."""
    freq = rng.uniform(2.0, 4.0)
    theta = rng.uniform(0.0, np.pi)
    phase = rng.uniform(0.0, 2 * np.pi)
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    coord = (xx * np.cos(theta) + yy * np.sin(theta)) / size
    return amp * np.sin(2 * np.pi * freq * coord + phase)


def make_tile(label: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """One [9, size, size] float32 tile for the given class label."""
    base = _BASE_MEANS[label]
    tile = np.empty((9, size, size), dtype=np.float64)
    offsets = rng.normal(0.0, _TILE_JITTER, size=9)
    for b in range(9):
        tile[b] = base[b] + offsets[b]
    tile += rng.normal(0.0, _PIXEL_NOISE, size=tile.shape)

    if label == 0:  # mine: SAR speckle, disturbed terrain
        tile[4] += rng.normal(0.0, 0.20, size=(size, size))
        bumps = _smooth_noise(rng, size, size // 4, 0.12)
        tile[5] += bumps
        tile[6] += np.abs(_smooth_noise(rng, size, size // 4, 0.15))
        tile[8] += _smooth_noise(rng, size, size // 2, 0.10)
    elif label == 1:  # tree cover: canopy blobs in the vegetation bands
        canopy = _smooth_noise(rng, size, size // 3, 0.08)
        tile[3] += canopy
        tile[1] += 0.5 * canopy
        tile[4] += rng.normal(0.0, 0.06, size=(size, size))
    elif label == 2:  # cropland: periodic planting rows
        rows = _stripes(rng, size, 0.10)
        for b in (0, 1, 3):
            tile[b] += rows
        tile[4] += 0.5 * rows
    else:  # water: smooth everywhere
        tile[4] += rng.normal(0.0, 0.01, size=(size, size))
        tile[5] = base[5] + offsets[5] + rng.normal(0.0, 0.002, size=(size, size))
        tile[6] = np.abs(tile[6] * 0.05)
    return tile.astype(np.float32)


def generate_synthetic(
    counts,
    size: int,
    seed: int,
    out_dir: str | Path,
    class_names=CLASS_NAMES,
) -> DatasetManifest:
    """Write counts[k] tiles per class under out_dir and return the manifest.

    Tile files land in out_dir/tiles/ with paths stored relative to out_dir.
    Deterministic for a given seed: the same call produces byte-identical
    tiles. Entries start unsplit (all "train"); apply split_dataset after.
    """
    counts = list(counts)
    if len(counts) != len(class_names):
        raise ValueError(
            f"got {len(counts)} counts for {len(class_names)} classes"
        )
    out_dir = Path(out_dir)
    tile_dir = out_dir / "tiles"
    tile_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    manifest = DatasetManifest(
        class_names=list(class_names),
        seed=seed,
        generator={"counts": counts, "size": size, "bands": list(BANDS)},
    )
    for label, n in enumerate(counts):
        for i in range(n):
            data = make_tile(label, size, rng)
            rel = f"tiles/{class_names[label]}_{i:05d}.mbt"
            save_mbt(MbtTile(data=data, label=label), out_dir / rel)
            manifest.entries.append(ManifestEntry(path=rel, label=label))
    manifest.save(out_dir / "manifest.json")
    manifest.root = out_dir
    return manifest


def band_means(images: np.ndarray) -> np.ndarray:
    """Per-tile mean of each band: [N, bands, H, W] -> [N, bands]."""
    return images.mean(axis=(2, 3))


def linear_probe_oa(
    train_features: np.ndarray,
    train_labels: np.ndarray,
    eval_features: np.ndarray,
    eval_labels: np.ndarray,
    ridge: float = 1e-6,
) -> float:
    """Overall accuracy of a closed-form linear classifier on band means.

    Fits ridge least squares from features (plus a bias column) to one-hot
    targets and predicts by argmax. Used as the data-separability sanity gate.
    """
    n, d = train_features.shape
    k = int(train_labels.max()) + 1
    a = np.hstack([train_features, np.ones((n, 1))])
    targets = np.eye(k)[train_labels]
    gram = a.T @ a + ridge * np.eye(d + 1)
    weights = np.linalg.solve(gram, a.T @ targets)
    eval_a = np.hstack([eval_features, np.ones((eval_features.shape[0], 1))])
    predictions = (eval_a @ weights).argmax(axis=1)
    return float((predictions == eval_labels).mean())
