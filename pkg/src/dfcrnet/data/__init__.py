from .manifest import (
    DatasetManifest,
    ManifestEntry,
    load_split_arrays,
    split_dataset,
    tile_image,
)
from .mbt import MbtTile, load_mbt, read_mbt, save_mbt, write_mbt
from .synthetic import (
    BANDS,
    CLASS_NAMES,
    DEFAULT_CLASS_COUNTS,
    band_means,
    generate_synthetic,
    linear_probe_oa,
    make_tile,
)

__all__ = [
    "BANDS",
    "CLASS_NAMES",
    "DEFAULT_CLASS_COUNTS",
    "DatasetManifest",
    "ManifestEntry",
    "MbtTile",
    "band_means",
    "generate_synthetic",
    "linear_probe_oa",
    "load_mbt",
    "load_split_arrays",
    "make_tile",
    "read_mbt",
    "save_mbt",
    "split_dataset",
    "tile_image",
    "write_mbt",
]
