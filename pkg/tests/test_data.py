import json

import numpy as np
import pytest

from dfcrnet import MbtFormatError, MbtTruncationError
from dfcrnet.data import (
    DatasetManifest,
    ManifestEntry,
    MbtTile,
    band_means,
    generate_synthetic,
    linear_probe_oa,
    load_mbt,
    load_split_arrays,
    read_mbt,
    split_dataset,
    tile_image,
    write_mbt,
)


class TestMbtFormat:
    def test_round_trip_bit_identity(self):
        rng = np.random.default_rng(0)
        tile = MbtTile(data=rng.normal(size=(9, 8, 8)).astype(np.float32))
        blob = write_mbt(tile)
        back = read_mbt(blob)
        assert back.data.dtype == np.float32
        assert write_mbt(back) == blob
        np.testing.assert_array_equal(back.data, tile.data)

    def test_fuzzed_round_trips(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            bands = int(rng.integers(1, 12))
            h = int(rng.integers(1, 20))
            w = int(rng.integers(1, 20))
            data = rng.normal(size=(bands, h, w)).astype(np.float32)
            back = read_mbt(write_mbt(MbtTile(data=data)))
            np.testing.assert_array_equal(back.data, data)

    def test_payload_size_for_256_tile(self):
        tile = MbtTile(data=np.zeros((9, 256, 256), dtype=np.float32))
        blob = write_mbt(tile)
        header_size = 4 + 4 + 4 + 4 + 1
        assert len(blob) - header_size == 2_359_296

    def test_bad_magic_rejected(self):
        tile = MbtTile(data=np.zeros((2, 3, 3), dtype=np.float32))
        blob = bytearray(write_mbt(tile))
        blob[:4] = b"MBTX"
        with pytest.raises(MbtFormatError):
            read_mbt(bytes(blob))

    def test_truncated_payload_rejected(self):
        blob = write_mbt(MbtTile(data=np.ones((2, 4, 4), dtype=np.float32)))
        with pytest.raises(MbtTruncationError):
            read_mbt(blob[:-3])
        with pytest.raises(MbtTruncationError):
            read_mbt(blob + b"\x00\x00")

    def test_unknown_dtype_code_rejected(self):
        blob = bytearray(write_mbt(MbtTile(data=np.ones((1, 2, 2), dtype=np.float32))))
        blob[16] = 9
        with pytest.raises(MbtFormatError):
            read_mbt(bytes(blob))

    def test_file_round_trip(self, tmp_path):
        tile = MbtTile(data=np.arange(2 * 3 * 4, dtype=np.float32).reshape(2, 3, 4))
        save_path = tmp_path / "t.mbt"
        from dfcrnet.data import save_mbt

        save_mbt(tile, save_path)
        np.testing.assert_array_equal(load_mbt(save_path).data, tile.data)


class TestTiling:
    def test_four_quadrants_in_row_major_order(self):
        image = np.zeros((1, 512, 512), dtype=np.float32)
        image[0, :256, :256] = 1
        image[0, :256, 256:] = 2
        image[0, 256:, :256] = 3
        image[0, 256:, 256:] = 4
        tiles = tile_image(image, 256)
        assert [t[0, 0, 0] for t in tiles] == [1, 2, 3, 4]

    def test_remainders_discarded(self):
        image = np.zeros((1, 300, 300), dtype=np.float32)
        assert len(tile_image(image, 256)) == 1

    def test_zero_window_rejected(self):
        with pytest.raises(ValueError):
            tile_image(np.zeros((1, 8, 8)), 0)

    def test_concatenated_tiles_reconstruct_covered_region(self):
        rng = np.random.default_rng(2)
        image = rng.normal(size=(3, 10, 14)).astype(np.float32)
        window = 4
        tiles = tile_image(image, window)
        rows, cols = 10 // window, 14 // window
        assert len(tiles) == rows * cols
        stitched = np.zeros((3, rows * window, cols * window), dtype=np.float32)
        for idx, tile in enumerate(tiles):
            r, c = divmod(idx, cols)
            stitched[:, r * window : (r + 1) * window, c * window : (c + 1) * window] = tile
        np.testing.assert_array_equal(stitched, image[:, : rows * window, : cols * window])

    def test_no_pixel_duplicated(self):
        image = np.arange(36, dtype=np.float32).reshape(1, 6, 6)
        tiles = tile_image(image, 3)
        seen = np.concatenate([t.reshape(-1) for t in tiles])
        assert len(np.unique(seen)) == seen.size


def make_manifest(counts, seed=0):
    entries = []
    for label, n in enumerate(counts):
        entries.extend(ManifestEntry(f"t_{label}_{i}.mbt", label) for i in range(n))
    return DatasetManifest(
        class_names=[f"c{k}" for k in range(len(counts))], seed=seed, entries=entries
    )


class TestSplit:
    def test_default_corpus_counts_at_622(self):
        manifest = make_manifest([672, 800, 204, 869])
        split_dataset(manifest, (0.6, 0.2, 0.2), seed=1, stratified=False)
        counts = manifest.split_counts()
        assert counts == {"train": 1527, "val": 509, "test": 509}

    def test_everything_in_train_for_degenerate_fractions(self):
        manifest = make_manifest([10, 10])
        split_dataset(manifest, (1.0, 0.0, 0.0), seed=0)
        assert manifest.split_counts() == {"train": 20, "val": 0, "test": 0}

    def test_stratified_split_preserves_class_ratios(self):
        manifest = make_manifest([100, 50, 30])
        split_dataset(manifest, (0.6, 0.2, 0.2), seed=3, stratified=True)
        for label, n in enumerate([100, 50, 30]):
            per_split = {
                s: sum(1 for e in manifest.entries if e.label == label and e.split == s)
                for s in ("train", "val", "test")
            }
            assert abs(per_split["train"] - 0.6 * n) <= 1
            assert abs(per_split["val"] - 0.2 * n) <= 1
            assert abs(per_split["test"] - 0.2 * n) <= 1

    def test_split_deterministic_given_seed(self):
        a = make_manifest([40, 40])
        b = make_manifest([40, 40])
        split_dataset(a, seed=7)
        split_dataset(b, seed=7)
        assert [e.split for e in a.entries] == [e.split for e in b.entries]
        c = make_manifest([40, 40])
        split_dataset(c, seed=8)
        assert [e.split for e in a.entries] != [e.split for e in c.entries]

    def test_bad_fractions_rejected(self):
        with pytest.raises(ValueError):
            split_dataset(make_manifest([10]), (0.5, 0.2, 0.2))

    def test_tiny_class_warns(self):
        manifest = make_manifest([2, 50])
        with pytest.warns(UserWarning):
            split_dataset(manifest, seed=0, stratified=True)


class TestSyntheticGenerator:
    def test_determinism_byte_for_byte(self, tmp_path):
        m1 = generate_synthetic([3, 3, 3, 3], size=16, seed=42, out_dir=tmp_path / "a")
        m2 = generate_synthetic([3, 3, 3, 3], size=16, seed=42, out_dir=tmp_path / "b")
        for e1, e2 in zip(m1.entries, m2.entries):
            b1 = ((tmp_path / "a") / e1.path).read_bytes()
            b2 = ((tmp_path / "b") / e2.path).read_bytes()
            assert b1 == b2

    def test_different_seeds_differ(self, tmp_path):
        m1 = generate_synthetic([2, 2, 2, 2], size=16, seed=1, out_dir=tmp_path / "a")
        m2 = generate_synthetic([2, 2, 2, 2], size=16, seed=2, out_dir=tmp_path / "b")
        b1 = ((tmp_path / "a") / m1.entries[0].path).read_bytes()
        b2 = ((tmp_path / "b") / m2.entries[0].path).read_bytes()
        assert b1 != b2

    def test_manifest_round_trip(self, tmp_path):
        manifest = generate_synthetic([2, 2, 2, 2], size=16, seed=0, out_dir=tmp_path)
        loaded = DatasetManifest.load(tmp_path / "manifest.json")
        assert loaded.to_dict() == manifest.to_dict()
        assert loaded.root == tmp_path

    def test_linear_probe_separates_classes(self, tmp_path):
        manifest = generate_synthetic([40, 40, 40, 40], size=16, seed=5, out_dir=tmp_path)
        split_dataset(manifest, seed=5)
        train_x, train_y = load_split_arrays(manifest, "train")
        val_x, val_y = load_split_arrays(manifest, "val")
        oa = linear_probe_oa(band_means(train_x), train_y, band_means(val_x), val_y)
        assert oa > 0.9

    def test_generated_tile_shapes_and_finiteness(self, tmp_path):
        manifest = generate_synthetic([1, 1, 1, 1], size=32, seed=3, out_dir=tmp_path)
        x, y = load_split_arrays(manifest, "train")
        assert x.shape == (4, 9, 32, 32)
        assert np.isfinite(x).all()
        assert sorted(y.tolist()) == [0, 1, 2, 3]

    def test_count_class_mismatch_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            generate_synthetic([1, 2], size=8, seed=0, out_dir=tmp_path)


def test_manifest_json_is_sorted_and_stable(tmp_path):
    manifest = make_manifest([2, 2])
    path = tmp_path / "m.json"
    manifest.save(path)
    manifest.save(tmp_path / "m2.json")
    assert path.read_bytes() == (tmp_path / "m2.json").read_bytes()
    parsed = json.loads(path.read_text())
    assert set(parsed) == {"class_names", "seed", "generator", "entries"}
