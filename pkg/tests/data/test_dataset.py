"""Tests for odesr.data.dataset and odesr.data.fixtures modules."""

import json
import threading
import time

import numpy as np
import pytest

from odesr.core.config import DataConfig
from odesr.core.exceptions import ConfigurationError, DatasetError
from odesr.data.dataset import (
    Manifest,
    ManifestEntry,
    PatchDataset,
    load_pairs,
    manifest_for,
    ordered_map,
    stack_batch,
)
from odesr.data.fixtures import PATTERNS, make_fixture_images, write_fixture_set
from odesr.data.image_io import load_png


class TestManifest:
    """Tests for Manifest."""

    def test_fixed_split(self, fixture_dir):
        """Test that the last sorted tenth validates."""
        manifest = Manifest.from_directory(fixture_dir)
        assert len(manifest.split("train")) == 9
        assert [e.source_id for e in manifest.split("val")] == ["009_stripes"]

    def test_small_sets_keep_one_val(self, tmp_path):
        """Test that two images still give one validation image."""
        write_fixture_set(tmp_path, count=2, size=8)
        manifest = Manifest.from_directory(tmp_path)
        assert len(manifest.split("val")) == 1

    def test_lr_dir(self, tmp_path):
        """Test LR pairing by filename."""
        write_fixture_set(tmp_path / "hr", count=3, size=16)
        write_fixture_set(tmp_path / "lr", count=3, size=4)
        manifest = Manifest.from_directory(tmp_path / "hr", tmp_path / "lr")
        assert all(e.lr_path and e.lr_path.endswith(f"{e.source_id}.png") for e in manifest.entries)

    def test_lr_dir_missing_file(self, tmp_path):
        """Test that every HR image needs an LR partner."""
        write_fixture_set(tmp_path / "hr", count=3, size=16)
        write_fixture_set(tmp_path / "lr", count=2, size=4)
        with pytest.raises(DatasetError, match="Missing LR"):
            Manifest.from_directory(tmp_path / "hr", tmp_path / "lr")

    def test_empty_directory(self, tmp_path):
        """Test DatasetError for a folder without PNGs."""
        with pytest.raises(DatasetError):
            Manifest.from_directory(tmp_path)

    def test_save_and_load_relative_paths(self, tmp_path, fixture_dir):
        """Test that relative paths resolve against the manifest location."""
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps({"images": [{"source_id": "a", "path": "images/000_gradient.png", "split": "train"}]}))
        (entry,) = Manifest.load(path).entries
        assert entry.path == str(fixture_dir / "000_gradient.png")

    def test_round_trip(self, tmp_path, fixture_dir):
        """Test save then load."""
        manifest = Manifest.from_directory(fixture_dir)
        loaded = Manifest.load(manifest.save(tmp_path / "m.json"))
        assert loaded.entries == manifest.entries

    @pytest.mark.parametrize("content", ["{", '{"items": []}', '{"images": []}', '{"images": [{"bogus": 1}]}'])
    def test_malformed(self, tmp_path, content):
        """Test DatasetError for broken manifests."""
        path = tmp_path / "m.json"
        path.write_text(content)
        with pytest.raises(DatasetError):
            Manifest.load(path)

    def test_missing_manifest(self, tmp_path):
        """Test that DatasetError is also a configuration error."""
        with pytest.raises(ConfigurationError):
            Manifest.load(tmp_path / "none.json")

    def test_manifest_for(self, fixture_dir):
        """Test dataset resolution from the data config."""
        assert len(manifest_for(DataConfig(train_dir=str(fixture_dir))).entries) == 10
        with pytest.raises(DatasetError):
            manifest_for(DataConfig())


class TestOrderedMap:
    """Tests for ordered_map."""

    def test_serial(self):
        """Test the in-thread path."""
        assert list(ordered_map(lambda x: x * 2, range(5))) == [0, 2, 4, 6, 8]

    def test_threads_keep_order(self):
        """Test that out-of-order completion still yields in input order."""

        def slow_first(x):
            time.sleep(0.02 if x == 0 else 0.0)
            return x, threading.current_thread().name

        results = list(ordered_map(slow_first, range(8), workers=3))
        assert [x for x, _ in results] == list(range(8))

    def test_load_pairs(self, fixture_dir):
        """Test threaded loading matches serial loading."""
        entries = Manifest.from_directory(fixture_dir).entries
        serial = load_pairs(entries)
        threaded = load_pairs(entries, workers=2)
        assert [p.source_id for p in threaded] == [e.source_id for e in entries]
        assert all(np.array_equal(a.hr, b.hr) for a, b in zip(serial, threaded))
        assert serial[0].lr.shape == (3, 8, 8)


class TestPatchDataset:
    """Tests for PatchDataset."""

    @pytest.fixture
    def pairs(self, fixture_dir):
        return load_pairs(Manifest.from_directory(fixture_dir).split("train"))

    def test_grid_length(self, pairs):
        """Test four 16-pixel patches per 32-pixel image."""
        assert len(PatchDataset(pairs, 16)) == 36

    def test_epoch_is_deterministic(self, pairs):
        """Test that (seed, epoch) fixes order and augmentation."""
        a = PatchDataset(pairs, 16, seed=3).epoch_patches(1)
        b = PatchDataset(pairs, 16, seed=3).epoch_patches(1)
        assert [p.patch_id for p in a] == [p.patch_id for p in b]
        assert all(np.array_equal(x.hr, y.hr) for x, y in zip(a, b))

    def test_epochs_differ(self, pairs):
        """Test reshuffling between epochs."""
        dataset = PatchDataset(pairs, 16, seed=3)
        first = [p.patch_id for p in dataset.epoch_patches(0)]
        second = [p.patch_id for p in dataset.epoch_patches(1)]
        assert first != second
        assert sorted(first) == sorted(second)

    def test_batches(self, pairs):
        """Test batch sizes, shapes and dtype."""
        batches = list(PatchDataset(pairs, 16).batches(0, 8))
        assert [len(b) for b in batches] == [8, 8, 8, 8, 4]
        assert batches[0].lr.shape == (8, 3, 4, 4)
        assert batches[0].hr.shape == (8, 3, 16, 16)
        assert batches[0].hr.dtype == np.float32

    def test_random_sampling(self, pairs):
        """Test crops per image and epoch."""
        dataset = PatchDataset(pairs, 16, sampling="random", crops_per_image=2)
        assert len(dataset) == 18
        assert len(dataset.epoch_patches(0)) == 18

    def test_from_config(self, pairs):
        """Test construction from DataConfig."""
        dataset = PatchDataset.from_config(pairs, DataConfig(patch_size=16, stride=8, augment=False), seed=0)
        assert len(dataset) == 9 * 9

    def test_no_patches(self, pairs):
        """Test DatasetError when the patch exceeds every image."""
        with pytest.raises(DatasetError):
            PatchDataset(pairs, 64)

    def test_stack_batch_ids(self, pairs):
        """Test patch ids in the stacked batch."""
        batch = stack_batch(pairs[:2], dtype=np.float64)
        assert batch.ids == ["000_gradient@0,0", "001_stripes@0,0"]
        assert batch.lr.dtype == np.float64


class TestFixtures:
    """Tests for the synthetic image set."""

    def test_names_cycle_patterns(self):
        """Test pattern rotation and naming."""
        images = make_fixture_images(count=5, size=8)
        assert list(images) == ["000_gradient", "001_stripes", "002_hard_stripes", "003_checkerboard", "004_gradient"]
        assert set(PATTERNS) == {"gradient", "stripes", "hard_stripes", "checkerboard"}

    def test_range_and_shape(self):
        """Test value range and size."""
        for image in make_fixture_images(count=4, size=12).values():
            assert image.shape == (3, 12, 12)
            assert image.min() >= 0.0 and image.max() <= 1.0

    def test_seeded(self):
        """Test determinism."""
        a = make_fixture_images(count=4, size=8, seed=2)
        b = make_fixture_images(count=4, size=8, seed=2)
        assert all(np.array_equal(a[k], b[k]) for k in a)

    def test_hard_stripes_are_binary(self):
        """Test pure black and white stripes."""
        image = make_fixture_images(count=3, size=16)["002_hard_stripes"]
        assert set(np.unique(image)) <= {0.0, 1.0}

    @pytest.mark.parametrize("count,size", [(0, 8), (2, 6), (2, 0)])
    def test_validation(self, count, size):
        """Test count and size checks."""
        with pytest.raises(ConfigurationError):
            make_fixture_images(count=count, size=size)

    def test_write(self, tmp_path):
        """Test PNG output that loads back at the right size."""
        paths = write_fixture_set(tmp_path, count=2, size=8)
        assert [p.name for p in paths] == ["000_gradient.png", "001_stripes.png"]
        assert load_png(paths[0]).shape == (3, 8, 8)
