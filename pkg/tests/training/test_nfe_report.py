"""Tests for the NFE difficulty report."""

import pytest

from odesr.core.config import GeneratorConfig
from odesr.core.exceptions import ConfigurationError
from odesr.models.generator import Generator
from odesr.training.evaluation import NfeRecord, load_test_set
from odesr.training.nfe_report import bucket_by_mode, build_nfe_report, mode_steps, nfe_difficulty_report


def records(steps):
    return [NfeRecord("image", image_id, 6 * count + 1, count) for image_id, count in steps.items()]


STEPS = {"a": 3, "b": 4, "c": 4, "d": 6, "e": 2}
RRDB_PSNR = {
    5: {"a": 30.0, "b": 26.0, "c": 27.0, "d": 21.0, "e": 32.0},
    1: {"a": 29.5, "b": 25.0, "c": 25.0, "d": 19.0, "e": 31.9},
}


class TestBuckets:
    """Tests for mode_steps and bucket_by_mode."""

    def test_mode(self):
        """The most common count wins."""
        assert mode_steps([3, 4, 4, 6]) == 4

    def test_mode_tie_goes_low(self):
        """Ties break towards the smaller step count."""
        assert mode_steps([5, 5, 3, 3, 9]) == 3

    def test_buckets(self):
        """Below the mode is low, above is high."""
        assert bucket_by_mode(STEPS) == {"a": "low", "b": "medium", "c": "medium", "d": "high", "e": "low"}

    def test_empty(self):
        """No images, no buckets."""
        assert bucket_by_mode({}) == {}


class TestBuildNfeReport:
    """Tests for build_nfe_report."""

    def test_curves_and_gain(self):
        """Curves follow ascending depth; gain is deepest minus shallowest."""
        report = build_nfe_report(records(STEPS), RRDB_PSNR)

        assert report.blocks == [1, 5]
        assert report.mode == 4
        assert not report.degenerate
        assert report.curve("medium") == [25.0, 26.5]
        assert report.gain("high") == pytest.approx(2.0)
        assert report.gain("low") == pytest.approx(0.3)

    def test_table(self):
        """Rows are sorted by image id, one PSNR column per depth."""
        table = build_nfe_report(records(STEPS), RRDB_PSNR).to_table()

        assert table.columns == ["image_id", "steps", "bucket", "psnr_b1", "psnr_b5"]
        assert table.rows[0] == ["a", 3, "low", 29.5, 30.0]
        assert table.notes[0] == "mode steps: 4"

    def test_degenerate(self):
        """Equal step counts collapse into one bucket and are flagged."""
        steps = {"a": 2, "b": 2}
        psnr = {1: {"a": 20.0, "b": 21.0}, 2: {"a": 22.0, "b": 23.0}}
        report = build_nfe_report(records(steps), psnr)

        assert report.degenerate
        assert report.curves() == {"medium": [20.5, 22.5]}
        assert report.gain("high") != report.gain("high")
        assert "degenerate: 1 bucket(s)" in report.to_table().notes

    def test_needs_two_depths(self):
        """A single RRDB depth cannot make a curve."""
        with pytest.raises(ConfigurationError) as exc_info:
            build_nfe_report(records(STEPS), {5: RRDB_PSNR[5]})
        assert exc_info.value.context["field"] == "rrdb_models"

    def test_missing_image(self):
        """Every RRDB model must have scored every image."""
        psnr = {1: dict(RRDB_PSNR[1]), 5: dict(RRDB_PSNR[5])}
        del psnr[5]["d"]
        with pytest.raises(ConfigurationError, match="5 blocks"):
            build_nfe_report(records(STEPS), psnr)


class TestNfeDifficultyReport:
    """Tests for the model-level entry point."""

    @pytest.fixture
    def rrdb(self):
        def build(blocks):
            return Generator(GeneratorConfig(filters=4, core="rrdb", rrdb_blocks=blocks, growth=2))

        return build

    def test_runs_on_images(self, tiny_ode_config, rrdb, fixture_dir):
        """Every test image is bucketed and scored by both depths."""
        pairs = load_test_set(fixture_dir)[:4]
        report = nfe_difficulty_report(Generator(tiny_ode_config), [rrdb(2), rrdb(1)], pairs)

        assert report.blocks == [1, 2]
        assert sorted(report.steps) == sorted(p.source_id for p in pairs)
        assert all(report.psnr[n].keys() == report.steps.keys() for n in report.blocks)

    def test_rejects_rrdb_as_ode(self, rrdb):
        """The first model must have an ODE core."""
        with pytest.raises(ConfigurationError):
            nfe_difficulty_report(rrdb(1), [rrdb(1), rrdb(2)], [])

    def test_rejects_ode_as_rrdb(self, tiny_ode_config, rrdb):
        """Comparison models must be RRDB."""
        with pytest.raises(ConfigurationError):
            nfe_difficulty_report(Generator(tiny_ode_config), [Generator(tiny_ode_config), rrdb(1)], [])

    def test_rejects_duplicate_depth(self, tiny_ode_config, rrdb, fixture_dir):
        """Two models of the same depth are ambiguous."""
        pairs = load_test_set(fixture_dir)[:1]
        with pytest.raises(ConfigurationError, match="share a depth"):
            nfe_difficulty_report(Generator(tiny_ode_config), [rrdb(1), rrdb(1)], pairs)
