"""Tests for whole-image evaluation and test-set reports."""

import numpy as np
import pytest

from odesr.core.exceptions import ConfigurationError, DatasetError
from odesr.models.generator import CoreMetadata, Generator
from odesr.training.evaluation import (
    EvalReport,
    NfeRecord,
    SetResult,
    ValidationResult,
    bicubic_baseline,
    compare_reports,
    evaluate_test_sets,
    load_test_set,
    super_resolve,
    validate,
)


def make_set(name, psnrs, bicubic=20.0, nfe=7, steps=1):
    records = [NfeRecord("image", image_id, nfe, steps, psnr=value) for image_id, value in psnrs.items()]
    return SetResult(name, ValidationResult(records), {image_id: bicubic for image_id in psnrs})


class TestNfeRecord:
    """Tests for NfeRecord."""

    def test_unknown_scope(self):
        """Only batch, image and epoch scopes exist."""
        with pytest.raises(ConfigurationError):
            NfeRecord("pixel", "a", 7, 1)

    @pytest.mark.parametrize(
        ("nfe", "steps", "rejected", "consistent"),
        [
            (7, 1, 0, True),
            (19, 2, 1, True),
            (13, 1, 0, False),
            (0, 0, 0, True),
        ],
    )
    def test_consistent(self, nfe, steps, rejected, consistent):
        """NFE equals six evaluations per attempted step plus one."""
        assert NfeRecord("batch", "0:0", nfe, steps, rejected).consistent is consistent

    def test_from_rrdb_metadata(self):
        """A core without a solver reports zero cost."""
        record = NfeRecord.from_metadata("image", "a", CoreMetadata("rrdb"), psnr=25.0)

        assert (record.nfe, record.steps, record.rejected, record.psnr) == (0, 0, 0, 25.0)


class TestValidate:
    """Tests for validation passes on real images."""

    @pytest.fixture
    def pairs(self, fixture_dir):
        return load_test_set(fixture_dir)[:3]

    def test_load_test_set(self, fixture_dir):
        """Every PNG becomes a pair named after its file."""
        pairs = load_test_set(fixture_dir)

        assert len(pairs) == 10
        assert pairs[0].source_id == "000_gradient"
        assert pairs[0].hr.shape == (3, 32, 32)
        assert pairs[0].lr.shape == (3, 8, 8)

    def test_load_empty_folder(self, tmp_path):
        """A folder without PNGs raises DatasetError."""
        with pytest.raises(DatasetError):
            load_test_set(tmp_path)

    def test_super_resolve_clips(self, tiny_ode_config, pairs):
        """Output is 4x larger and inside [0, 1]."""
        output, metadata = super_resolve(Generator(tiny_ode_config), pairs[0].lr)

        assert output.shape == (3, 32, 32)
        assert output.min() >= 0.0
        assert output.max() <= 1.0
        assert metadata.core == "ode"

    def test_validate_records(self, tiny_ode_config, pairs):
        """One consistent image record per pair."""
        result = validate(Generator(tiny_ode_config), pairs)

        assert [r.id for r in result.records] == [p.source_id for p in pairs]
        assert all(r.scope == "image" for r in result.records)
        assert all(r.consistent for r in result.records)
        assert np.isfinite(result.psnr_mean)
        assert result.nfe_stats()[0] >= 7

    def test_validate_with_workers(self, tiny_rrdb_config, pairs):
        """Threaded validation returns the same values in input order."""
        generator = Generator(tiny_rrdb_config)
        serial = validate(generator, pairs)
        threaded = validate(generator, pairs, workers=2)

        assert threaded.per_image == serial.per_image
        assert threaded.nfe_stats() == (0.0, 0.0)

    def test_validate_empty(self, tiny_ode_config):
        """Validating on nothing raises DatasetError."""
        with pytest.raises(DatasetError):
            validate(Generator(tiny_ode_config), [])

    def test_bicubic_baseline(self, pairs):
        """The baseline is a finite PSNR above a trivial level."""
        assert 10.0 < bicubic_baseline(pairs) <= 100.0

    def test_evaluate_test_sets(self, tiny_rrdb_config, fixture_dir):
        """One set per folder, named after it."""
        report = evaluate_test_sets(Generator(tiny_rrdb_config), [fixture_dir])

        assert [s.name for s in report.sets] == ["images"]
        assert len(report.per_image_table().rows) == 10


class TestEvalReport:
    """Tests for the report tables."""

    def test_summary_has_pooled_row(self):
        """The last summary row pools every image of every set."""
        report = EvalReport([make_set("a", {"x": 30.0, "y": 26.0}), make_set("b", {"z": 22.0}, bicubic=18.0)])
        rows = report.summary_table().rows

        assert [r[0] for r in rows] == ["a", "b", "all"]
        assert rows[0][1:] == [2, 28.0, 20.0]
        assert rows[2][1] == 3
        assert rows[2][2] == pytest.approx(26.0)
        assert rows[2][3] == pytest.approx(58.0 / 3)

    def test_per_image_columns(self):
        """Per-image rows carry PSNR, bicubic PSNR and solver cost."""
        report = EvalReport([make_set("a", {"x": 30.0}, nfe=13, steps=2)])
        table = report.per_image_table()

        assert table.columns == ["test_set", "image_id", "psnr", "bicubic_psnr", "nfe", "steps"]
        assert table.rows == [["a", "x", 30.0, 20.0, 13, 2]]

    def test_compare_reports(self):
        """Rows are ordered by absolute difference and cut at top."""
        first = EvalReport([make_set("a", {"x": 30.0, "y": 25.0, "z": 20.0})])
        second = EvalReport([make_set("a", {"x": 29.0, "y": 28.0, "z": 20.5})])
        table = compare_reports(first, second, top=2)

        assert [r[1] for r in table.rows] == ["y", "x"]
        assert table.rows[0][4] == pytest.approx(-3.0)
