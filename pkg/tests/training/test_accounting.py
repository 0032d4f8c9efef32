"""Tests for model accounting tables."""

import json

import pytest

from odesr.core.config import GeneratorConfig, RunConfig, TrainConfig, config_to_dict, generator_preset
from odesr.core.exceptions import ConfigFileError
from odesr.models.generator import count_params
from odesr.training.accounting import MODEL_TABLE_COLUMNS, RunRecord, model_table, parameter_table, read_run


def write_run(root, core="ode", epoch_wall_s=(2.0, 4.0), best_psnr=24.5):
    root.mkdir(parents=True)
    config = RunConfig(train=TrainConfig(generator=GeneratorConfig(core=core)))
    (root / "config.json").write_text(json.dumps(config_to_dict(config)))
    summary = {
        "parameter_count": 1234,
        "baseline_psnr": 22.0,
        "best_psnr": best_psnr,
        "epoch_wall_s": list(epoch_wall_s),
    }
    (root / "run_summary.json").write_text(json.dumps(summary))
    return root


class TestReadRun:
    """Tests for read_run."""

    def test_reads_summary_and_config(self, tmp_path):
        """Core comes from config.json, the rest from run_summary.json."""
        record = read_run(write_run(tmp_path / "ode_small", core="rrdb"))

        assert record.name == "ode_small"
        assert record.core == "rrdb"
        assert record.parameters == 1234
        assert record.epoch_time_s == pytest.approx(3.0)
        assert record.best_psnr == 24.5

    def test_missing_summary(self, tmp_path):
        """A directory without a summary raises ConfigFileError."""
        with pytest.raises(ConfigFileError, match="file not found"):
            read_run(tmp_path)

    def test_malformed_summary(self, tmp_path):
        """Broken JSON raises ConfigFileError."""
        root = write_run(tmp_path / "run")
        (root / "run_summary.json").write_text("{oops")
        with pytest.raises(ConfigFileError, match="parse error"):
            read_run(root)


class TestModelTable:
    """Tests for model_table and parameter_table."""

    def test_relative_epoch_time(self):
        """Epoch time is relative to the fastest run."""
        runs = [
            RunRecord("ode", "ode", 442_051, 6.0, 25.0, 22.0),
            RunRecord("rrdb", "rrdb", 833_731, 2.0, 25.5, 22.0),
        ]
        table = model_table(runs)

        assert table.columns == MODEL_TABLE_COLUMNS
        assert [r[4] for r in table.rows] == [3.0, 1.0]

    def test_no_timings(self):
        """Without timings the relative time is undefined."""
        table = model_table([RunRecord("a", "ode", 1, 0.0, 20.0, 19.0)])

        assert table.rows[0][4] != table.rows[0][4]

    def test_parameter_table(self):
        """Counts match count_params and the ratio is to the lightest model."""
        configs = {
            "ode": generator_preset("augmented-time", "high-data"),
            "rrdb": generator_preset("rrdb", rrdb_blocks=1),
        }
        table = parameter_table(configs)
        ode, rrdb = table.rows

        assert ode[5] == count_params(configs["ode"]) == 442_051
        assert rrdb[5] == 833_731
        assert ode[2] + ode[3] + ode[4] == ode[5]
        assert ode[6] == 1.0
        assert rrdb[6] == pytest.approx(rrdb[5] / ode[5])
