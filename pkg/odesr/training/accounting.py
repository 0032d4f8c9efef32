"""
Model accounting: parameter counts, relative epoch time and best PSNR per run.

Epoch times are only comparable between runs on the same machine, so they
are reported relative to the fastest model.
"""

from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

from odesr.core.config import GeneratorConfig, run_config_from_dict
from odesr.core.exceptions import ConfigFileError
from odesr.data.metrics import mean_std
from odesr.export.tables import Table
from odesr.models.generator import count_params, parameter_ledger

MODEL_TABLE_COLUMNS = [
    "run",
    "core",
    "parameters",
    "epoch_time_s",
    "relative_epoch_time",
    "best_psnr",
    "baseline_psnr",
]


@dataclass
class RunRecord:
    """What model-table needs from one finished run directory."""

    name: str
    core: str
    parameters: int
    epoch_time_s: float
    best_psnr: float
    baseline_psnr: float


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigFileError(str(path), "file not found") from None
    except json.JSONDecodeError as e:
        raise ConfigFileError(str(path), f"parse error: {e}") from None


def read_run(run_dir: str | Path) -> RunRecord:
    """Load run_summary.json and config.json of a training run.

    Raises:
        ConfigFileError: If either file is missing or malformed.
    """
    root = Path(run_dir)
    summary = _read_json(root / "run_summary.json")
    config = run_config_from_dict(_read_json(root / "config.json"))
    epoch_time, _ = mean_std(summary.get("epoch_wall_s", []))
    return RunRecord(
        name=root.name,
        core=config.train.generator.core,
        parameters=int(summary["parameter_count"]),
        epoch_time_s=epoch_time,
        best_psnr=float(summary["best_psnr"]),
        baseline_psnr=float(summary["baseline_psnr"]),
    )


def model_table(runs: Sequence[RunRecord]) -> Table:
    """One row per run; epoch time relative to the fastest run."""
    table = Table("Model accounting", list(MODEL_TABLE_COLUMNS))
    times = [r.epoch_time_s for r in runs if r.epoch_time_s > 0]
    fastest = min(times) if times else 0.0
    for run in runs:
        relative = run.epoch_time_s / fastest if fastest > 0 else float("nan")
        table.add(run.name, run.core, run.parameters, run.epoch_time_s, relative, run.best_psnr, run.baseline_psnr)
    return table


def parameter_table(configs: Mapping[str, GeneratorConfig]) -> Table:
    """Parameter counts per architecture, with the ratio to the lightest one."""
    counts = {name: count_params(config) for name, config in configs.items()}
    lightest = min(counts.values()) if counts else 1
    table = Table("Parameter counts", ["model", "core", "head", "core_params", "tail", "parameters", "ratio"])
    for name, config in configs.items():
        ledger = parameter_ledger(config)
        table.add(
            name,
            config.core,
            ledger["head"],
            ledger["core"],
            ledger["tail"],
            counts[name],
            counts[name] / lightest,
        )
    return table
