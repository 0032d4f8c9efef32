"""Training harness: optimizer, schedule, training loop and experiment analyses."""

from .accounting import RunRecord, model_table, parameter_table, read_run
from .evaluation import (
    EvalReport,
    NfeRecord,
    ValidationResult,
    bicubic_baseline,
    compare_reports,
    evaluate_test_sets,
    super_resolve,
    validate,
)
from .grad_suite import SuiteResult, assert_suite, gradient_check_suite
from .nfe_report import NfeReport, bucket_by_mode, build_nfe_report, nfe_difficulty_report
from .optim import Adam, AdamState, adam_step
from .schedule import PlateauSchedule, ScheduleEvent
from .stability import Scenario, StabilityResult, default_scenarios, stability_bench
from .trainer import TrainResult, Trainer, load_split, train

__all__ = [
    "Adam",
    "AdamState",
    "EvalReport",
    "NfeRecord",
    "NfeReport",
    "PlateauSchedule",
    "RunRecord",
    "Scenario",
    "ScheduleEvent",
    "StabilityResult",
    "SuiteResult",
    "TrainResult",
    "Trainer",
    "ValidationResult",
    "adam_step",
    "assert_suite",
    "bicubic_baseline",
    "bucket_by_mode",
    "build_nfe_report",
    "compare_reports",
    "default_scenarios",
    "evaluate_test_sets",
    "gradient_check_suite",
    "load_split",
    "model_table",
    "nfe_difficulty_report",
    "parameter_table",
    "read_run",
    "stability_bench",
    "super_resolve",
    "train",
    "validate",
]
