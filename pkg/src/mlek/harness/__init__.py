from mlek.harness.config import MULTILEVEL, SINGLE_LEVEL, ConfigError, ExperimentConfig
from mlek.harness.gold import GoldStandard, compute_gold_standard
from mlek.harness.report import emit_report, read_report_csv
from mlek.harness.sweep import ConvergenceReport, ReportRow, fit_rate, rmse, rmse_sweep

__all__ = [
    "MULTILEVEL", "SINGLE_LEVEL", "ConfigError", "ExperimentConfig", "GoldStandard",
    "compute_gold_standard", "emit_report", "read_report_csv", "ConvergenceReport", "ReportRow",
    "fit_rate", "rmse", "rmse_sweep",
]
