"""Batch experiment harness: configs, runners, serialization, and checks."""

from .checks import CheckResult, corrupted_counterexample, run_all
from .config import (ExperimentConfig, build_flow, build_method,
                     build_objective, build_x0, canonical_json,
                     config_sha256, is_flow_entry, parse_config)
from .io import (fmt, load_summary_schema, validate_summary,
                 write_compare_csv, write_discrete_csv, write_estimation_csv,
                 write_flow_csv, write_summary, write_sweep_csv)
from .runner import run_experiment

__all__ = [
    "CheckResult", "ExperimentConfig", "build_flow", "build_method",
    "build_objective", "build_x0", "canonical_json", "config_sha256",
    "corrupted_counterexample", "fmt", "is_flow_entry",
    "load_summary_schema", "parse_config", "run_all", "run_experiment",
    "validate_summary", "write_compare_csv", "write_discrete_csv",
    "write_estimation_csv", "write_flow_csv", "write_summary",
    "write_sweep_csv",
]
