"""Experiment configuration, batch execution, tabular output and SVG plots."""

from .config import (
    ExperimentConfig,
    InitSpec,
    config_hash,
    make_initial_distribution,
    parse_config,
    parse_config_text,
    resolved_items,
    resolved_text,
)
from .table import ResultTable, Row, emit, parse_csv
from .experiment import run_experiment, bounds_table, summary_table
from .figures import FIGURE_IDS, reproduce_figure

__all__ = [
    "ExperimentConfig",
    "InitSpec",
    "config_hash",
    "make_initial_distribution",
    "parse_config",
    "parse_config_text",
    "resolved_items",
    "resolved_text",
    "ResultTable",
    "Row",
    "emit",
    "parse_csv",
    "run_experiment",
    "bounds_table",
    "summary_table",
    "FIGURE_IDS",
    "reproduce_figure",
]
