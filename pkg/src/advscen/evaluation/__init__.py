"""Metrics, window curation, benchmark tables, transfer matrices and plots."""

from .benchmark import (
    StackPool,
    actor_count_sweep,
    aggregate,
    compare_algorithms,
    matrix_rows,
    objective_ablation,
    run_cell,
    transfer_matrix,
)
from .curate import Curation, LogTooShortError, curate, window
from .metrics import METRIC_FIELDS, MetricsReport, score, to_csv

__all__ = [
    "METRIC_FIELDS", "Curation", "LogTooShortError", "MetricsReport", "StackPool", "actor_count_sweep",
    "aggregate", "compare_algorithms", "curate", "matrix_rows", "objective_ablation", "run_cell", "score",
    "to_csv", "transfer_matrix", "window",
]
