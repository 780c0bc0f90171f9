from .chains import ChainConfig, ChainResult, batch_means_stderr, run_chain
from .estimator import MLMCMCReport, TermRow, estimate
from .schedule import ScheduleEntry, dof_cost, sample_count, schedule

__all__ = [
    "ChainConfig",
    "ChainResult",
    "batch_means_stderr",
    "run_chain",
    "MLMCMCReport",
    "TermRow",
    "estimate",
    "ScheduleEntry",
    "dof_cost",
    "sample_count",
    "schedule",
]
