"""Analysis orchestration: scheduling, executors, provenance capture."""

from .engine import AnalysisRun, Orchestrator
from .executors import ExecutorPort, LocalExecutor, SimulatedExecutor, build_executor
from .jobs import Job, JobResult, Modification, OutcomeRecord, ProvenanceRecord

__all__ = [
    "AnalysisRun",
    "ExecutorPort",
    "Job",
    "JobResult",
    "LocalExecutor",
    "Modification",
    "Orchestrator",
    "OutcomeRecord",
    "ProvenanceRecord",
    "SimulatedExecutor",
    "build_executor",
]
