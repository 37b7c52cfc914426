"""Composition root: one store plus the services layered over it."""

from __future__ import annotations

from pathlib import Path
from typing import Any

from .base import AnalysisBase
from .config import Config
from .domain import DomainService
from .kernel import ItemStore
from .orchestrator import Orchestrator
from .orchestrator.executors import ExecutorPort
from .prov import ProvExporter
from .query import QueryService


class Workspace:
    """Everything needed to track, run and query analyses over one store."""

    def __init__(
        self,
        config: Config | None = None,
        *,
        log_path: str | Path | None = "__from_config__",
        executor: ExecutorPort | None = None,
    ) -> None:
        self.config = config or Config()
        path: Any = log_path
        if path == "__from_config__":
            path = self.config.log_path
        self.store = ItemStore(path)
        self.base = AnalysisBase(self.store)
        self.domain = DomainService(self.store, self.base)
        self.orchestrator = Orchestrator(
            self.store, self.base, self.domain, self.config, executor=executor
        )
        self.queries = QueryService(self.store, self.base, self.domain)
        self.prov = ProvExporter(
            self.store, self.base, self.domain, self.queries, self.config
        )

    def close(self) -> None:
        self.orchestrator.close()
        self.store.close()

    def __enter__(self) -> "Workspace":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()
