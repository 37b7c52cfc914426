"""Configuration for stores, executors and the gateway.

Config files are JSON with nested sections; keys are addressed in docs and
logs with dotted names (``store.log_path``, ``exec.timeout_s``, ...).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


@dataclass(frozen=True)
class UserEntry:
    """Stub identity-registry row: token-authenticated gateway user."""

    id: str
    display_name: str = ""
    token: str = ""


@dataclass
class Config:
    # store.*
    log_path: str = "store/events.log"
    # exec.*
    exec_kind: str = "sim"  # {local, sim}
    timeout_s: float = 3600.0
    max_attempts: int = 1
    capacity: int = 4
    workdir: str = "store/jobs"
    # sim.*
    sim_seed: int = 0
    sim_failure_rate: float = 0.0
    sim_latency_min: float = 0.5
    sim_latency_max: float = 30.0
    sim_base_time: str = "2030-01-01T00:00:00+00:00"
    # lfn.*
    lfn_scheme: str = "lfn://"
    # prov.*
    prov_prefix: str = "pt"
    prov_base_uri: str = "https://provtrack.example.org/ns#"
    # gateway.*
    host: str = "127.0.0.1"
    port: int = 8321
    users: list[UserEntry] = field(default_factory=list)
    ui_dist: str | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Config":
        cfg = cls()
        store = data.get("store", {})
        cfg.log_path = store.get("log_path", cfg.log_path)
        exec_ = data.get("exec", {})
        cfg.exec_kind = exec_.get("kind", cfg.exec_kind)
        cfg.timeout_s = float(exec_.get("timeout_s", cfg.timeout_s))
        cfg.max_attempts = int(exec_.get("max_attempts", cfg.max_attempts))
        cfg.capacity = int(exec_.get("capacity", cfg.capacity))
        cfg.workdir = exec_.get("workdir", cfg.workdir)
        sim = data.get("sim", {})
        cfg.sim_seed = int(sim.get("seed", cfg.sim_seed))
        cfg.sim_failure_rate = float(sim.get("failure_rate", cfg.sim_failure_rate))
        cfg.sim_latency_min = float(sim.get("latency_min", cfg.sim_latency_min))
        cfg.sim_latency_max = float(sim.get("latency_max", cfg.sim_latency_max))
        cfg.sim_base_time = sim.get("base_time", cfg.sim_base_time)
        lfn = data.get("lfn", {})
        cfg.lfn_scheme = lfn.get("scheme", cfg.lfn_scheme)
        prov = data.get("prov", {})
        cfg.prov_prefix = prov.get("prefix", cfg.prov_prefix)
        cfg.prov_base_uri = prov.get("base_uri", cfg.prov_base_uri)
        gateway = data.get("gateway", {})
        cfg.host = gateway.get("host", cfg.host)
        cfg.port = int(gateway.get("port", cfg.port))
        cfg.ui_dist = gateway.get("ui_dist", cfg.ui_dist)
        cfg.users = [
            UserEntry(
                id=u["id"],
                display_name=u.get("display_name", u["id"]),
                token=u.get("token", ""),
            )
            for u in gateway.get("users", [])
        ]
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "Config":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
