"""Pluggable job executors.

The scheduler only sees the :class:`ExecutorPort` contract: submit a job,
get back a completion that yields exactly one :class:`JobResult` (timeouts
and crashes are synthesized as Failed results, never exceptions).

Two implementations ship with the package:

* :class:`SimulatedExecutor` — deterministic virtual executor. Latency and
  failure are derived by hashing the job's stable identity with the seed,
  so a seeded run reproduces the same (step, status) sequence regardless of
  scheduling interleavings, and no wall-clock time is spent.
* :class:`LocalExecutor` — runs the step script as a subprocess in a
  per-job working directory; files written there are reported as output
  locators.
"""

from __future__ import annotations

import hashlib
import os
import socket
import subprocess
import sys
import threading
from concurrent.futures import Future, ThreadPoolExecutor
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Protocol

from .jobs import Job, JobResult

TAIL_LIMIT = 2000


class Completion(Protocol):
    def done(self) -> bool: ...

    def result(self) -> JobResult: ...


class ExecutorPort(Protocol):
    capacity: int

    def submit(self, job: Job) -> Completion: ...

    def close(self) -> None: ...


class _Ready:
    """Completion that is done at construction time."""

    def __init__(self, result: JobResult) -> None:
        self._result = result

    def done(self) -> bool:
        return True

    def result(self) -> JobResult:
        return self._result


class _FutureCompletion:
    def __init__(self, future: Future) -> None:
        self.future = future

    def done(self) -> bool:
        return self.future.done()

    def result(self) -> JobResult:
        return self.future.result()


def _unit_interval(digest: bytes, offset: int) -> float:
    return int.from_bytes(digest[offset : offset + 6], "big") / float(1 << 48)


class SimulatedExecutor:
    """Deterministic executor with configurable latency and failure rate.

    Results carry virtual timestamps offset from ``base_time``; nothing
    sleeps, so simulated hours complete in microseconds.
    """

    def __init__(
        self,
        seed: int = 0,
        failure_rate: float = 0.0,
        latency_range: tuple[float, float] = (0.5, 30.0),
        base_time: str = "2030-01-01T00:00:00+00:00",
        timeout_s: float | None = None,
        capacity: int = 8,
    ) -> None:
        self.seed = seed
        self.failure_rate = failure_rate
        self.latency_range = latency_range
        self.base_time = datetime.fromisoformat(base_time)
        if self.base_time.tzinfo is None:
            self.base_time = self.base_time.replace(tzinfo=timezone.utc)
        self.timeout_s = timeout_s
        self.capacity = capacity

    def _digest(self, job: Job) -> bytes:
        # keyed on logical coordinates, not item ids, so a seeded re-run of a
        # structurally identical analysis reproduces the same outcomes
        key = "|".join(
            (
                str(self.seed),
                "post" if job.element_index is None else str(job.element_index),
                job.step,
                str(job.fork_index),
                str(job.attempt),
            )
        )
        return hashlib.sha256(key.encode("utf-8")).digest()

    def submit(self, job: Job) -> Completion:
        digest = self._digest(job)
        lat_lo, lat_hi = self.latency_range
        latency = lat_lo + _unit_interval(digest, 0) * (lat_hi - lat_lo)
        fails = _unit_interval(digest, 6) < self.failure_rate
        start_jitter = _unit_interval(digest, 12) * 10.0
        resource = f"sim:node-{digest[18] % 8}"
        started = self.base_time + timedelta(seconds=start_jitter)
        timeout = self.timeout_s if self.timeout_s is not None else job.timeout_s
        if timeout is not None and latency > timeout:
            ended = started + timedelta(seconds=timeout)
            result = JobResult(
                job_id=job.id,
                status="Failed",
                started_at=started.isoformat(),
                ended_at=ended.isoformat(),
                resource=resource,
                error="timeout",
            )
        elif fails:
            ended = started + timedelta(seconds=latency)
            result = JobResult(
                job_id=job.id,
                status="Failed",
                started_at=started.isoformat(),
                ended_at=ended.isoformat(),
                resource=resource,
                error="simulated failure (exit 1)",
                stderr_tail="injected failure",
            )
        else:
            ended = started + timedelta(seconds=latency)
            element = job.element or "analysis"
            out = f"lfn://sim/{job.analysis}/{element}/{job.step}/{job.fork_index}.out"
            result = JobResult(
                job_id=job.id,
                status="Succeeded",
                started_at=started.isoformat(),
                ended_at=ended.isoformat(),
                resource=resource,
                outputs=(out,),
            )
        return _Ready(result)

    def close(self) -> None:
        pass


def _strip_scheme(locator: str) -> str:
    return locator[7:] if locator.startswith("file://") else locator


class LocalExecutor:
    """Runs step scripts as subprocesses, up to ``capacity`` at a time."""

    def __init__(
        self,
        workdir: str | Path,
        capacity: int = 4,
        timeout_s: float = 3600.0,
    ) -> None:
        self.workdir = Path(workdir)
        self.capacity = capacity
        self.timeout_s = timeout_s
        self._pool = ThreadPoolExecutor(max_workers=capacity, thread_name_prefix="job")
        self._hostname = socket.gethostname()
        self._lock = threading.Lock()

    def submit(self, job: Job) -> Completion:
        return _FutureCompletion(self._pool.submit(self._run, job))

    def _run(self, job: Job) -> JobResult:
        jobdir = self.workdir / job.id
        jobdir.mkdir(parents=True, exist_ok=True)
        # relative script refs resolve against the service cwd, not the job dir
        script = str(Path(_strip_scheme(job.script_ref)).resolve())
        cmd = [sys.executable, script] if script.endswith(".py") else [script]
        for key in sorted(job.params):
            cmd.extend([f"--{key}", str(job.params[key])])
        cmd.extend(_strip_scheme(loc) for loc in job.inputs)
        env = dict(os.environ)
        env.update({str(k): str(v) for k, v in job.env.items()})
        resource = f"local:{self._hostname}"
        started = datetime.now(timezone.utc)
        try:
            proc = subprocess.run(
                cmd,
                cwd=jobdir,
                env=env,
                capture_output=True,
                text=True,
                timeout=job.timeout_s or self.timeout_s,
            )
        except subprocess.TimeoutExpired as exc:
            ended = datetime.now(timezone.utc)
            return JobResult(
                job_id=job.id,
                status="Failed",
                started_at=started.isoformat(),
                ended_at=ended.isoformat(),
                resource=resource,
                error="timeout",
                stdout_tail=(exc.stdout or b"" if isinstance(exc.stdout, bytes) else exc.stdout or "")[-TAIL_LIMIT:] or "",
            )
        except OSError as exc:
            ended = datetime.now(timezone.utc)
            return JobResult(
                job_id=job.id,
                status="Failed",
                started_at=started.isoformat(),
                ended_at=ended.isoformat(),
                resource=resource,
                error=f"could not launch {script}: {exc}",
            )
        ended = datetime.now(timezone.utc)
        outputs = tuple(
            sorted(
                f"file://{path}"
                for path in (p for p in jobdir.rglob("*") if p.is_file())
            )
        )
        if proc.returncode == 0:
            return JobResult(
                job_id=job.id,
                status="Succeeded",
                started_at=started.isoformat(),
                ended_at=ended.isoformat(),
                resource=resource,
                outputs=outputs,
                stdout_tail=proc.stdout[-TAIL_LIMIT:],
                stderr_tail=proc.stderr[-TAIL_LIMIT:],
            )
        first_err = (proc.stderr or "").strip().splitlines()
        return JobResult(
            job_id=job.id,
            status="Failed",
            started_at=started.isoformat(),
            ended_at=ended.isoformat(),
            resource=resource,
            outputs=outputs,
            error=f"exit status {proc.returncode}" + (f": {first_err[0]}" if first_err else ""),
            stdout_tail=proc.stdout[-TAIL_LIMIT:],
            stderr_tail=proc.stderr[-TAIL_LIMIT:],
        )

    def close(self) -> None:
        self._pool.shutdown(wait=True)


def build_executor(config) -> ExecutorPort:
    """Instantiate the executor selected by ``exec.kind``."""
    if config.exec_kind == "sim":
        return SimulatedExecutor(
            seed=config.sim_seed,
            failure_rate=config.sim_failure_rate,
            latency_range=(config.sim_latency_min, config.sim_latency_max),
            base_time=config.sim_base_time,
            timeout_s=config.timeout_s,
            capacity=config.capacity,
        )
    if config.exec_kind == "local":
        return LocalExecutor(
            workdir=config.workdir,
            capacity=config.capacity,
            timeout_s=config.timeout_s,
        )
    raise ValueError(f"unknown exec.kind {config.exec_kind!r}")
