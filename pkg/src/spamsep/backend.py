"""Uniform execution interface: in-process simulator or file exchange with an external executor."""

from __future__ import annotations

import hashlib
import os
import tempfile
import threading
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

import numpy as np

from .circuits.ir import CompiledCircuit
from .circuits.serialize import (
    BatchRecord,
    SerializationError,
    deserialize_batch,
    deserialize_counts,
    serialize_batch,
    serialize_counts,
)
from .results import Counts, Distribution
from .simulator import ModelError, QpuModel, exact_distribution, run_circuit


class BackendError(RuntimeError):
    pass


class BackendTimeout(BackendError):
    pass


class CapabilityError(BackendError):
    pass


def derive_seed(*keys: int | str) -> int:
    """Stable 63-bit seed from integer / string keys."""
    ints = [k if isinstance(k, int) else zlib.crc32(k.encode()) for k in keys]
    if any(k < 0 for k in ints):
        raise ValueError("seed keys must be nonnegative")
    return int(np.random.SeedSequence(ints).generate_state(1, np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class ExecutionRequest:
    batch: tuple[CompiledCircuit, ...]
    shots: int
    seed: int = 0
    label: str = "req"

    def __post_init__(self) -> None:
        object.__setattr__(self, "batch", tuple(self.batch))
        if self.shots < 1:
            raise ValueError("shots must be positive")

    def records(self) -> list[BatchRecord]:
        return [
            BatchRecord(f"c{i:05d}", cc, self.shots, derive_seed(self.seed, i))
            for i, cc in enumerate(self.batch)
        ]

    def document(self) -> str:
        return serialize_batch(self.records())

    @property
    def request_id(self) -> str:
        digest = hashlib.sha256(self.document().encode()).hexdigest()[:16]
        return f"{self.label}-{digest}"


@dataclass(frozen=True)
class ExecutionResult:
    results: tuple[Counts | Distribution, ...]
    provenance: dict[str, Any] = field(default_factory=dict, compare=False)


class Backend(Protocol):
    name: str
    n_qubits: int
    supports_damping: bool

    def execute(self, req: ExecutionRequest) -> ExecutionResult: ...


class SimulatorBackend:
    """Runs requests on a :class:`QpuModel`.

    With ``exact=True`` results are exact :class:`Distribution` objects and shot
    counts are ignored.
    """

    supports_damping = True

    def __init__(self, model: QpuModel, exact: bool = False):
        self.model = model
        self.exact = exact
        self.name = "sim-exact" if exact else "sim"

    @property
    def n_qubits(self) -> int:
        return self.model.n_qubits

    def execute(self, req: ExecutionRequest) -> ExecutionResult:
        start = time.time()
        try:
            if self.exact:
                out = tuple(exact_distribution(self.model, r.compiled, r.id) for r in req.records())
            else:
                out = tuple(
                    run_circuit(self.model, r.compiled, r.shots, r.sample_seed, r.id)
                    for r in req.records()
                )
        except ModelError as exc:
            raise BackendError(str(exc)) from exc
        return ExecutionResult(
            out,
            {"backend": self.name, "seed": req.seed, "started": start, "finished": time.time()},
        )


def execute_batch_document(model: QpuModel, text: str, fallback_seed: int = 0) -> list[Counts]:
    """What an external executor does with a ``*.circuits`` document."""
    out = []
    for i, rec in enumerate(deserialize_batch(text)):
        seed = rec.sample_seed if rec.sample_seed is not None else derive_seed(fallback_seed, i)
        out.append(run_circuit(model, rec.compiled, rec.shots, seed, rec.id))
    return out


def write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ExchangeBackend:
    """Writes ``<dir>/<request-id>.circuits`` and waits for ``<dir>/<request-id>.counts``.

    Request ids embed a digest of the batch document, so a counts file left over
    from an identical earlier request is reused rather than re-run.
    """

    _locks: dict[str, threading.Lock] = {}
    _locks_guard = threading.Lock()

    def __init__(
        self,
        directory: str | Path,
        n_qubits: int,
        timeout: float = 600.0,
        poll_interval: float = 0.05,
        supports_damping: bool = False,
    ):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.n_qubits = n_qubits
        self.timeout = timeout
        self.poll_interval = poll_interval
        self.supports_damping = supports_damping
        self.name = f"exchange:{self.directory}"

    def _lock(self, request_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(request_id, threading.Lock())

    def execute(self, req: ExecutionRequest) -> ExecutionResult:
        rid = req.request_id
        records = req.records()
        with self._lock(rid):
            start = time.time()
            circuits_path = self.directory / f"{rid}.circuits"
            counts_path = self.directory / f"{rid}.counts"
            if not counts_path.exists():
                write_atomic(circuits_path, req.document())
            deadline = start + self.timeout
            while not counts_path.exists():
                if time.time() > deadline:
                    raise BackendTimeout(f"no counts for request {rid} after {self.timeout} s")
                time.sleep(self.poll_interval)
            text = counts_path.read_text(encoding="utf-8")
            try:
                parsed = deserialize_counts(text, [r.id for r in records])
            except SerializationError as exc:
                raise BackendError(f"{counts_path.name}: {exc}") from exc
            for r in records:
                if parsed[r.id].shots != r.shots:
                    raise BackendError(
                        f"{counts_path.name}: circuit {r.id} has {parsed[r.id].shots} shots, expected {r.shots}"
                    )
        return ExecutionResult(
            tuple(parsed[r.id] for r in records),
            {"backend": self.name, "request_id": rid, "started": start, "finished": time.time()},
        )


def process_exchange_dir(model: QpuModel, directory: str | Path, fallback_seed: int = 0) -> list[str]:
    """Answer every pending ``*.circuits`` request in ``directory``; returns the ids handled."""
    directory = Path(directory)
    done = []
    for path in sorted(directory.glob("*.circuits")):
        rid = path.name[: -len(".circuits")]
        counts_path = directory / f"{rid}.counts"
        if counts_path.exists():
            continue
        results = execute_batch_document(model, path.read_text(encoding="utf-8"), fallback_seed)
        write_atomic(counts_path, serialize_counts(results))
        done.append(rid)
    return done

