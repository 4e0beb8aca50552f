"""Line-delimited JSON documents exchanged with external executors.

Circuit batch (``*.circuits``)::

    {"schema": "spamsep.circuits", "version": 1, "circuits": <n>}
    {"id": ..., "n_qubits": ..., "measure": [...], "moments": [[{"g": "H", "q": [0]}, ...], ...],
     "shots": ..., "relabel_mask": [0 | 1, ...], "frame": "...", "compile_seed": ...,
     "sample_seed": ..., "meta": {...}}
    ...

Counts (``*.counts``)::

    {"schema": "spamsep.counts", "version": 1, "circuits": <n>}
    {"id": ..., "shots": ..., "counts": {"<bits>": <int>, ...}}
    ...

Controlled-Pauli records carry ``"p"`` (the target word) and amplitude damping
records carry ``"w"`` (the strength).  Outcome bit ``i`` is the ``i``-th measured qubit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from ..results import Counts, CountsError
from .ir import Circuit, CircuitError, CompiledCircuit, Gate

SCHEMA_VERSION = 1
CIRCUITS_SCHEMA = "spamsep.circuits"
COUNTS_SCHEMA = "spamsep.counts"


class SerializationError(ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{': '.join([', '.join(where), message]) if where else message}")
        self.line = line
        self.field = field


@dataclass(frozen=True)
class BatchRecord:
    id: str
    compiled: CompiledCircuit
    shots: int
    sample_seed: int | None = None


def _gate_to_json(g: Gate) -> dict[str, Any]:
    rec: dict[str, Any] = {"g": g.kind, "q": list(g.qubits)}
    if g.pauli is not None:
        rec["p"] = g.pauli
    if g.param is not None:
        rec["w"] = g.param
    return rec


def _dump(obj: Mapping[str, Any]) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def serialize_batch(records: Iterable[BatchRecord | CompiledCircuit], shots: int | None = None) -> str:
    """Bare compiled circuits get ids ``c0, c1, ...`` and need ``shots``."""
    records = [
        r if isinstance(r, BatchRecord) else BatchRecord(f"c{i}", r, _shots_or_fail(shots))
        for i, r in enumerate(records)
    ]
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise SerializationError("circuit ids must be unique within a batch")
    lines = [_dump({"schema": CIRCUITS_SCHEMA, "version": SCHEMA_VERSION, "circuits": len(records)})]
    for r in records:
        c = r.compiled.circuit
        lines.append(
            _dump(
                {
                    "id": r.id,
                    "n_qubits": c.n_qubits,
                    "measure": list(c.measure),
                    "moments": [[_gate_to_json(g) for g in m] for m in c.moments],
                    "shots": r.shots,
                    "relabel_mask": [int(b) for b in r.compiled.relabel_mask],
                    "frame": r.compiled.frame,
                    "compile_seed": r.compiled.seed,
                    "sample_seed": r.sample_seed,
                    "meta": c.meta,
                }
            )
        )
    return "\n".join(lines) + "\n"


def _shots_or_fail(shots: int | None) -> int:
    if shots is None:
        raise SerializationError("shots required for circuits without a batch record")
    return shots


def _parse_lines(text: str, schema: str) -> list[tuple[int, dict[str, Any]]]:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SerializationError(f"invalid JSON ({exc.msg})", line=lineno) from None
        if not isinstance(obj, dict):
            raise SerializationError("expected a JSON object", line=lineno)
        rows.append((lineno, obj))
    if not rows:
        raise SerializationError("empty document")
    lineno, header = rows[0]
    if header.get("schema") != schema:
        raise SerializationError(f"expected schema {schema!r}", line=lineno, field="schema")
    if header.get("version") != SCHEMA_VERSION:
        raise SerializationError(
            f"unsupported version {header.get('version')!r}", line=lineno, field="version"
        )
    body = rows[1:]
    if header.get("circuits") != len(body):
        raise SerializationError(
            f"header announces {header.get('circuits')} circuits, found {len(body)}",
            line=lineno,
            field="circuits",
        )
    return body


def _require(obj: Mapping[str, Any], key: str, lineno: int, kind: type) -> Any:
    if key not in obj:
        raise SerializationError("missing", line=lineno, field=key)
    val = obj[key]
    if not isinstance(val, kind) or (isinstance(val, bool) and kind is int):
        raise SerializationError(f"wrong type {type(val).__name__}", line=lineno, field=key)
    return val


def deserialize_batch(text: str) -> list[BatchRecord]:
    out = []
    seen: set[str] = set()
    for lineno, obj in _parse_lines(text, CIRCUITS_SCHEMA):
        cid = _require(obj, "id", lineno, str)
        if cid in seen:
            raise SerializationError(f"duplicate circuit id {cid!r}", line=lineno, field="id")
        seen.add(cid)
        try:
            moments = []
            for m in _require(obj, "moments", lineno, list):
                moments.append(
                    tuple(Gate(g["g"], tuple(g["q"]), pauli=g.get("p"), param=g.get("w")) for g in m)
                )
            circuit = Circuit(
                _require(obj, "n_qubits", lineno, int),
                tuple(moments),
                tuple(_require(obj, "measure", lineno, list)),
                obj.get("meta") or {},
            )
            compiled = CompiledCircuit(
                circuit,
                tuple(bool(b) for b in _require(obj, "relabel_mask", lineno, list)),
                obj.get("compile_seed"),
                obj.get("frame"),
            )
        except (CircuitError, KeyError, TypeError) as exc:
            raise SerializationError(f"circuit {cid!r}: {exc}", line=lineno, field="moments") from None
        out.append(BatchRecord(cid, compiled, _require(obj, "shots", lineno, int), obj.get("sample_seed")))
    return out


def serialize_counts(results: Sequence[Counts]) -> str:
    lines = [_dump({"schema": COUNTS_SCHEMA, "version": SCHEMA_VERSION, "circuits": len(results)})]
    for r in results:
        if r.circuit_id is None:
            raise SerializationError("counts need a circuit id")
        lines.append(_dump({"id": r.circuit_id, "shots": r.shots, "counts": dict(r.counts)}))
    return "\n".join(lines) + "\n"


def deserialize_counts(text: str, expected_ids: Sequence[str] | None = None) -> dict[str, Counts]:
    """Parse a counts document, optionally checking it covers ``expected_ids`` exactly."""
    out: dict[str, Counts] = {}
    for lineno, obj in _parse_lines(text, COUNTS_SCHEMA):
        cid = _require(obj, "id", lineno, str)
        if cid in out:
            raise SerializationError(f"duplicate circuit id {cid!r}", line=lineno, field="id")
        counts = _require(obj, "counts", lineno, dict)
        shots = _require(obj, "shots", lineno, int)
        try:
            out[cid] = Counts(counts, shots, cid)
        except CountsError as exc:
            raise SerializationError(str(exc), line=lineno, field="counts") from None
    if expected_ids is not None:
        missing = [i for i in expected_ids if i not in out]
        if missing:
            raise SerializationError(f"no counts for circuit id(s) {missing}")
        extra = [i for i in out if i not in set(expected_ids)]
        if extra:
            raise SerializationError(f"unexpected circuit id(s) {extra}")
    return out
