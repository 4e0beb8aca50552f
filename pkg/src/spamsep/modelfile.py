"""YAML model files for the simulator.

Example::

    schema_version: 1
    ancilla: 0
    qubits:
      - {delta_sp: 0.02, delta_m: 0.05}
      - {s: [0.0, 0.0, 0.96], m_i: 0.01, m: [0.0, 0.0, 0.9]}
      - ideal
    gate_noise:
      CZ: {pauli: {II: 0.99, XI: 0.005, IZ: 0.005}}
      "CZ 1 2": {depolarizing: 0.02}
      H: {amplitude_damping: 0.001}
      X: {ptm: [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0.99, 0], [0, 0, 0, 0.99]]}

A gate-noise key is either a gate kind (applies everywhere) or a kind followed
by its qubits (applies to that placement only).
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from .channels import PauliChannel, amplitude_damping_ptm, pauli_channel_ptm
from .liouville import LiouvilleError, Ptm
from .simulator import ModelError, QpuModel, SpamParams

SCHEMA_VERSION = 1


def _spam_from(entry: Any, where: str) -> SpamParams:
    if entry in (None, "ideal"):
        return SpamParams()
    if not isinstance(entry, Mapping):
        raise ModelError(f"{where}: expected a mapping or 'ideal'")
    keys = set(entry)
    try:
        if keys & {"delta_sp", "delta_m"}:
            if keys & {"s", "m"}:
                raise ModelError(f"{where}: give either delta_sp/delta_m or s/m, not both")
            return SpamParams.from_errors(
                float(entry.get("delta_sp", 0.0)),
                float(entry.get("delta_m", 0.0)),
                float(entry.get("m_i", 0.0)),
            )
        s = [float(v) for v in entry.get("s", (0.0, 0.0, 1.0))]
        m = [float(v) for v in entry.get("m", (0.0, 0.0, 1.0))]
        if len(s) != 3 or len(m) != 3:
            raise ModelError(f"{where}: s and m need three components")
        return SpamParams(*s, float(entry.get("m_i", 0.0)), *m)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"{where}: {exc}") from None


def channel_from_spec(spec: Any, where: str = "channel") -> Ptm:
    if not isinstance(spec, Mapping) or len(spec) != 1:
        raise ModelError(f"{where}: expected exactly one of pauli / depolarizing / amplitude_damping / ptm")
    (kind, val), = spec.items()
    try:
        if kind == "pauli":
            return pauli_channel_ptm(PauliChannel({str(k): float(v) for k, v in val.items()}))
        if kind == "depolarizing":
            if isinstance(val, Mapping):
                return pauli_channel_ptm(PauliChannel.depolarizing(float(val["error"]), int(val["n_qubits"])))
            return pauli_channel_ptm(PauliChannel.depolarizing(float(val), 1))
        if kind == "amplitude_damping":
            return amplitude_damping_ptm(float(val))
        if kind == "ptm":
            return Ptm(np.array(val, dtype=float))
    except (LiouvilleError, KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"{where}: {exc}") from None
    raise ModelError(f"{where}: unknown channel type {kind!r}")


def model_from_dict(doc: Mapping[str, Any]) -> QpuModel:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ModelError(f"schema_version: expected {SCHEMA_VERSION}, got {doc.get('schema_version')!r}")
    qubits = doc.get("qubits")
    if isinstance(qubits, int):
        spam = [SpamParams() for _ in range(qubits)]
    elif isinstance(qubits, list) and qubits:
        spam = [_spam_from(e, f"qubits[{i}]") for i, e in enumerate(qubits)]
    else:
        raise ModelError("qubits: expected a non-empty list or a count")
    noise: dict[str, Ptm] = {}
    overrides: dict[tuple[str, tuple[int, ...]], Ptm] = {}
    for key, spec in (doc.get("gate_noise") or {}).items():
        parts = str(key).split()
        ptm = channel_from_spec(spec, f"gate_noise[{key!r}]")
        if len(parts) == 1:
            noise[parts[0].upper()] = ptm
        else:
            try:
                overrides[(parts[0].upper(), tuple(int(q) for q in parts[1:]))] = ptm
            except ValueError:
                raise ModelError(f"gate_noise[{key!r}]: qubit indices must be integers") from None
    return QpuModel(tuple(spam), noise, overrides, doc.get("ancilla"))


def load_model(path: str | Path) -> QpuModel:
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, Mapping):
        raise ModelError(f"{path}: model file must hold a mapping")
    return model_from_dict(doc)


def model_to_dict(model: QpuModel) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "qubits": [
            {"s": [p.s_x, p.s_y, p.s_z], "m_i": p.m_i, "m": [p.m_x, p.m_y, p.m_z]} for p in model.spam
        ],
    }
    if model.ancilla is not None:
        doc["ancilla"] = model.ancilla
    noise = {k: {"ptm": v.mat.tolist()} for k, v in model.gate_noise.items()}
    noise.update({" ".join([k, *map(str, q)]): {"ptm": v.mat.tolist()} for (k, q), v in model.noise_overrides.items()})
    if noise:
        doc["gate_noise"] = noise
    return doc


def save_model(model: QpuModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(model_to_dict(model), fh, sort_keys=False)
