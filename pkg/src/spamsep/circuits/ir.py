"""Gate and circuit intermediate representation."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np

from ..channels import amplitude_damping_ptm
from ..liouville import Ptm, apply_local, ptm_of_unitary

PAULI_GATES = ("I", "X", "Y", "Z")
ONE_QUBIT_CLIFFORDS = PAULI_GATES + ("H", "S", "SDG")
TWO_QUBIT_GATES = ("CZ", "CNOT")
CONTROLLED_PAULI = "CP"
AMPLITUDE_DAMPING = "AD"
GATE_KINDS = ONE_QUBIT_CLIFFORDS + TWO_QUBIT_GATES + (CONTROLLED_PAULI, AMPLITUDE_DAMPING)


class CircuitError(ValueError):
    pass


_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_UNITARIES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    "H": _H,
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}


@dataclass(frozen=True)
class Gate:
    """One gate application.

    ``CP`` is a controlled Pauli: ``qubits = (control, *targets)`` and ``pauli`` is a
    word over ``{I, Z}`` with one letter per target.  ``AD`` is amplitude damping with
    strength ``param``; it is a simulator-only, non-unitary operation.
    """

    kind: str
    qubits: tuple[int, ...]
    pauli: str | None = None
    param: float | None = None

    def __post_init__(self) -> None:
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if kind not in GATE_KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"{kind} repeats a qubit: {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise CircuitError(f"negative qubit index in {kind}")
        if kind in ONE_QUBIT_CLIFFORDS or kind == AMPLITUDE_DAMPING:
            arity = 1
        elif kind in TWO_QUBIT_GATES:
            arity = 2
        else:
            if not self.pauli or any(ch not in "IZ" for ch in self.pauli.upper()):
                raise CircuitError(f"CP needs a word over {{I, Z}}, got {self.pauli!r}")
            object.__setattr__(self, "pauli", self.pauli.upper())
            arity = 1 + len(self.pauli)
        if len(self.qubits) != arity:
            raise CircuitError(f"{kind} takes {arity} qubit(s), got {len(self.qubits)}")
        if kind == AMPLITUDE_DAMPING:
            if self.param is None or not 0.0 <= self.param <= 1.0:
                raise CircuitError("AD needs a damping strength in [0, 1]")
        elif self.param is not None:
            raise CircuitError(f"{kind} takes no parameter")
        if kind != CONTROLLED_PAULI and self.pauli is not None:
            raise CircuitError(f"{kind} takes no Pauli word")

    @property
    def is_hard(self) -> bool:
        return self.kind in TWO_QUBIT_GATES or self.kind == CONTROLLED_PAULI

    @property
    def is_pauli(self) -> bool:
        return self.kind in PAULI_GATES

    def unitary(self) -> np.ndarray:
        """Unitary on ``self.qubits`` in that order."""
        if self.kind == AMPLITUDE_DAMPING:
            raise CircuitError("amplitude damping has no unitary")
        if self.kind == CONTROLLED_PAULI:
            return _controlled_pauli_unitary(self.pauli)
        return _UNITARIES[self.kind]

    def ptm(self) -> Ptm:
        return _local_ptm(self.kind, self.pauli, self.param)


def _controlled_pauli_unitary(word: str) -> np.ndarray:
    dim = 2 ** len(word)
    diag = np.ones(dim, dtype=complex)
    for b in range(dim):
        bits = format(b, f"0{len(word)}b")
        parity = sum(ch == "Z" and bit == "1" for ch, bit in zip(word, bits)) % 2
        diag[b] = -1 if parity else 1
    return np.block(
        [[np.eye(dim, dtype=complex), np.zeros((dim, dim))], [np.zeros((dim, dim)), np.diag(diag)]]
    )


@functools.lru_cache(maxsize=None)
def _local_ptm(kind: str, pauli: str | None, param: float | None) -> Ptm:
    if kind == AMPLITUDE_DAMPING:
        return amplitude_damping_ptm(param)
    if kind == CONTROLLED_PAULI:
        return ptm_of_unitary(_controlled_pauli_unitary(pauli))
    return ptm_of_unitary(_UNITARIES[kind])


def gate(kind: str, *qubits: int, pauli: str | None = None, param: float | None = None) -> Gate:
    return Gate(kind, tuple(qubits), pauli=pauli, param=param)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    moments: tuple[tuple[Gate, ...], ...] = ()
    measure: tuple[int, ...] | None = None
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise CircuitError("circuit needs at least one qubit")
        moments = tuple(tuple(m) for m in self.moments)
        for i, moment in enumerate(moments):
            seen: set[int] = set()
            for g in moment:
                if not isinstance(g, Gate):
                    raise CircuitError(f"moment {i} holds a non-gate {g!r}")
                for q in g.qubits:
                    if q >= self.n_qubits:
                        raise CircuitError(f"moment {i}: qubit {q} out of range")
                    if q in seen:
                        raise CircuitError(f"moment {i}: qubit {q} used twice")
                    seen.add(q)
        object.__setattr__(self, "moments", moments)
        measure = tuple(range(self.n_qubits)) if self.measure is None else tuple(self.measure)
        if len(set(measure)) != len(measure) or any(not 0 <= q < self.n_qubits for q in measure):
            raise CircuitError(f"bad measured-qubit list {measure}")
        object.__setattr__(self, "measure", measure)
        object.__setattr__(self, "meta", dict(self.meta))

    def gates(self) -> Iterator[Gate]:
        for moment in self.moments:
            yield from moment

    def active_qubits(self) -> tuple[int, ...]:
        used = set(self.measure)
        for g in self.gates():
            used.update(g.qubits)
        return tuple(sorted(used))

    def append(self, *moments: Iterable[Gate]) -> "Circuit":
        new = tuple(tuple(m) for m in moments if tuple(m))
        return Circuit(self.n_qubits, self.moments + new, self.measure, self.meta)

    def with_measure(self, measure: Sequence[int]) -> "Circuit":
        return Circuit(self.n_qubits, self.moments, tuple(measure), self.meta)

    def unitary(self) -> np.ndarray:
        """Full-register unitary; qubit 0 is the most significant tensor factor."""
        n = self.n_qubits
        u = np.eye(2**n, dtype=complex)
        for g in self.gates():
            u = _embed_unitary(g.unitary(), g.qubits, n) @ u
        return u

    def ptm(self) -> Ptm:
        """Ideal full-register PTM."""
        n = self.n_qubits
        mat = np.eye(4**n)
        for g in self.gates():
            mat = apply_local(mat, g.ptm().mat, g.qubits, n)
        return Ptm(mat)


def _embed_unitary(u: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    k = len(qubits)
    op = u.reshape((2,) * (2 * k))
    full = np.eye(2**n, dtype=complex).reshape((2,) * (2 * n))
    out = np.tensordot(op, full, axes=(list(range(k, 2 * k)), list(qubits)))
    out = np.moveaxis(out, list(range(k)), list(qubits))
    return out.reshape(2**n, 2**n)


def embed_unitary(u: np.ndarray, qubits: Sequence[int], n_qubits: int) -> np.ndarray:
    return _embed_unitary(np.asarray(u, dtype=complex), qubits, n_qubits)


def pauli_layer(word: str, qubits: Sequence[int] | None = None) -> tuple[Gate, ...]:
    """Single-qubit Pauli gates for ``word``; identities are dropped."""
    qubits = range(len(word)) if qubits is None else qubits
    return tuple(Gate(ch, (q,)) for ch, q in zip(word.upper(), qubits) if ch != "I")


@dataclass(frozen=True)
class CompiledCircuit:
    """A circuit ready to run plus outcome bookkeeping.

    ``relabel_mask[i]`` flips the reported bit of ``circuit.measure[i]``.  ``frame``
    is the trailing Pauli (one letter per measured qubit) that the mask undoes.
    """

    circuit: Circuit
    relabel_mask: tuple[bool, ...] | None = None
    seed: int | None = None
    frame: str | None = None

    def __post_init__(self) -> None:
        k = len(self.circuit.measure)
        mask = (False,) * k if self.relabel_mask is None else tuple(bool(b) for b in self.relabel_mask)
        if len(mask) != k:
            raise CircuitError("relabel mask length differs from the measured-qubit count")
        object.__setattr__(self, "relabel_mask", mask)
        frame = "I" * k if self.frame is None else self.frame.upper()
        if len(frame) != k or any(ch not in "IXYZ" for ch in frame):
            raise CircuitError(f"bad measurement frame {self.frame!r}")
        object.__setattr__(self, "frame", frame)

    @property
    def n_qubits(self) -> int:
        return self.circuit.n_qubits

    @classmethod
    def bare(cls, circuit: Circuit) -> "CompiledCircuit":
        return cls(circuit)
