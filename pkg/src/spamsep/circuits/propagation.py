"""Error-propagation circuits: H, controlled-P, H on the ancilla, then measure it."""

from __future__ import annotations

from typing import Sequence

from ..liouville import as_pauli
from .ir import Circuit, CircuitError, Gate


def _targets_for(p: str, ancilla: int, targets: Sequence[int] | None, n_qubits: int) -> tuple[int, ...]:
    if targets is None:
        targets = [q for q in range(n_qubits) if q != ancilla][: len(p)]
    targets = tuple(int(t) for t in targets)
    if len(targets) != len(p):
        raise CircuitError(f"{len(p)}-letter word needs {len(p)} target qubits, got {targets}")
    if ancilla in targets:
        raise CircuitError(f"ancilla {ancilla} is also a target")
    return targets


def decompose_controlled_pauli(
    p: str, control: int, targets: Sequence[int] | None = None
) -> list[Gate]:
    """One ``CZ(control, t)`` per ``Z`` in ``p``.

    Positions of ``p`` map to ``targets`` (default ``0, 1, ...``).
    """
    word = as_pauli(p).word
    if any(ch not in "IZ" for ch in word):
        raise CircuitError(f"controlled-P decomposition needs a word over {{I, Z}}, got {word}")
    targets = tuple(range(len(word))) if targets is None else tuple(targets)
    if len(targets) != len(word):
        raise CircuitError("one target per letter required")
    return [Gate("CZ", (control, t)) for ch, t in zip(word, targets) if ch == "Z"]


def build_propagation_circuit(
    p: str,
    ancilla: int,
    targets: Sequence[int] | None = None,
    n_qubits: int | None = None,
    decompose: bool = True,
) -> Circuit:
    """Circuit imprinting the ``p`` coefficient of the target register onto the ancilla.

    With ``decompose`` (the default) the controlled-P is emitted as CZ gates, one
    per moment since they share the control.
    """
    word = as_pauli(p).word
    if any(ch not in "IZ" for ch in word):
        raise CircuitError(f"propagation word must be over {{I, Z}}, got {word}")
    if "Z" not in word:
        raise CircuitError("propagation word is all identity; nothing to probe")
    if n_qubits is None:
        n_qubits = max([ancilla, *(targets or [])] + [len(word)]) + 1
    targets = _targets_for(word, ancilla, targets, n_qubits)
    if decompose:
        middle = [(g,) for g in decompose_controlled_pauli(word, ancilla, targets)]
    else:
        middle = [(Gate("CP", (ancilla, *targets), pauli=word),)]
    moments = [(Gate("H", (ancilla,)),), *middle, (Gate("H", (ancilla,)),)]
    return Circuit(
        n_qubits,
        tuple(moments),
        measure=(ancilla,),
        meta={"probe": word, "ancilla": ancilla, "targets": list(targets)},
    )


def controlled_pauli_weight(p: str) -> int:
    return as_pauli(p).weight
