"""Randomized compiling: Pauli twirls around hard cycles, restores folded into easy layers."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..liouville import PAULI_LABELS, Ptm
from .cliffords import multiply_words, restore_for
from .ir import Circuit, CircuitError, CompiledCircuit, Gate, pauli_layer


def _is_pauli_layer(moment: Sequence[Gate]) -> bool:
    return all(g.is_pauli for g in moment)


def _layer_word(moment: Sequence[Gate], n: int) -> str:
    word = ["I"] * n
    for g in moment:
        word[g.qubits[0]] = g.kind
    return "".join(word)


def merge_pauli_layers(moments: Sequence[Sequence[Gate]], n_qubits: int) -> tuple[tuple[Gate, ...], ...]:
    """Multiply adjacent all-Pauli moments together and drop empty ones."""
    out: list[tuple[Gate, ...]] = []
    for moment in moments:
        moment = tuple(moment)
        if _is_pauli_layer(moment) and out and _is_pauli_layer(out[-1]):
            word = multiply_words(_layer_word(moment, n_qubits), _layer_word(out[-1], n_qubits))
            out[-1] = pauli_layer(word)
        else:
            out.append(tuple(g for g in moment if g.kind != "I") if _is_pauli_layer(moment) else moment)
        if out and not out[-1]:
            out.pop()
    return tuple(out)


def _random_word(rng: np.random.Generator, n: int) -> str:
    return "".join(PAULI_LABELS[i] for i in rng.integers(0, 4, size=n))


def randomized_compile(
    c: Circuit,
    seed: int | None = None,
    measurement_twirl: bool = False,
    twirls: Sequence[str] | None = None,
) -> CompiledCircuit:
    """Dress every hard cycle with a uniformly random Pauli twirl and its restore.

    ``twirls`` fixes the twirl words (one per hard cycle) instead of drawing them.
    With ``measurement_twirl`` a random Pauli is also appended before measurement and
    undone by outcome relabelling.
    """
    rng = np.random.default_rng(seed)
    n = c.n_qubits
    hard_count = 0
    moments: list[tuple[Gate, ...]] = []
    used_twirls: list[str] = []
    restores: list[str] = []
    for i, moment in enumerate(c.moments):
        hard = [g for g in moment if g.is_hard]
        if not hard:
            moments.append(moment)
            continue
        if any(not g.is_hard and g.kind != "I" for g in moment):
            raise CircuitError(f"moment {i} mixes hard and easy gates")
        if twirls is not None:
            if hard_count >= len(twirls):
                raise CircuitError("not enough twirl words for the hard cycles")
            t = twirls[hard_count].upper()
            if len(t) != n:
                raise CircuitError(f"twirl word {t} does not cover {n} qubits")
        else:
            t = _random_word(rng, n)
        hard_count += 1
        r = restore_for(moment, t)
        moments.extend([pauli_layer(t), moment, pauli_layer(r.word)])
        used_twirls.append(t)
        restores.append(r.word)
    meta = dict(c.meta)
    meta["twirls"] = used_twirls
    meta["restores"] = restores
    compiled = CompiledCircuit(
        Circuit(n, merge_pauli_layers(moments, n), c.measure, meta), seed=seed
    )
    if measurement_twirl:
        frame = "".join(PAULI_LABELS[i] for i in rng.integers(0, 4, size=len(c.measure)))
        compiled = with_measurement_twirl(compiled, frame)
    return compiled


def with_measurement_twirl(cc: CompiledCircuit, word: str) -> CompiledCircuit:
    """Apply ``word`` (one letter per measured qubit) just before measurement.

    X and Y flip the outcome, so the corresponding bits are relabelled.
    """
    c = cc.circuit
    word = word.upper()
    if len(word) != len(c.measure):
        raise CircuitError("measurement twirl needs one letter per measured qubit")
    full = ["I"] * c.n_qubits
    for ch, q in zip(word, c.measure):
        full[q] = ch
    moments = merge_pauli_layers(c.moments + (pauli_layer("".join(full)),), c.n_qubits)
    frame = multiply_words(word, cc.frame)
    mask = tuple(ch in "XY" for ch in frame)
    return CompiledCircuit(Circuit(c.n_qubits, moments, c.measure, c.meta), mask, cc.seed, frame)


def logical_ptm(cc: CompiledCircuit) -> Ptm:
    """PTM of the compiled circuit with the measurement frame undone."""
    c = cc.circuit
    full = ["I"] * c.n_qubits
    for ch, q in zip(cc.frame, c.measure):
        full[q] = ch
    undo = Circuit(c.n_qubits, (pauli_layer("".join(full)),) if "".join(full).strip("I") else ())
    return undo.ptm() @ c.ptm()
