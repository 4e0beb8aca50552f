"""Circuit IR, propagation circuits, randomized compiling and batch serialization."""

from .cliffords import SignedPauli, conjugate, multiply_words, restore_for
from .compile import logical_ptm, merge_pauli_layers, randomized_compile, with_measurement_twirl
from .ir import (
    Circuit,
    CircuitError,
    CompiledCircuit,
    Gate,
    embed_unitary,
    gate,
    pauli_layer,
)
from .propagation import build_propagation_circuit, decompose_controlled_pauli
from .serialize import (
    BatchRecord,
    SerializationError,
    deserialize_batch,
    deserialize_counts,
    serialize_batch,
    serialize_counts,
)

__all__ = [
    "BatchRecord",
    "Circuit",
    "CircuitError",
    "CompiledCircuit",
    "Gate",
    "SerializationError",
    "SignedPauli",
    "build_propagation_circuit",
    "conjugate",
    "decompose_controlled_pauli",
    "deserialize_batch",
    "deserialize_counts",
    "embed_unitary",
    "gate",
    "logical_ptm",
    "merge_pauli_layers",
    "multiply_words",
    "pauli_layer",
    "randomized_compile",
    "restore_for",
    "serialize_batch",
    "serialize_counts",
    "with_measurement_twirl",
]
