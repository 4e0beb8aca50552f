"""Ground-truth noisy QPU model and shot-sampled circuit execution.

The register is evolved as a Pauli-Liouville vector.  Preparation and
measurement are products of per-qubit parameters; every gate is its ideal PTM
followed by the model's error PTM for that gate, if one is configured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .circuits.ir import Circuit, CompiledCircuit, Gate
from .liouville import Effect, Ptm, StateVec, apply_local
from .results import Counts, Distribution

PHYS_TOL = 1e-12


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class SpamParams:
    """Single-qubit preparation Bloch vector and outcome-0 effect parameters."""

    s_x: float = 0.0
    s_y: float = 0.0
    s_z: float = 1.0
    m_i: float = 0.0
    m_x: float = 0.0
    m_y: float = 0.0
    m_z: float = 1.0

    def __post_init__(self) -> None:
        if math.hypot(self.s_x, self.s_y, self.s_z) > 1.0 + PHYS_TOL:
            raise ModelError(f"state Bloch vector longer than 1: {self}")
        m_len = math.hypot(self.m_x, self.m_y, self.m_z)
        if m_len > min(1.0 + self.m_i, 1.0 - self.m_i) + PHYS_TOL:
            raise ModelError(f"effects are not positive semidefinite: {self}")

    @classmethod
    def from_errors(cls, delta_sp: float, delta_m: float, m_i: float = 0.0) -> "SpamParams":
        return cls(s_z=1.0 - 2.0 * delta_sp, m_i=m_i, m_z=1.0 - 2.0 * delta_m)

    @classmethod
    def random(
        cls,
        rng: np.random.Generator,
        max_delta_sp: float = 0.1,
        max_delta_m: float = 0.1,
        transverse: float = 0.05,
        bias: float = 0.05,
    ) -> "SpamParams":
        """A random physical parameter set with Z-errors below the given rates."""
        s_z = 1.0 - 2.0 * rng.uniform(0.0, max_delta_sp)
        s_room = math.sqrt(max(0.0, 1.0 - s_z**2))
        s_x, s_y = rng.uniform(-1.0, 1.0, 2) * min(transverse, s_room / 2)
        m_z = 1.0 - 2.0 * rng.uniform(0.0, max_delta_m)
        m_i = rng.uniform(-bias, bias)
        room = min(1.0 + m_i, 1.0 - m_i)
        if abs(m_z) > room:
            m_i = math.copysign(1.0 - abs(m_z), m_i)
            room = 1.0 - abs(m_i)
        m_room = math.sqrt(max(0.0, room**2 - m_z**2))
        m_x, m_y = rng.uniform(-1.0, 1.0, 2) * min(transverse, m_room / 2)
        return cls(s_x, s_y, s_z, m_i, m_x, m_y, m_z)

    @property
    def delta_sp(self) -> float:
        return 0.5 * (1.0 - self.s_z)

    @property
    def delta_m(self) -> float:
        return 0.5 * (1.0 - self.m_z)

    def state(self) -> StateVec:
        return StateVec.from_bloch(self.s_x, self.s_y, self.s_z)

    def effect0(self) -> Effect:
        return Effect.from_params(self.m_i, self.m_x, self.m_y, self.m_z)


NoiseKey = tuple[str, tuple[int, ...]]


@dataclass(frozen=True)
class QpuModel:
    """Per-qubit SPAM plus gate error channels.

    ``gate_noise`` is keyed by gate kind and applies wherever that gate appears;
    ``noise_overrides`` keyed by ``(kind, qubits)`` takes precedence for one
    placement.  Kinds without an entry are ideal.
    """

    spam: tuple[SpamParams, ...]
    gate_noise: Mapping[str, Ptm] = field(default_factory=dict)
    noise_overrides: Mapping[NoiseKey, Ptm] = field(default_factory=dict)
    ancilla: int | None = None

    def __post_init__(self) -> None:
        spam = tuple(self.spam)
        if not spam:
            raise ModelError("model needs at least one qubit")
        object.__setattr__(self, "spam", spam)
        noise = {k.upper(): v for k, v in self.gate_noise.items()}
        overrides = {(k.upper(), tuple(q)): v for (k, q), v in self.noise_overrides.items()}
        for key, ptm in [*noise.items(), *overrides.items()]:
            if not ptm.is_trace_preserving(atol=1e-10):
                raise ModelError(f"noise for {key} is not trace preserving")
        object.__setattr__(self, "gate_noise", noise)
        object.__setattr__(self, "noise_overrides", overrides)
        if self.ancilla is not None and not 0 <= self.ancilla < len(spam):
            raise ModelError(f"ancilla {self.ancilla} out of range")

    @property
    def n_qubits(self) -> int:
        return len(self.spam)

    @classmethod
    def ideal(cls, n_qubits: int, **kwargs) -> "QpuModel":
        return cls(tuple(SpamParams() for _ in range(n_qubits)), **kwargs)

    def with_spam(self, spam: Sequence[SpamParams]) -> "QpuModel":
        return QpuModel(tuple(spam), self.gate_noise, self.noise_overrides, self.ancilla)

    def noise_for(self, g: Gate) -> Ptm | None:
        return self.noise_overrides.get((g.kind, g.qubits), self.gate_noise.get(g.kind))

    def state_vec(self, qubits: Sequence[int] | None = None) -> StateVec:
        qubits = range(self.n_qubits) if qubits is None else qubits
        vec = np.ones(1)
        for q in qubits:
            vec = np.kron(vec, self.spam[q].state().coeffs)
        return StateVec(vec)

    def effects(self, qubits: Sequence[int] | None = None) -> list[Effect]:
        """Joint POVM elements in outcome order (first qubit most significant)."""
        qubits = list(range(self.n_qubits) if qubits is None else qubits)
        out = [np.ones(1)]
        for q in qubits:
            m0 = self.spam[q].effect0()
            pair = (m0.coeffs, m0.complement().coeffs)
            out = [np.kron(a, b) for a in out for b in pair]
        return [Effect(e) for e in out]


_IDENTITY_ROW = np.array([[2.0, 0.0, 0.0, 0.0]])


def _as_compiled(c: CompiledCircuit | Circuit) -> CompiledCircuit:
    return c if isinstance(c, CompiledCircuit) else CompiledCircuit(c)


def _outcome_tensor(model: QpuModel, cc: CompiledCircuit) -> np.ndarray:
    circuit = cc.circuit
    if circuit.n_qubits > model.n_qubits:
        raise ModelError(
            f"circuit uses {circuit.n_qubits} qubits but the model has {model.n_qubits}"
        )
    if not circuit.measure:
        raise ModelError("circuit measures no qubits")
    active = circuit.active_qubits()
    local = {q: i for i, q in enumerate(active)}
    n = len(active)
    vec = model.state_vec(active).coeffs
    for g in circuit.gates():
        qs = [local[q] for q in g.qubits]
        vec = apply_local(vec, g.ptm().mat, qs, n)
        noise = model.noise_for(g)
        if noise is not None:
            if noise.n_qubits != len(qs):
                raise ModelError(f"noise for {g.kind} acts on {noise.n_qubits} qubits, gate on {len(qs)}")
            vec = apply_local(vec, noise.mat, qs, n)
    t = vec.reshape((4,) * n)
    measured = set(circuit.measure)
    for q in active:
        if q in measured:
            m0 = model.spam[q].effect0()
            rows = np.stack([m0.coeffs, m0.complement().coeffs])
        else:
            rows = _IDENTITY_ROW
        # contract the leading (4,) axis, append the outcome axis at the back
        t = np.moveaxis(np.tensordot(rows, t, axes=([1], [0])), 0, -1)
    t = t.reshape([2] * len(measured))
    order = sorted(measured)
    t = np.transpose(t, [order.index(q) for q in circuit.measure]) / 2**n
    for axis, flip in enumerate(cc.relabel_mask):
        if flip:
            t = np.flip(t, axis=axis)
    return t


def noisy_circuit_ptm(model: QpuModel, c: Circuit) -> Ptm:
    """Full-register PTM of ``c`` with the model's gate noise."""
    n = c.n_qubits
    mat = np.eye(4**n)
    for g in c.gates():
        mat = apply_local(mat, g.ptm().mat, g.qubits, n)
        noise = model.noise_for(g)
        if noise is not None:
            mat = apply_local(mat, noise.mat, g.qubits, n)
    return Ptm(mat)


def _distribution_array(model: QpuModel, cc: CompiledCircuit) -> np.ndarray:
    p = _outcome_tensor(model, cc).ravel()
    if np.min(p) < -1e-9 or abs(p.sum() - 1.0) > 1e-9:
        raise ModelError("model produced an invalid outcome distribution")
    return np.clip(p, 0.0, None)


def _bitstrings(k: int) -> list[str]:
    return [format(i, f"0{k}b") for i in range(2**k)]


def exact_probabilities(model: QpuModel, c: CompiledCircuit | Circuit) -> dict[str, float]:
    cc = _as_compiled(c)
    p = _distribution_array(model, cc)
    return dict(zip(_bitstrings(len(cc.circuit.measure)), p.tolist()))


def exact_distribution(model: QpuModel, c: CompiledCircuit | Circuit, circuit_id: str | None = None) -> Distribution:
    return Distribution(exact_probabilities(model, c), circuit_id)


def run_circuit(
    model: QpuModel,
    c: CompiledCircuit | Circuit,
    shots: int,
    seed: int | Sequence[int] | np.random.SeedSequence | None = None,
    circuit_id: str | None = None,
) -> Counts:
    """Sample ``shots`` outcomes by inverse-CDF lookup on the exact distribution."""
    if shots < 0:
        raise ValueError("shots must be nonnegative")
    cc = _as_compiled(c)
    p = _distribution_array(model, cc)
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    rng = np.random.default_rng(seed)
    idx = np.searchsorted(cdf, rng.random(shots), side="right")
    hist = np.bincount(np.minimum(idx, p.size - 1), minlength=p.size)
    keys = _bitstrings(len(cc.circuit.measure))
    return Counts({k: int(v) for k, v in zip(keys, hist) if v}, shots, circuit_id)


def spam_error_vector(
    model: QpuModel,
    ideal_rho: StateVec,
    ideal_effects: Sequence[Effect],
    qubits: Sequence[int] | None = None,
) -> np.ndarray:
    """``delta_i = Tr[rho M_i] - Tr[rho~ M~_i]`` over the joint outcomes of ``qubits``.

    ``ideal_effects`` are listed in outcome order and must sum to the identity.
    """
    qubits = list(range(model.n_qubits) if qubits is None else qubits)
    n = len(qubits)
    if ideal_rho.n_qubits != n or len(ideal_effects) != 2**n:
        raise ModelError(f"need a {n}-qubit state and {2**n} ideal effects")
    total = sum(e.coeffs for e in ideal_effects)
    if not np.allclose(total, Effect.identity(n).coeffs, atol=1e-12):
        raise ModelError("ideal effects do not form a POVM")
    real_rho = model.state_vec(qubits)
    real_effects = model.effects(qubits)
    scale = 2.0**n
    return np.array(
        [
            (m.coeffs @ ideal_rho.coeffs - mr.coeffs @ real_rho.coeffs) / scale
            for m, mr in zip(ideal_effects, real_effects)
        ]
    )


def ideal_computational_effects(n_qubits: int) -> list[Effect]:
    return QpuModel.ideal(n_qubits).effects()

