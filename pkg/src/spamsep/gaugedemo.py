"""Non-identifiability of SPAM under unital gates, and two ways around it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .backend import Backend, CapabilityError, ExecutionRequest, SimulatorBackend
from .circuits.ir import Circuit, CompiledCircuit, gate
from .circuits.compile import with_measurement_twirl
from .liouville import GateSetModel, gauge_transform, rescaling_gauge
from .protocol import estimate_beta1, estimate_beta2, z_expectation
from .simulator import ModelError, QpuModel, SpamParams, noisy_circuit_ptm


@dataclass(frozen=True)
class QubitParams:
    s_z: float
    m_z: float


@dataclass(frozen=True)
class GaugeOrbitReport:
    x: float
    max_deviation: float
    max_gate_change: float
    original: tuple[QubitParams, ...]
    rescaled: tuple[QubitParams, ...]
    probabilities: tuple[tuple[float, ...], ...]

    @property
    def parameters_changed(self) -> bool:
        return any(
            not math.isclose(a.s_z, b.s_z) or not math.isclose(a.m_z, b.m_z)
            for a, b in zip(self.original, self.rescaled)
        )


def _z_word(q: int, n: int) -> int:
    # raw index of Z on qubit q, identity elsewhere (Z is letter 3, qubit 0 most significant)
    return 3 * 4 ** (n - 1 - q)


def _qubit_params(gs: GateSetModel, n: int) -> tuple[QubitParams, ...]:
    state = gs.states[0].coeffs
    out = []
    for q in range(n):
        # marginal outcome-0 effect of qubit q: sum of joint effects whose bit q is 0
        marginal = sum(e.coeffs for i, e in enumerate(gs.effects) if not (i >> (n - 1 - q)) & 1)
        out.append(QubitParams(float(state[_z_word(q, n)]), float(marginal[_z_word(q, n)]) / 2 ** (n - 1)))
    return tuple(out)


def gate_set_for(model: QpuModel, design: Sequence[Circuit]) -> GateSetModel:
    """Full-register gate set with one named noisy gate per design circuit."""
    return GateSetModel(
        states=(model.state_vec(),),
        effects=tuple(model.effects()),
        gates={f"c{i}": noisy_circuit_ptm(model, c) for i, c in enumerate(design)},
    )


def demonstrate_gauge_orbit(model: QpuModel, x: float, design: Sequence[Circuit]) -> GaugeOrbitReport:
    """Rescale every non-identity state component by ``x`` and effect component by ``1/x``.

    Probabilities are evaluated with the rescaled SPAM and the *original* gates, which
    is only consistent when each design gate commutes with the rescaling.  Unital
    trace-preserving gates do, so ``max_deviation`` vanishes for them; a non-unital
    gate such as amplitude damping shows up in both ``max_gate_change`` and the deviation.
    """
    if x == 0:
        raise ValueError("x must be nonzero")
    n = model.n_qubits
    for c in design:
        if c.n_qubits != n:
            raise ValueError(f"design circuit on {c.n_qubits} qubits, model has {n}")
    gs = gate_set_for(model, design)
    b = rescaling_gauge(x, n)
    moved = gauge_transform(b, gs)
    rescaled = GateSetModel(moved.states, moved.effects, gs.gates)
    gate_change = max(
        (float(np.max(np.abs(moved.gates[k].mat - gs.gates[k].mat))) for k in gs.gates), default=0.0
    )
    dev = 0.0
    probs = []
    for name in gs.gates:
        row = []
        for e in range(len(gs.effects)):
            p0 = gs.probability(0, [name], e)
            p1 = rescaled.probability(0, [name], e)
            dev = max(dev, abs(p0 - p1))
            row.append(p0)
        probs.append(tuple(row))
    return GaugeOrbitReport(
        x, dev, gate_change, _qubit_params(gs, n), _qubit_params(rescaled, n), tuple(probs)
    )


def default_design(n_qubits: int) -> list[Circuit]:
    """A handful of unital circuits: idle, X layers, Hadamards and a CZ ladder."""
    design = [
        Circuit(n_qubits, ()),
        Circuit(n_qubits, (tuple(gate("X", q) for q in range(n_qubits)),)),
        Circuit(n_qubits, (tuple(gate("H", q) for q in range(n_qubits)),)),
    ]
    if n_qubits > 1:
        ladder = [(gate("CZ", q, q + 1),) for q in range(n_qubits - 1)]
        h = tuple(gate("H", q) for q in range(n_qubits))
        design.append(Circuit(n_qubits, (h, *ladder, h)))
    return design


@dataclass(frozen=True)
class DistinguishReport:
    """Two physical models whose target qubits share ``s_Z m_Z``."""

    product: tuple[float, float]
    beta1_target: tuple[float, float]
    beta2: tuple[float, float]
    s_z_estimate: tuple[float, float]

    @property
    def distinguished(self) -> bool:
        return not math.isclose(self.s_z_estimate[0], self.s_z_estimate[1], abs_tol=1e-9)


def distinguish_by_propagation(model: QpuModel, x: float, target: int, ancilla: int) -> DistinguishReport:
    """Build the physical partner with ``s_Z -> x s_Z`` and ``m_Z -> m_Z / x`` on ``target``.

    Plain readout of the target cannot tell the two apart; the ratio of the
    propagation and reference expectation values can.
    """
    if x == 0:
        raise ValueError("x must be nonzero")
    p = model.spam[target]
    try:
        partner = SpamParams(p.s_x, p.s_y, x * p.s_z, p.m_i, p.m_x, p.m_y, p.m_z / x)
    except ModelError as exc:
        raise ModelError(f"rescaled partner is not physical for x={x}: {exc}") from None
    spam = list(model.spam)
    spam[target] = partner
    models = (model, model.with_spam(spam))
    b1t, b2, sz = [], [], []
    for m in models:
        be = SimulatorBackend(m, exact=True)
        a = estimate_beta1(be, ancilla, 1).value
        t = estimate_beta1(be, target, 1).value
        two = estimate_beta2(be, target, ancilla, 1, 4).value
        b1t.append(t)
        b2.append(two)
        sz.append(two / a)
    return DistinguishReport(
        (models[0].spam[target].s_z * models[0].spam[target].m_z, partner.s_z * partner.m_z),
        tuple(b1t),
        tuple(b2),
        tuple(sz),
    )


@dataclass(frozen=True)
class DampingEstimate:
    """``delta_m_raw = 1 - p0`` after full damping; ``delta_m_averaged`` also averages
    an X-flipped, relabelled variant, which removes the outcome bias ``m_I``."""

    p0_raw: float
    delta_m_raw: float
    delta_m_averaged: float
    std_error_raw: float
    std_error_averaged: float


def damping_circuits(n_qubits: int, qubit: int) -> list[CompiledCircuit]:
    base = CompiledCircuit(Circuit(n_qubits, ((gate("AD", qubit, param=1.0),),), (qubit,)))
    return [base, with_measurement_twirl(base, "X")]


def measure_error_via_damping(backend: Backend, qubit: int, shots: int, seed: int = 0) -> DampingEstimate:
    if not getattr(backend, "supports_damping", False):
        raise CapabilityError(f"backend {backend.name} has no amplitude-damping operation")
    req = ExecutionRequest(damping_circuits(backend.n_qubits, qubit), shots, seed, f"damping-q{qubit}")
    raw, flipped = backend.execute(req).results
    e_raw, v_raw = z_expectation(raw)
    e_flip, v_flip = z_expectation(flipped)
    p0 = 0.5 * (1.0 + e_raw)
    avg = 0.5 * (e_raw + e_flip)
    return DampingEstimate(
        p0_raw=p0,
        delta_m_raw=1.0 - p0,
        delta_m_averaged=0.5 * (1.0 - avg),
        std_error_raw=0.5 * math.sqrt(v_raw),
        std_error_averaged=0.25 * math.sqrt(v_raw + v_flip),
    )
