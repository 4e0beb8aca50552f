"""Noise channels and the fidelity / distance measures used by the error bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .liouville import (
    LiouvilleError,
    PauliString,
    Ptm,
    StateVec,
    all_paulis,
    as_pauli,
)

PROB_TOL = 1e-12


@dataclass(frozen=True)
class PauliChannel:
    """``rho -> sum_P mu(P) P rho P``."""

    probs: Mapping[str, float]

    def __post_init__(self) -> None:
        if not self.probs:
            raise LiouvilleError("empty Pauli channel")
        clean: dict[str, float] = {}
        n = None
        for key, val in self.probs.items():
            p = as_pauli(key)
            if n is None:
                n = len(p)
            elif len(p) != n:
                raise LiouvilleError("Pauli channel keys have different lengths")
            if val < -PROB_TOL:
                raise LiouvilleError(f"negative probability {val} for {p}")
            clean[p.word] = clean.get(p.word, 0.0) + float(val)
        total = sum(clean.values())
        if abs(total - 1.0) > PROB_TOL:
            raise LiouvilleError(f"Pauli channel probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", dict(sorted(clean.items(), key=lambda kv: PauliString(kv[0]))))

    @property
    def n_qubits(self) -> int:
        return len(next(iter(self.probs)))

    @property
    def identity_weight(self) -> float:
        return self.probs.get("I" * self.n_qubits, 0.0)

    @classmethod
    def depolarizing(cls, error: float, n_qubits: int = 1) -> "PauliChannel":
        """Total non-identity weight ``error`` spread equally."""
        others = 4**n_qubits - 1
        probs = {p.word: error / others for p in all_paulis(n_qubits) if not p.is_identity()}
        probs["I" * n_qubits] = 1.0 - error
        return cls(probs)

    @classmethod
    def random(cls, rng: np.random.Generator, r_e: float, n_qubits: int = 1) -> "PauliChannel":
        """A random Pauli channel with entanglement infidelity exactly ``r_e``."""
        w = rng.dirichlet(np.ones(4**n_qubits - 1)) * r_e
        probs = {"I" * n_qubits: 1.0 - r_e}
        for p, val in zip(list(all_paulis(n_qubits))[1:], w):
            probs[p.word] = float(val)
        # renormalise the float residue onto the identity
        probs["I" * n_qubits] = 1.0 - math.fsum(v for k, v in probs.items() if k != "I" * n_qubits)
        return cls(probs)


@dataclass(frozen=True)
class ChannelDistanceReport:
    r_e: float
    diamond_lower: float
    diamond_upper: float
    trace_dist_bound: float


def entanglement_infidelity(actual: Ptm, ideal: Ptm) -> float:
    """``1 - 4^{-N} Tr[ideal^T actual]``, zero when the two maps agree."""
    if actual.mat.shape != ideal.mat.shape:
        raise LiouvilleError("PTM dimension mismatch")
    d2 = actual.mat.shape[0]
    return 1.0 - float(np.sum(ideal.mat * actual.mat)) / d2


def pauli_channel_ptm(pc: PauliChannel) -> Ptm:
    n = pc.n_qubits
    diag = np.zeros(4**n)
    for j, q in enumerate(all_paulis(n)):
        diag[j] = sum(mu if q.commutes_with(p) else -mu for p, mu in pc.probs.items())
    return Ptm(np.diag(diag))


def pauli_diamond_distance(pc: PauliChannel) -> float:
    """Exact diamond distance of a Pauli channel from the identity channel."""
    return 2.0 * (1.0 - pc.identity_weight)


def diamond_bounds(r_e: float, n_qubits: int) -> tuple[float, float]:
    """Lower and upper diamond-distance bounds implied by an infidelity."""
    d = 2**n_qubits
    return 2.0 * r_e, 2.0 * d * math.sqrt(max(r_e, 0.0))


def distance_report(actual: Ptm, ideal: Ptm) -> ChannelDistanceReport:
    r_e = entanglement_infidelity(actual, ideal)
    lo, hi = diamond_bounds(r_e, actual.n_qubits)
    # after Pauli twirling the lower bound is attained, so it also bounds the
    # trace distance of any reduced output state
    return ChannelDistanceReport(r_e=r_e, diamond_lower=lo, diamond_upper=hi, trace_dist_bound=lo)


def amplitude_damping_ptm(omega: float) -> Ptm:
    if not 0.0 <= omega <= 1.0:
        raise LiouvilleError(f"damping strength {omega} outside [0, 1]")
    c = math.sqrt(1.0 - omega)
    return Ptm(
        np.array(
            [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, c, 0.0, 0.0],
                [0.0, 0.0, c, 0.0],
                [omega, 0.0, 0.0, 1.0 - omega],
            ]
        )
    )


def amplitude_damping_kraus(omega: float) -> list[np.ndarray]:
    return [
        np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - omega)]]),
        np.array([[0.0, math.sqrt(omega)], [0.0, 0.0]]),
    ]


def trace_distance_1q(a: StateVec, b: StateVec) -> float:
    """Trace norm ``||a - b||_1`` of two single-qubit states.

    Equals the Euclidean distance between their Bloch vectors.
    """
    if a.n_qubits != 1 or b.n_qubits != 1:
        raise LiouvilleError("trace_distance_1q needs single-qubit states")
    return float(np.linalg.norm(a.coeffs[1:] - b.coeffs[1:]))


def beta2_perturbation_bound(m_z: float, s_z_ideal: float, s_z_actual: float) -> float:
    """Shift in the propagated expectation caused by a shifted ancilla Z component."""
    if abs(m_z) > 1.0 + PROB_TOL:
        raise LiouvilleError(f"|m_Z| = {abs(m_z)} exceeds 1")
    delta = abs(s_z_actual - s_z_ideal)
    bound = abs(m_z) * delta
    assert bound <= delta + PROB_TOL
    return bound
