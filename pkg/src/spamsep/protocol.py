"""Error-propagation estimation of separate preparation and measurement errors.

For a target qubit ``t`` and an independently prepared and measured ancilla ``a``:

* ``beta1(a) = s_Z(a) m_Z(a)`` is the averaged ``<M0 - M1>`` of ``a`` measured directly;
* ``beta2 = s_Z(t) s_Z(a) m_Z(a)`` is the same quantity after H, CZ(a, t), H on ``a``;
* ``beta1(t) = s_Z(t) m_Z(t)``.

So ``s_Z(t) = beta2 / beta1(a)`` and ``m_Z(t) = beta1(t) / s_Z(t)``.  Measurement
Pauli twirls (with outcome relabelling) reduce every effect to ``(1, 0, 0, m_Z)``;
random ``{I, Z}`` gates after preparation remove the transverse state components.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .backend import Backend, ExecutionRequest, derive_seed
from .circuits.compile import randomized_compile, with_measurement_twirl
from .circuits.ir import Circuit, CompiledCircuit, pauli_layer
from .circuits.propagation import build_propagation_circuit
from .liouville import Ptm, as_pauli
from .results import Counts, Distribution

MEASUREMENT_TWIRLS = ("I", "X", "Y", "Z")
MIN_BETA = 0.05
BETA_SIGMAS = 10.0


class EstimationRefused(ValueError):
    """A ratio denominator is too close to zero to divide by."""


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float = 0.0

    def __float__(self) -> float:
        return self.value


def _as_estimate(x: Estimate | float) -> Estimate:
    return x if isinstance(x, Estimate) else Estimate(float(x), 0.0)


def z_expectation(result: Counts | Distribution, position: int = 0) -> tuple[float, float]:
    """``<M0 - M1>`` on one measured bit, with its binomial variance."""
    e = 0.0
    for bits, p in result.probabilities().items():
        e += -p if bits[position] == "1" else p
    var = 0.0 if result.shots is None else max(0.0, 1.0 - e * e) / result.shots
    return e, var


def _mean_expectation(results: Sequence[Counts | Distribution]) -> Estimate:
    vals = [z_expectation(r) for r in results]
    mean = math.fsum(v for v, _ in vals) / len(vals)
    se = math.sqrt(math.fsum(var for _, var in vals)) / len(vals)
    return Estimate(mean, se)


def measurement_twirled(cc: CompiledCircuit) -> list[CompiledCircuit]:
    """The four measurement-twirl variants of a single-ancilla-readout circuit."""
    return [with_measurement_twirl(cc, t) for t in MEASUREMENT_TWIRLS]


def beta1_circuits(n_qubits: int, qubit: int) -> list[CompiledCircuit]:
    bare = CompiledCircuit(Circuit(n_qubits, (), measure=(qubit,)))
    return measurement_twirled(bare)


def estimate_beta1(backend: Backend, qubit: int, shots: int, seed: int = 0) -> Estimate:
    """Average of ``<M0 - M1>`` over the four compiled Pauli twirls before readout."""
    req = ExecutionRequest(beta1_circuits(backend.n_qubits, qubit), shots, seed, f"beta1-q{qubit}")
    return _mean_expectation(backend.execute(req).results)


def _state_averaging_layer(rng: np.random.Generator, qubits: Sequence[int], n: int) -> tuple:
    word = ["I"] * n
    for q in qubits:
        word[q] = "Z" if rng.integers(2) else "I"
    return pauli_layer("".join(word))


def propagation_circuits(
    n_qubits: int,
    p: str,
    ancilla: int,
    targets: Sequence[int],
    k: int,
    seed: int,
) -> list[CompiledCircuit]:
    """``k`` randomly compiled propagation circuits, each in four readout twirls."""
    if k < 1:
        raise ValueError("need at least one randomization")
    bare = build_propagation_circuit(p, ancilla, targets, n_qubits)
    out = []
    for j in range(k):
        rng = np.random.default_rng(derive_seed(seed, "state-avg", j))
        prep = _state_averaging_layer(rng, [ancilla, *targets], n_qubits)
        dressed = Circuit(n_qubits, (prep, *bare.moments), bare.measure, bare.meta)
        cc = randomized_compile(dressed, seed=derive_seed(seed, "rc", j))
        out.extend(measurement_twirled(cc))
    return out


def _beta2_for(
    backend: Backend, p: str, ancilla: int, targets: Sequence[int], k: int, shots: int, seed: int
) -> Estimate:
    batch = propagation_circuits(backend.n_qubits, p, ancilla, targets, k, seed)
    per_variant = max(1, shots // len(MEASUREMENT_TWIRLS))
    label = f"beta2-a{ancilla}-{p}-" + "-".join(map(str, targets))
    req = ExecutionRequest(batch, per_variant, seed, label)
    return _mean_expectation(backend.execute(req).results)


def estimate_beta2(
    backend: Backend, target: int, ancilla: int, k_randomizations: int, shots: int, seed: int = 0
) -> Estimate:
    """Ancilla ``<M0 - M1>`` after the H-CZ-H propagation step.

    ``shots`` is the budget per randomly compiled circuit, split evenly over its four
    readout twirls.
    """
    if target == ancilla:
        raise ValueError("target and ancilla must differ")
    return _beta2_for(backend, "Z", ancilla, [target], k_randomizations, shots, seed)


def _check_denominator(b: Estimate, name: str) -> None:
    threshold = max(BETA_SIGMAS * b.std_error, MIN_BETA)
    if abs(b.value) < threshold:
        raise EstimationRefused(
            f"{name} = {b.value:.4g} (se {b.std_error:.2g}) is below the stability threshold "
            f"{threshold:.3g}; the ratio is undetermined"
        )


def _ratio(num: Estimate, den: Estimate) -> Estimate:
    v = num.value / den.value
    se = math.hypot(num.std_error / den.value, num.value * den.std_error / den.value**2)
    return Estimate(v, se)


@dataclass(frozen=True)
class SpamEstimate:
    beta1_ancilla: float
    beta1_target: float
    beta2: float
    s_z: float
    m_z: float
    delta_sp: float
    delta_m: float
    std_errors: Mapping[str, float]
    gate_bound: float
    r_e_used: float
    delta_sp_bounds: tuple[float, float]
    delta_m_bounds: tuple[float, float]

    @property
    def physical(self) -> bool:
        return 0.0 <= self.delta_sp <= 1.0 and 0.0 <= self.delta_m <= 1.0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["physical"] = self.physical
        return d


def _m_interval(beta1_t: float, s_lo: float, s_hi: float) -> tuple[float, float]:
    if s_lo <= 0.0 <= s_hi:
        return -math.inf, math.inf
    ends = (beta1_t / s_lo, beta1_t / s_hi)
    return min(ends), max(ends)


def estimate_spam(
    beta1_ancilla: Estimate | float,
    beta2: Estimate | float,
    beta1_target: Estimate | float,
    r_e: float = 0.0,
) -> SpamEstimate:
    """Combine the three expectation values into preparation and measurement errors.

    ``r_e`` is the infidelity of the dressed propagation cycle; it gives the
    ``+-r_e / beta1`` gate-error envelope on ``delta_sp`` and, through
    ``m_Z = beta1(t) / s_Z``, the envelope on ``delta_m``.  Values are not clipped.
    """
    b1a, b2, b1t = _as_estimate(beta1_ancilla), _as_estimate(beta2), _as_estimate(beta1_target)
    _check_denominator(b1a, "beta1(ancilla)")
    s = _ratio(b2, b1a)
    _check_denominator(s, "s_Z")
    m = _ratio(b1t, s)
    delta_sp = 0.5 * (1.0 - s.value)
    delta_m = 0.5 * (1.0 - m.value)
    gate_bound = r_e / b1a.value
    s_half = 2.0 * r_e / abs(b1a.value)
    m_lo, m_hi = _m_interval(b1t.value, s.value - s_half, s.value + s_half)
    return SpamEstimate(
        beta1_ancilla=b1a.value,
        beta1_target=b1t.value,
        beta2=b2.value,
        s_z=s.value,
        m_z=m.value,
        delta_sp=delta_sp,
        delta_m=delta_m,
        std_errors={
            "beta1_ancilla": b1a.std_error,
            "beta1_target": b1t.std_error,
            "beta2": b2.std_error,
            "s_z": s.std_error,
            "m_z": m.std_error,
            "delta_sp": 0.5 * s.std_error,
            "delta_m": 0.5 * m.std_error,
        },
        gate_bound=gate_bound,
        r_e_used=r_e,
        delta_sp_bounds=(delta_sp - abs(gate_bound), delta_sp + abs(gate_bound)),
        delta_m_bounds=(0.5 * (1.0 - m_hi), 0.5 * (1.0 - m_lo)),
    )


@dataclass(frozen=True)
class PauliCoefficient:
    pauli: str
    value: float
    std_error: float
    bound: float
    beta1: float
    beta2: float


def probe_pauli_coefficient(
    backend: Backend,
    p: str,
    ancilla: int,
    k: int,
    shots: int,
    seed: int = 0,
    targets: Sequence[int] | None = None,
    r_e: float = 0.0,
    beta1_ancilla: Estimate | None = None,
) -> PauliCoefficient:
    """``s_P = beta2(P) / beta1(a)`` using the controlled-P propagation circuit.

    ``bound`` is the gate-error envelope ``2 r_e / beta1`` on the coefficient.
    """
    word = as_pauli(p).word
    if targets is None:
        targets = [q for q in range(backend.n_qubits) if q != ancilla][: len(word)]
    b1 = beta1_ancilla or estimate_beta1(backend, ancilla, shots, derive_seed(seed, "beta1"))
    b2 = _beta2_for(backend, word, ancilla, list(targets), k, shots, derive_seed(seed, "beta2"))
    _check_denominator(b1, "beta1(ancilla)")
    s = _ratio(b2, b1)
    return PauliCoefficient(word, s.value, s.std_error, 2.0 * r_e / abs(b1.value), b1.value, b2.value)


def effective_ptm(s_p: float) -> Ptm:
    """Ancilla channel of the propagation circuit: ``diag(1, 1, s_P, s_P)``."""
    if abs(s_p) > 1.0 + 1e-12:
        raise ValueError(f"|s_P| = {abs(s_p)} exceeds 1")
    return Ptm(np.diag([1.0, 1.0, s_p, s_p]))


def characterize_qubit(
    backend: Backend,
    target: int,
    ancilla: int,
    k: int,
    shots: int,
    seed: int = 0,
    r_e: float = 0.0,
) -> SpamEstimate:
    b1a = estimate_beta1(backend, ancilla, shots, derive_seed(seed, "beta1-ancilla"))
    b2 = estimate_beta2(backend, target, ancilla, k, shots, derive_seed(seed, "beta2"))
    b1t = estimate_beta1(backend, target, shots, derive_seed(seed, "beta1-target"))
    return estimate_spam(b1a, b2, b1t, r_e)


def default_ancillas(qubits: Sequence[int], ancilla: int) -> dict[int, int]:
    """Every target uses ``ancilla``; the ancilla itself uses the lowest other listed qubit."""
    out = {}
    for q in qubits:
        if q != ancilla:
            out[q] = ancilla
        else:
            others = [o for o in qubits if o != ancilla]
            if not others:
                raise ValueError("the ancilla needs another qubit to be characterized")
            out[q] = min(others)
    return out


@dataclass(frozen=True)
class RepetitionRow:
    repetition: int
    qubit: int
    ancilla: int
    estimate: SpamEstimate | None
    refused: str | None = None


@dataclass
class QubitSummary:
    qubit: int
    ancilla: int
    n: int
    delta_sp_mean: float
    delta_sp_std: float
    delta_sp_se: float
    delta_sp_envelope: tuple[float, float]
    delta_m_mean: float
    delta_m_std: float
    delta_m_se: float
    delta_m_envelope: tuple[float, float]
    refused: int = 0
    extras: dict = field(default_factory=dict)


def run_characterization(
    backend: Backend,
    ancillas: Mapping[int, int],
    k: int,
    shots: int,
    repetitions: int,
    seed: int,
    r_e: Mapping[tuple[int, int], float] | None = None,
    workers: int = 1,
) -> list[RepetitionRow]:
    """Repeat the per-qubit estimation; rows come back in (repetition, qubit) order."""
    r_e = r_e or {}
    jobs = [(rep, q, a) for rep in range(repetitions) for q, a in sorted(ancillas.items())]

    def one(job: tuple[int, int, int]) -> RepetitionRow:
        rep, q, a = job
        try:
            est = characterize_qubit(
                backend, q, a, k, shots, derive_seed(seed, rep, q), r_e.get((a, q), 0.0)
            )
        except EstimationRefused as exc:
            return RepetitionRow(rep, q, a, None, str(exc))
        return RepetitionRow(rep, q, a, est)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, jobs))
    return [one(j) for j in jobs]


def summarize(rows: Sequence[RepetitionRow]) -> list[QubitSummary]:
    out = []
    for q in sorted({r.qubit for r in rows}):
        mine = [r for r in rows if r.qubit == q]
        ests = [r.estimate for r in mine if r.estimate is not None]
        if not ests:
            nan = float("nan")
            out.append(
                QubitSummary(q, mine[0].ancilla, 0, nan, nan, nan, (nan, nan), nan, nan, nan, (nan, nan), len(mine))
            )
            continue
        sp = np.array([e.delta_sp for e in ests])
        dm = np.array([e.delta_m for e in ests])
        ddof = 1 if len(ests) > 1 else 0
        sp_se = math.sqrt(math.fsum(e.std_errors["delta_sp"] ** 2 for e in ests)) / len(ests)
        dm_se = math.sqrt(math.fsum(e.std_errors["delta_m"] ** 2 for e in ests)) / len(ests)
        out.append(
            QubitSummary(
                qubit=q,
                ancilla=mine[0].ancilla,
                n=len(ests),
                delta_sp_mean=float(sp.mean()),
                delta_sp_std=float(sp.std(ddof=ddof)),
                delta_sp_se=sp_se,
                delta_sp_envelope=(
                    min(e.delta_sp_bounds[0] for e in ests),
                    max(e.delta_sp_bounds[1] for e in ests),
                ),
                delta_m_mean=float(dm.mean()),
                delta_m_std=float(dm.std(ddof=ddof)),
                delta_m_se=dm_se,
                delta_m_envelope=(
                    min(e.delta_m_bounds[0] for e in ests),
                    max(e.delta_m_bounds[1] for e in ests),
                ),
                refused=len(mine) - len(ests),
            )
        )
    return out
