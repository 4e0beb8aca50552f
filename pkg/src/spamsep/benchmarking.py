"""Cycle benchmarking of a dressed hard cycle.

For each probe Pauli ``P`` and length ``m`` a sequence prepares a ``+1`` eigenstate
of ``P``, applies a random Pauli layer, then ``m`` rounds of (cycle, random Pauli
layer), and measures in the eigenbasis of the tracked Pauli ``U P U^dagger``.
The signed parity decays as ``A_P p_P^m``; SPAM only enters ``A_P``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .backend import Backend, ExecutionRequest, derive_seed
from .circuits.cliffords import SignedPauli, conjugate
from .circuits.ir import Circuit, CompiledCircuit, Gate, gate, pauli_layer
from .liouville import PAULI_LABELS, all_paulis, as_pauli
from .results import Counts, Distribution

MIN_EXPECTATION = 0.05
DEFAULT_LENGTHS = (0, 2, 8)
MAX_FULL_PROBE_QUBITS = 2
RANDOM_PROBES = 16


class CbError(ValueError):
    pass


def _support(cycle: Circuit) -> tuple[int, ...]:
    return tuple(sorted({q for g in cycle.gates() for q in g.qubits}))


@dataclass(frozen=True)
class CbConfig:
    cycle: Circuit
    lengths: tuple[int, ...] = DEFAULT_LENGTHS
    sequences_per_length: int = 30
    paulis: tuple[str, ...] | None = None
    shots: int = 8192
    seed: int = 0

    def __post_init__(self) -> None:
        lengths = tuple(int(m) for m in self.lengths)
        if any(b <= a for a, b in zip(lengths, lengths[1:])) or (lengths and lengths[0] < 0):
            raise CbError(f"lengths must be nonnegative and strictly increasing, got {list(lengths)}")
        if sum(m > 0 for m in lengths) < 2:
            raise CbError("need at least two nonzero lengths to fit a decay")
        object.__setattr__(self, "lengths", lengths)
        if self.sequences_per_length < 1 or self.shots < 1:
            raise CbError("sequences_per_length and shots must be positive")
        support = _support(self.cycle)
        if not support:
            raise CbError("cycle has no gates")
        for g in self.cycle.gates():
            if g.kind == "AD":
                raise CbError("cycle must consist of Clifford gates")
        if self.paulis is not None:
            words = tuple(as_pauli(p).word for p in self.paulis)
            for w in words:
                if len(w) != len(support) or set(w) == {"I"}:
                    raise CbError(f"probe {w} must be a nontrivial Pauli on {len(support)} qubits")
            object.__setattr__(self, "paulis", words)

    @property
    def support(self) -> tuple[int, ...]:
        return _support(self.cycle)

    def probes(self) -> tuple[str, ...]:
        if self.paulis is not None:
            return self.paulis
        n = len(self.support)
        nontrivial = [p.word for p in all_paulis(n) if not p.is_identity()]
        if n <= MAX_FULL_PROBE_QUBITS:
            return tuple(nontrivial)
        rng = np.random.default_rng(derive_seed(self.seed, "probes"))
        pick = rng.choice(len(nontrivial), size=min(RANDOM_PROBES, len(nontrivial)), replace=False)
        return tuple(nontrivial[i] for i in sorted(pick))


@dataclass(frozen=True)
class PauliDecay:
    decay: float
    amplitude: float
    std_error: float
    means: Mapping[int, float] = field(default_factory=dict)


@dataclass(frozen=True)
class CbResult:
    r_cb: float
    std_error: float
    per_pauli_decays: Mapping[str, PauliDecay]
    fit_residuals: Mapping[str, tuple[float, ...]]


def _expand(word: str, support: Sequence[int], n: int) -> str:
    full = ["I"] * n
    for q, ch in zip(support, word):
        full[q] = ch
    return "".join(full)


def _prep_moments(word: str, support: Sequence[int]) -> list[tuple[Gate, ...]]:
    h = tuple(gate("H", q) for q, ch in zip(support, word) if ch in "XY")
    s = tuple(gate("S", q) for q, ch in zip(support, word) if ch == "Y")
    return [m for m in (h, s) if m]


def _basis_change(word: str, support: Sequence[int]) -> list[tuple[Gate, ...]]:
    sdg = tuple(gate("SDG", q) for q, ch in zip(support, word) if ch == "Y")
    h = tuple(gate("H", q) for q, ch in zip(support, word) if ch in "XY")
    return [m for m in (sdg, h) if m]


def cb_sequence(
    cfg: CbConfig, n_qubits: int, probe: str, length: int, rng: np.random.Generator
) -> tuple[CompiledCircuit, SignedPauli]:
    """One random sequence and the signed support-Pauli its ideal output is stabilized by."""
    support = cfg.support
    k = len(support)
    moments: list[tuple[Gate, ...]] = _prep_moments(probe, support)
    tracked = SignedPauli(_expand(probe, support, n_qubits))
    for i in range(length + 1):
        if i:
            moments.extend(cfg.cycle.moments)
            tracked = conjugate(cfg.cycle.gates(), tracked)
        layer = "".join(PAULI_LABELS[j] for j in rng.integers(0, 4, size=k))
        dressing = pauli_layer(_expand(layer, support, n_qubits))
        if dressing:
            moments.append(dressing)
            tracked = conjugate(dressing, tracked)
    final = "".join(tracked.word[q] for q in support)
    moments.extend(_basis_change(final, support))
    circuit = Circuit(n_qubits, tuple(moments), support, {"probe": probe, "length": length})
    return CompiledCircuit(circuit), SignedPauli(final, tracked.sign)


def signed_parity(result: Counts | Distribution, pauli: SignedPauli) -> float:
    mask = [ch != "I" for ch in pauli.word]
    total = 0.0
    for bits, p in result.probabilities().items():
        parity = sum(b == "1" for b, m in zip(bits, mask) if m) % 2
        total += -p if parity else p
    return pauli.sign * total


def fit_decay(lengths: Sequence[int], means: Sequence[float], variances: Sequence[float]) -> tuple[float, float, float, tuple[float, ...]]:
    """Unweighted log-linear fit ``log|f| = log A + m log p`` on the nonzero lengths.

    Returns ``(p, A, std_error_p, residuals)``.  ``A`` is taken from the ``m = 0``
    point when present.
    """
    pts = [(m, f, v) for m, f, v in zip(lengths, means, variances) if m > 0]
    if any(abs(f) <= MIN_EXPECTATION for _, f, _ in pts):
        bad = [m for m, f, _ in pts if abs(f) <= MIN_EXPECTATION]
        raise CbError(f"expectation at length(s) {bad} is below the noise floor {MIN_EXPECTATION}")
    if len(pts) < 2:
        raise CbError("fewer than two usable lengths")
    ms = np.array([m for m, _, _ in pts], dtype=float)
    ys = np.log(np.abs([f for _, f, _ in pts]))
    var_y = np.array([v / f**2 for _, f, v in pts])
    centred = ms - ms.mean()
    weights = centred / np.sum(centred**2)
    slope = float(weights @ ys)
    intercept = float(ys.mean() - slope * ms.mean())
    p = math.exp(slope)
    se = p * math.sqrt(float(weights**2 @ var_y))
    residuals = tuple((ys - (intercept + slope * ms)).tolist())
    zero = [f for m, f in zip(lengths, means) if m == 0]
    amplitude = abs(zero[0]) if zero else math.exp(intercept)
    return p, amplitude, se, residuals


def run_cycle_benchmark(backend: Backend, cfg: CbConfig) -> CbResult:
    n = backend.n_qubits
    if max(cfg.support) >= n:
        raise CbError(f"cycle acts on qubit {max(cfg.support)} but the backend has {n}")
    probes = cfg.probes()
    batch: list[CompiledCircuit] = []
    tracked: list[SignedPauli] = []
    index: list[tuple[str, int]] = []
    for probe in probes:
        for m in cfg.lengths:
            for j in range(cfg.sequences_per_length):
                rng = np.random.default_rng(derive_seed(cfg.seed, "cb", probe, m, j))
                cc, final = cb_sequence(cfg, n, probe, m, rng)
                batch.append(cc)
                tracked.append(final)
                index.append((probe, m))
    label = "cb-" + "-".join(map(str, cfg.support))
    results = backend.execute(ExecutionRequest(batch, cfg.shots, cfg.seed, label)).results

    values: dict[tuple[str, int], list[float]] = {}
    shot_var: dict[tuple[str, int], list[float]] = {}
    for key, res, final in zip(index, results, tracked):
        f = signed_parity(res, final)
        values.setdefault(key, []).append(f)
        shot_var.setdefault(key, []).append(0.0 if res.shots is None else max(0.0, 1 - f * f) / res.shots)

    decays: dict[str, PauliDecay] = {}
    residuals: dict[str, tuple[float, ...]] = {}
    for probe in probes:
        means, variances = [], []
        for m in cfg.lengths:
            vals = np.array(values[(probe, m)])
            means.append(float(vals.mean()))
            if len(vals) > 1:
                variances.append(float(vals.var(ddof=1)) / len(vals))
            else:
                variances.append(shot_var[(probe, m)][0])
        try:
            p, a, se, res = fit_decay(cfg.lengths, means, variances)
        except CbError as exc:
            raise CbError(f"probe {probe}: {exc}") from None
        decays[probe] = PauliDecay(p, a, se, dict(zip(cfg.lengths, means)))
        residuals[probe] = res

    dim2 = 4 ** len(cfg.support)
    scale = (dim2 - 1) / dim2
    mean_p = math.fsum(d.decay for d in decays.values()) / len(decays)
    se = scale * math.sqrt(math.fsum(d.std_error**2 for d in decays.values())) / len(decays)
    return CbResult(scale * (1.0 - mean_p), se, decays, residuals)


def cycle_for(kind: str, qubits: Sequence[int], n_qubits: int) -> Circuit:
    return Circuit(n_qubits, ((gate(kind, *qubits),),))


__all__ = [
    "CbConfig",
    "CbError",
    "CbResult",
    "PauliDecay",
    "cb_sequence",
    "cycle_for",
    "fit_decay",
    "run_cycle_benchmark",
    "signed_parity",
]
