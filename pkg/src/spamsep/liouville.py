r"""Pauli-basis indexing and the Pauli-Liouville representation.

Operators are stored as raw Pauli traces, ``coeffs[P] = Tr[P E]``, so that

.. math::

    E = \frac{1}{2^N} \sum_P \mathrm{coeffs}[P]\, P .

The only place a ``2^{-N}`` appears is :func:`outcome_probability`.  Maps are
Pauli transfer matrices with entries ``2^{-N} Tr[P Phi(Q)]``, which act on the
raw-trace vectors by ordinary matrix multiplication.

Basis order is lexicographic over ``I < X < Y < Z`` with the leftmost qubit most
significant, so ``index("XZ") == 1 * 4 + 3``.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

PAULI_LABELS = "IXYZ"
MAX_QUBITS = 5

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-12
COMPLETENESS_TOL = 1e-10

_SINGLE = {
    "I": np.array([[1, 0], [0, 1]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class LiouvilleError(ValueError):
    """Raised when an input violates a representation precondition."""


@functools.total_ordering
@dataclass(frozen=True)
class PauliString:
    """A word over ``{I, X, Y, Z}``; position ``i`` acts on the ``i``-th qubit."""

    word: str

    def __post_init__(self) -> None:
        word = self.word.upper()
        if not word or any(ch not in PAULI_LABELS for ch in word):
            raise LiouvilleError(f"invalid Pauli word {self.word!r}")
        object.__setattr__(self, "word", word)

    def __len__(self) -> int:
        return len(self.word)

    def __str__(self) -> str:
        return self.word

    def __getitem__(self, i: int) -> str:
        return self.word[i]

    def __lt__(self, other: "PauliString") -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (len(self), self.index) < (len(other), other.index)

    @property
    def n_qubits(self) -> int:
        return len(self.word)

    @property
    def index(self) -> int:
        out = 0
        for ch in self.word:
            out = 4 * out + PAULI_LABELS.index(ch)
        return out

    @property
    def weight(self) -> int:
        return sum(ch != "I" for ch in self.word)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, ch in enumerate(self.word) if ch != "I")

    def is_identity(self) -> bool:
        return self.weight == 0

    def commutes_with(self, other: "PauliString | str") -> bool:
        other = as_pauli(other)
        if len(other) != len(self):
            raise LiouvilleError("Pauli words of different length")
        anti = sum(a != "I" and b != "I" and a != b for a, b in zip(self.word, other.word))
        return anti % 2 == 0

    @classmethod
    def from_index(cls, index: int, n_qubits: int) -> "PauliString":
        if not 0 <= index < 4**n_qubits:
            raise LiouvilleError(f"index {index} out of range for {n_qubits} qubits")
        chars = []
        for _ in range(n_qubits):
            index, r = divmod(index, 4)
            chars.append(PAULI_LABELS[r])
        return cls("".join(reversed(chars)))

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls("I" * n_qubits)


def as_pauli(p: "PauliString | str") -> PauliString:
    return p if isinstance(p, PauliString) else PauliString(p)


def all_paulis(n_qubits: int) -> Iterator[PauliString]:
    """Iterate the ``4**n_qubits`` Pauli words in basis order."""
    for letters in itertools.product(PAULI_LABELS, repeat=n_qubits):
        yield PauliString("".join(letters))


def _check_qubits(n: int) -> None:
    if n < 1:
        raise LiouvilleError("need at least one qubit")
    if n > MAX_QUBITS:
        raise LiouvilleError(f"{n} qubits exceeds MAX_QUBITS={MAX_QUBITS}")


def _n_from_dim(dim: int, base: int) -> int:
    n = 0
    d = dim
    while d > 1 and d % base == 0:
        d //= base
        n += 1
    if d != 1 or n == 0:
        raise LiouvilleError(f"dimension {dim} is not a power of {base}")
    return n


def pauli_matrix(p: PauliString | str) -> np.ndarray:
    """Kronecker product of single-qubit Pauli matrices in word order."""
    p = as_pauli(p)
    out = np.ones((1, 1), dtype=complex)
    for ch in p.word:
        out = np.kron(out, _SINGLE[ch])
    return out


@functools.lru_cache(maxsize=None)
def pauli_basis(n_qubits: int) -> np.ndarray:
    """All Pauli matrices stacked in basis order, shape ``(4**n, 2**n, 2**n)``."""
    _check_qubits(n_qubits)
    basis = np.array([pauli_matrix(p) for p in all_paulis(n_qubits)])
    basis.setflags(write=False)
    return basis


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StateVec:
    """Pauli-Liouville vector of a state; ``coeffs[0]`` is the trace."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = _frozen(self.coeffs)
        if c.ndim != 1:
            raise LiouvilleError("state coefficients must be a vector")
        _n_from_dim(c.size, 4)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_qubits(self) -> int:
        return _n_from_dim(self.coeffs.size, 4)

    def __getitem__(self, p: PauliString | str) -> float:
        return float(self.coeffs[as_pauli(p).index])

    @classmethod
    def from_bloch(cls, s_x: float = 0.0, s_y: float = 0.0, s_z: float = 1.0) -> "StateVec":
        return cls(np.array([1.0, s_x, s_y, s_z]))

    @classmethod
    def from_matrix(cls, rho: np.ndarray) -> "StateVec":
        return cls(to_pauli_vec(rho))

    def to_matrix(self) -> np.ndarray:
        return from_pauli_vec(self.coeffs)

    def tensor(self, other: "StateVec") -> "StateVec":
        return StateVec(np.kron(self.coeffs, other.coeffs))


@dataclass(frozen=True)
class Effect:
    """Pauli-Liouville row vector of a POVM element.

    For one qubit the layout is ``(1 + m_I, m_X, m_Y, m_Z)``.
    """

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = _frozen(self.coeffs)
        if c.ndim != 1:
            raise LiouvilleError("effect coefficients must be a vector")
        _n_from_dim(c.size, 4)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_qubits(self) -> int:
        return _n_from_dim(self.coeffs.size, 4)

    def __getitem__(self, p: PauliString | str) -> float:
        return float(self.coeffs[as_pauli(p).index])

    @classmethod
    def from_params(
        cls, m_i: float = 0.0, m_x: float = 0.0, m_y: float = 0.0, m_z: float = 1.0
    ) -> "Effect":
        return cls(np.array([1.0 + m_i, m_x, m_y, m_z]))

    @classmethod
    def identity(cls, n_qubits: int = 1) -> "Effect":
        c = np.zeros(4**n_qubits)
        c[0] = 2.0**n_qubits
        return cls(c)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Effect":
        return cls(to_pauli_vec(m))

    def complement(self) -> "Effect":
        """The other element of a two-outcome POVM, ``I - M``."""
        return Effect(Effect.identity(self.n_qubits).coeffs - self.coeffs)

    def to_matrix(self) -> np.ndarray:
        return from_pauli_vec(self.coeffs)

    def tensor(self, other: "Effect") -> "Effect":
        return Effect(np.kron(self.coeffs, other.coeffs))


@dataclass(frozen=True)
class Ptm:
    """Pauli transfer matrix, ``mat[P, Q] = 2^{-N} Tr[P Phi(Q)]``."""

    mat: np.ndarray

    def __post_init__(self) -> None:
        m = _frozen(self.mat)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise LiouvilleError(f"PTM must be square, got shape {m.shape}")
        _n_from_dim(m.shape[0], 4)
        object.__setattr__(self, "mat", m)

    @property
    def n_qubits(self) -> int:
        return _n_from_dim(self.mat.shape[0], 4)

    def __matmul__(self, other: "Ptm") -> "Ptm":
        # (a @ b) applies b first.
        if not isinstance(other, Ptm):
            return NotImplemented
        if other.mat.shape != self.mat.shape:
            raise LiouvilleError("PTM dimension mismatch")
        return Ptm(self.mat @ other.mat)

    def apply(self, state: StateVec) -> StateVec:
        if state.coeffs.size != self.mat.shape[0]:
            raise LiouvilleError("state/PTM dimension mismatch")
        return StateVec(self.mat @ state.coeffs)

    def tensor(self, other: "Ptm") -> "Ptm":
        return Ptm(np.kron(self.mat, other.mat))

    def is_trace_preserving(self, atol: float = 1e-12) -> bool:
        row = np.zeros(self.mat.shape[0])
        row[0] = 1.0
        return bool(np.allclose(self.mat[0], row, atol=atol, rtol=0))

    def is_unital(self, atol: float = 1e-12) -> bool:
        col = np.zeros(self.mat.shape[0])
        col[0] = 1.0
        return bool(np.allclose(self.mat[:, 0], col, atol=atol, rtol=0))

    def is_diagonal(self, atol: float = 1e-12) -> bool:
        off = self.mat - np.diag(np.diag(self.mat))
        return bool(np.max(np.abs(off)) <= atol)

    @classmethod
    def identity(cls, n_qubits: int = 1) -> "Ptm":
        return cls(np.eye(4**n_qubits))


def to_pauli_vec(e: np.ndarray, atol: float = HERMITIAN_TOL) -> np.ndarray:
    """Raw Pauli traces ``Tr[P E]`` of a Hermitian matrix."""
    e = np.asarray(e, dtype=complex)
    if e.ndim != 2 or e.shape[0] != e.shape[1]:
        raise LiouvilleError("expected a square matrix")
    n = _n_from_dim(e.shape[0], 2)
    if np.max(np.abs(e - e.conj().T)) > atol:
        raise LiouvilleError("matrix is not Hermitian")
    basis = pauli_basis(n)
    # Tr[P E] = sum_ij P_ij E_ji
    vals = np.einsum("pij,ji->p", basis, e)
    return vals.real.copy()


def from_pauli_vec(coeffs: Sequence[float] | np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_pauli_vec`."""
    c = np.asarray(coeffs, dtype=float)
    n = _n_from_dim(c.size, 4)
    return np.einsum("p,pij->ij", c, pauli_basis(n)) / 2**n


def _superop_to_ptm(superop: np.ndarray, n: int) -> Ptm:
    # superop acts on row-major vec(rho); Tr[P A] = conj(vec P) . vec A for Hermitian P
    flat = pauli_basis(n).reshape(4**n, -1)
    mat = flat.conj() @ superop @ flat.T / 2**n
    return Ptm(mat.real)


def ptm_of_unitary(u: np.ndarray, atol: float = UNITARY_TOL) -> Ptm:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise LiouvilleError("expected a square matrix")
    n = _n_from_dim(u.shape[0], 2)
    _check_qubits(n)
    if np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) > atol:
        raise LiouvilleError("matrix is not unitary")
    return _superop_to_ptm(np.kron(u, u.conj()), n)


def ptm_of_kraus(ks: Iterable[np.ndarray], atol: float = COMPLETENESS_TOL) -> Ptm:
    ks = [np.asarray(k, dtype=complex) for k in ks]
    if not ks:
        raise LiouvilleError("need at least one Kraus operator")
    dim = ks[0].shape[0]
    if any(k.shape != (dim, dim) for k in ks):
        raise LiouvilleError("Kraus operators must share one square shape")
    n = _n_from_dim(dim, 2)
    _check_qubits(n)
    resid = float(np.linalg.norm(sum(k.conj().T @ k for k in ks) - np.eye(dim)))
    if resid > atol:
        raise LiouvilleError(f"Kraus operators are not trace preserving (residual {resid:.3e})")
    superop = sum(np.kron(k, k.conj()) for k in ks)
    return _superop_to_ptm(superop, n)


def outcome_probability(m: Effect, g: Ptm, s: StateVec) -> float:
    """``2^{-N} <<M| G |rho>>``."""
    if not (m.coeffs.size == g.mat.shape[0] == s.coeffs.size):
        raise LiouvilleError("effect, PTM and state dimensions disagree")
    return float(m.coeffs @ g.mat @ s.coeffs) / 2 ** g.n_qubits


def apply_local(
    tensor: np.ndarray, local: np.ndarray, qubits: Sequence[int], n_qubits: int
) -> np.ndarray:
    """Apply a ``k``-qubit PTM to the given qubits of a register vector.

    ``tensor`` has shape ``(4**n_qubits, ...)``; trailing axes are carried along,
    so a full PTM can be pushed through column-wise.
    """
    k = len(qubits)
    extra = tensor.shape[1:]
    t = tensor.reshape((4,) * n_qubits + extra)
    op = local.reshape((4,) * (2 * k))
    t = np.tensordot(op, t, axes=(list(range(k, 2 * k)), list(qubits)))
    t = np.moveaxis(t, list(range(k)), list(qubits))
    return t.reshape((4**n_qubits,) + extra)


def embed(local: Ptm, qubits: Sequence[int], n_qubits: int) -> Ptm:
    """Full-register PTM of ``local`` acting on ``qubits`` (in that order)."""
    if len(set(qubits)) != len(qubits) or any(not 0 <= q < n_qubits for q in qubits):
        raise LiouvilleError(f"bad qubit list {list(qubits)} for {n_qubits} qubits")
    if local.n_qubits != len(qubits):
        raise LiouvilleError("local PTM arity does not match qubit list")
    return Ptm(apply_local(np.eye(4**n_qubits), local.mat, qubits, n_qubits))


@dataclass(frozen=True)
class GateSetModel:
    """States, effects and named gates: the object a gauge acts on."""

    states: tuple[StateVec, ...]
    effects: tuple[Effect, ...]
    gates: Mapping[str, Ptm] = field(default_factory=dict)

    def probability(self, state: int, sequence: Sequence[str], effect: int) -> float:
        """Probability of ``effect`` after applying ``sequence`` (first name first)."""
        vec = self.states[state].coeffs
        for name in sequence:
            vec = self.gates[name].mat @ vec
        n = self.effects[effect].n_qubits
        return float(self.effects[effect].coeffs @ vec) / 2**n


def gauge_transform(b: np.ndarray, model: GateSetModel, max_cond: float = 1e12) -> GateSetModel:
    """``rho -> B rho``, ``M -> M B^{-1}``, ``G -> B G B^{-1}``.

    No physicality check is made on the result; the gauge orbit contains
    unphysical representatives.
    """
    b = np.asarray(b, dtype=float)
    cond = np.linalg.cond(b)
    if not np.isfinite(cond) or cond > max_cond:
        raise LiouvilleError(f"gauge matrix is singular (condition number {cond:.3e})")
    b_inv = np.linalg.inv(b)
    return GateSetModel(
        states=tuple(StateVec(b @ s.coeffs) for s in model.states),
        effects=tuple(Effect(m.coeffs @ b_inv) for m in model.effects),
        gates={k: Ptm(b @ g.mat @ b_inv) for k, g in model.gates.items()},
    )


def rescaling_gauge(x: float, n_qubits: int = 1) -> np.ndarray:
    """``diag(1, x, ..., x)``: scales every non-identity state component by ``x``."""
    if x == 0:
        raise LiouvilleError("rescaling factor must be nonzero")
    d = np.full(4**n_qubits, float(x))
    d[0] = 1.0
    return np.diag(d)
