"""Exact Pauli conjugation through the supported Clifford gates.

Paulis are tracked symplectically as ``i^k X^x Z^z`` (per qubit, X before Z).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .ir import CircuitError, Gate

_LETTER = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS = {v: k for k, v in _LETTER.items()}


@dataclass(frozen=True)
class SignedPauli:
    """``sign * word`` with ``sign`` in ``{+1, -1}``."""

    word: str
    sign: int = 1

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        object.__setattr__(self, "word", self.word.upper())

    def __str__(self) -> str:
        return ("+" if self.sign > 0 else "-") + self.word


class _Sym:
    __slots__ = ("x", "z", "k")

    def __init__(self, x: list[int], z: list[int], k: int) -> None:
        self.x, self.z, self.k = x, z, k % 4

    @classmethod
    def from_signed(cls, p: SignedPauli) -> "_Sym":
        x = [_BITS[ch][0] for ch in p.word]
        z = [_BITS[ch][1] for ch in p.word]
        ny = sum(ch == "Y" for ch in p.word)
        # Y = i X Z
        return cls(x, z, ny + (0 if p.sign > 0 else 2))

    @classmethod
    def single(cls, n: int, letters: dict[int, str], sign: int = 1) -> "_Sym":
        word = ["I"] * n
        for q, ch in letters.items():
            word[q] = ch
        return cls.from_signed(SignedPauli("".join(word), sign))

    def __mul__(self, other: "_Sym") -> "_Sym":
        # X^x1 Z^z1 X^x2 Z^z2 = (-1)^{z1.x2} X^{x1+x2} Z^{z1+z2}
        swap = sum(a & b for a, b in zip(self.z, other.x))
        return _Sym(
            [a ^ b for a, b in zip(self.x, other.x)],
            [a ^ b for a, b in zip(self.z, other.z)],
            self.k + other.k + 2 * swap,
        )

    def to_signed(self) -> SignedPauli:
        word = "".join(_LETTER[(a, b)] for a, b in zip(self.x, self.z))
        ny = sum(ch == "Y" for ch in word)
        rest = (self.k - ny) % 4
        if rest % 2:
            raise CircuitError("conjugation produced a non-Hermitian Pauli")
        return SignedPauli(word, 1 if rest == 0 else -1)


def _generator_images(g: Gate, n: int) -> tuple[dict[int, _Sym], dict[int, _Sym]]:
    """Images of ``X_q`` and ``Z_q`` for the qubits the gate touches."""
    S = _Sym.single
    kind, qs = g.kind, g.qubits
    xs: dict[int, _Sym] = {}
    zs: dict[int, _Sym] = {}
    if kind in ("I", "X", "Y", "Z"):
        q = qs[0]
        xs[q] = S(n, {q: "X"}, -1 if kind in ("Y", "Z") else 1)
        zs[q] = S(n, {q: "Z"}, -1 if kind in ("X", "Y") else 1)
    elif kind == "H":
        q = qs[0]
        xs[q] = S(n, {q: "Z"})
        zs[q] = S(n, {q: "X"})
    elif kind in ("S", "SDG"):
        q = qs[0]
        xs[q] = S(n, {q: "Y"}, 1 if kind == "S" else -1)
        zs[q] = S(n, {q: "Z"})
    elif kind == "CZ":
        a, b = qs
        xs[a] = S(n, {a: "X", b: "Z"})
        xs[b] = S(n, {a: "Z", b: "X"})
        zs[a] = S(n, {a: "Z"})
        zs[b] = S(n, {b: "Z"})
    elif kind == "CNOT":
        c, t = qs
        xs[c] = S(n, {c: "X", t: "X"})
        xs[t] = S(n, {t: "X"})
        zs[c] = S(n, {c: "Z"})
        zs[t] = S(n, {c: "Z", t: "Z"})
    elif kind == "CP":
        c, targets = qs[0], qs[1:]
        zmask = {t: "Z" for t, ch in zip(targets, g.pauli) if ch == "Z"}
        xs[c] = S(n, {c: "X", **zmask})
        zs[c] = S(n, {c: "Z"})
        for t, ch in zip(targets, g.pauli):
            xs[t] = S(n, {c: "Z", t: "X"}) if ch == "Z" else S(n, {t: "X"})
            zs[t] = S(n, {t: "Z"})
    else:
        raise CircuitError(f"{kind} is not a supported Clifford")
    return xs, zs


def conjugate(gates: Iterable[Gate], p: SignedPauli) -> SignedPauli:
    """``U p U^dagger`` for the gates applied in order."""
    n = len(p.word)
    cur = _Sym.from_signed(p)
    for g in gates:
        if any(q >= n for q in g.qubits):
            raise CircuitError(f"gate {g.kind}{g.qubits} outside a {n}-qubit Pauli")
        xs, zs = _generator_images(g, n)
        # cur = i^k X^x Z^z, so conjugate generator by generator and keep i^k
        out = _Sym([0] * n, [0] * n, cur.k)
        for q in range(n):
            if cur.x[q]:
                out = out * (xs[q] if q in xs else _Sym.single(n, {q: "X"}))
            if cur.z[q]:
                out = out * (zs[q] if q in zs else _Sym.single(n, {q: "Z"}))
        cur = out
    return cur.to_signed()


def restore_for(moment: Iterable[Gate], twirl: str) -> SignedPauli:
    """The Pauli ``R`` with ``C T = R C`` for a Clifford cycle ``C`` and twirl ``T``."""
    return conjugate(moment, SignedPauli(twirl))


def multiply_words(a: str, b: str) -> str:
    """Word part of the product ``a b`` (phase dropped)."""
    return "".join(_LETTER[(_BITS[x][0] ^ _BITS[y][0], _BITS[x][1] ^ _BITS[y][1])] for x, y in zip(a, b))
