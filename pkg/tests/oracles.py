"""Independent density-matrix reference implementations used by the tests.

Nothing here goes through the Pauli-Liouville code paths of the package.
"""

from __future__ import annotations

import itertools

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
SIGMA = {"I": I2, "X": X, "Y": Y, "Z": Z}

MATRICES = {
    "I": I2,
    "X": X,
    "Y": Y,
    "Z": Z,
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}


def pauli_word_matrix(word: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for ch in word:
        out = np.kron(out, SIGMA[ch])
    return out


def controlled_pauli(word: str) -> np.ndarray:
    dim = 2 ** len(word)
    out = np.zeros((2 * dim, 2 * dim), dtype=complex)
    out[:dim, :dim] = np.eye(dim)
    out[dim:, dim:] = pauli_word_matrix(word)
    return out


def embed_operator(op: np.ndarray, qubits, n: int) -> np.ndarray:
    """Full-register operator by permuting basis states (no tensordot)."""
    k = len(qubits)
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        sub_in = 0
        for q in qubits:
            sub_in = 2 * sub_in + bits[q]
        for sub_out in range(2**k):
            amp = op[sub_out, sub_in]
            if amp == 0:
                continue
            new = list(bits)
            for j, q in enumerate(qubits):
                new[q] = (sub_out >> (k - 1 - j)) & 1
            row = 0
            for b in new:
                row = 2 * row + b
            out[row, col] += amp
    return out


def gate_operator(g) -> np.ndarray:
    if g.kind == "CP":
        return controlled_pauli(g.pauli)
    return MATRICES[g.kind]


def damping_kraus(omega: float) -> list[np.ndarray]:
    return [
        np.array([[1, 0], [0, np.sqrt(1 - omega)]], dtype=complex),
        np.array([[0, np.sqrt(omega)], [0, 0]], dtype=complex),
    ]


def pauli_kraus(probs: dict[str, float]) -> list[np.ndarray]:
    return [np.sqrt(p) * pauli_word_matrix(w) for w, p in probs.items() if p > 0]


def bloch_state(s) -> np.ndarray:
    s_x, s_y, s_z = s
    return 0.5 * (I2 + s_x * X + s_y * Y + s_z * Z)


def effect0(m_i, m) -> np.ndarray:
    m_x, m_y, m_z = m
    return 0.5 * ((1 + m_i) * I2 + m_x * X + m_y * Y + m_z * Z)


def apply_kraus(rho: np.ndarray, ks, qubits, n) -> np.ndarray:
    out = np.zeros_like(rho)
    for k in ks:
        full = embed_operator(k, qubits, n)
        out += full @ rho @ full.conj().T
    return out


def probabilities(spam, circuit, relabel=None, kraus_noise=None) -> dict[str, float]:
    """Outcome distribution of ``circuit`` for per-qubit ``spam`` given as
    ``(s_vec, m_i, m_vec)`` tuples.  ``kraus_noise`` maps a gate kind to Kraus operators
    applied after the gate on its qubits."""
    kraus_noise = kraus_noise or {}
    n = circuit.n_qubits
    rho = np.ones((1, 1), dtype=complex)
    for s, _, _ in spam[:n]:
        rho = np.kron(rho, bloch_state(s))
    for g in circuit.gates():
        if g.kind == "AD":
            rho = apply_kraus(rho, damping_kraus(g.param), g.qubits, n)
        else:
            u = embed_operator(gate_operator(g), g.qubits, n)
            rho = u @ rho @ u.conj().T
        if g.kind in kraus_noise:
            rho = apply_kraus(rho, kraus_noise[g.kind], g.qubits, n)
    measure = list(circuit.measure)
    out = {}
    for bits in itertools.product("01", repeat=len(measure)):
        op = np.ones((1, 1), dtype=complex)
        for q in range(n):
            if q in measure:
                _, m_i, m = spam[q]
                e0 = effect0(m_i, m)
                op = np.kron(op, e0 if bits[measure.index(q)] == "0" else I2 - e0)
            else:
                op = np.kron(op, I2)
        label = "".join(bits)
        if relabel is not None:
            label = "".join(str(1 - int(b)) if f else b for b, f in zip(label, relabel))
        out[label] = float(np.real(np.trace(op @ rho)))
    return out


def ptm_brute_force(channel, n: int) -> np.ndarray:
    """``R[i, j] = 2^-n Tr[P_i channel(P_j)]`` with explicit Pauli matrices."""
    words = ["".join(w) for w in itertools.product("IXYZ", repeat=n)]
    mats = [pauli_word_matrix(w) for w in words]
    out = np.zeros((len(words), len(words)))
    for j, pj in enumerate(mats):
        image = channel(pj)
        for i, pi in enumerate(mats):
            out[i, j] = np.real(np.trace(pi @ image)) / 2**n
    return out


def unitary_channel(u):
    return lambda rho: u @ rho @ u.conj().T


def kraus_channel(ks):
    return lambda rho: sum(k @ rho @ k.conj().T for k in ks)


def choi_fidelity(ks_actual, u_ideal) -> float:
    """Entanglement fidelity ``<phi| (U^dag . E) x I (|phi><phi|) |phi>`` via the Choi state."""
    d = u_ideal.shape[0]
    phi = np.zeros(d * d, dtype=complex)
    for i in range(d):
        phi[i * d + i] = 1 / np.sqrt(d)
    proj = np.outer(phi, phi.conj())
    total = 0.0
    for k in ks_actual:
        op = np.kron(u_ideal.conj().T @ k, np.eye(d))
        total += np.real(phi.conj() @ op @ proj @ op.conj().T @ phi)
    return float(total)


def random_density(rng, n: int) -> np.ndarray:
    d = 2**n
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)
