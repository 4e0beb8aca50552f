import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import MATRICES, kraus_channel, pauli_word_matrix, ptm_brute_force, random_density, unitary_channel
from spamsep.liouville import (
    Effect,
    GateSetModel,
    LiouvilleError,
    PauliString,
    Ptm,
    StateVec,
    all_paulis,
    apply_local,
    embed,
    from_pauli_vec,
    gauge_transform,
    outcome_probability,
    pauli_basis,
    pauli_matrix,
    ptm_of_kraus,
    ptm_of_unitary,
    rescaling_gauge,
    to_pauli_vec,
)

words = st.text(alphabet="IXYZ", min_size=1, max_size=4)


@pytest.mark.parametrize("word, index", [("I", 0), ("X", 1), ("Y", 2), ("Z", 3), ("XZ", 7), ("ZI", 12), ("ZZZ", 63)])
def test_index_order(word, index):
    assert PauliString(word).index == index
    assert PauliString.from_index(index, len(word)).word == word


@given(words)
def test_index_roundtrip(word):
    p = PauliString(word)
    assert PauliString.from_index(p.index, len(word)) == p
    assert p.weight == sum(ch != "I" for ch in word)


def test_invalid_letter():
    with pytest.raises(LiouvilleError):
        PauliString("XA")


def test_all_paulis_order():
    assert [p.word for p in all_paulis(1)] == ["I", "X", "Y", "Z"]
    got = [p.index for p in all_paulis(2)]
    assert got == list(range(16))


@given(words)
def test_pauli_matrix_matches_kron(word):
    assert np.allclose(pauli_matrix(word), pauli_word_matrix(word))


def test_basis_is_orthogonal():
    b = pauli_basis(2)
    gram = np.einsum("aij,bji->ab", b, b)
    assert np.allclose(gram, 4 * np.eye(16))


def test_commutation():
    assert PauliString("XX").commutes_with("ZZ")
    assert not PauliString("XI").commutes_with("ZI")


@pytest.mark.parametrize("n", [1, 2, 3])
def test_vector_roundtrip(rng, n):
    rho = random_density(rng, n)
    vec = to_pauli_vec(rho)
    assert vec[0] == pytest.approx(1.0)
    assert np.allclose(from_pauli_vec(vec), rho)


def test_non_hermitian_rejected():
    with pytest.raises(LiouvilleError):
        to_pauli_vec(np.array([[0, 1], [0, 0]], dtype=complex))


def test_state_from_bloch():
    s = StateVec.from_bloch(0.1, -0.2, 0.9)
    assert np.allclose(s.to_matrix(), 0.5 * (np.eye(2) + 0.1 * MATRICES["X"] - 0.2 * MATRICES["Y"] + 0.9 * MATRICES["Z"]))


def test_effect_complement():
    m = Effect.from_params(0.1, 0.0, 0.0, 0.8)
    assert np.allclose(m.complement().coeffs, [0.9, 0, 0, -0.8])
    assert np.allclose(m.to_matrix() + m.complement().to_matrix(), np.eye(2))


@pytest.mark.parametrize("name", ["H", "S", "SDG", "X", "Y", "Z", "CZ", "CNOT"])
def test_ptm_of_unitary_against_brute_force(name):
    u = MATRICES[name]
    n = int(np.log2(u.shape[0]))
    assert np.allclose(ptm_of_unitary(u).mat, ptm_brute_force(unitary_channel(u), n), atol=1e-12)


def test_ptm_of_kraus_against_brute_force(rng):
    # random two-element channel from an isometry
    a = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    q, _ = np.linalg.qr(a)
    ks = [q[:2, :], q[2:, :]]
    got = ptm_of_kraus(ks)
    assert np.allclose(got.mat, ptm_brute_force(kraus_channel(ks), 1), atol=1e-12)
    assert got.is_trace_preserving()


def test_incomplete_kraus_rejected():
    with pytest.raises(LiouvilleError, match="residual"):
        ptm_of_kraus([0.5 * np.eye(2)])


def test_non_unitary_rejected():
    with pytest.raises(LiouvilleError):
        ptm_of_unitary(np.diag([1.0, 0.5]))


@pytest.mark.parametrize("n", [1, 2])
def test_outcome_probability_matches_trace(rng, n):
    rho = random_density(rng, n)
    u = np.linalg.qr(rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n)))[0]
    m = random_density(rng, n)
    m = m / np.max(np.linalg.eigvalsh(m))
    p = outcome_probability(Effect.from_matrix(m), ptm_of_unitary(u), StateVec.from_matrix(rho))
    assert p == pytest.approx(np.real(np.trace(m @ u @ rho @ u.conj().T)), abs=1e-12)


def test_ptm_composition_order():
    h, s = ptm_of_unitary(MATRICES["H"]), ptm_of_unitary(MATRICES["S"])
    assert np.allclose((s @ h).mat, ptm_of_unitary(MATRICES["S"] @ MATRICES["H"]).mat)


@pytest.mark.parametrize("qubits", [(0,), (1,), (2,), (0, 2), (2, 0), (1, 2)])
def test_embed_matches_kron_oracle(qubits):
    from oracles import embed_operator

    u = MATRICES["CNOT"] if len(qubits) == 2 else MATRICES["H"] @ MATRICES["S"]
    local = ptm_of_unitary(u)
    full = ptm_of_unitary(embed_operator(u, qubits, 3))
    assert np.allclose(embed(local, qubits, 3).mat, full.mat, atol=1e-12)


def test_apply_local_trailing_axes(rng):
    local = ptm_of_unitary(MATRICES["CNOT"]).mat
    vecs = rng.normal(size=(16, 3))
    got = apply_local(vecs, local, (1, 0), 2)
    want = embed(Ptm(local), (1, 0), 2).mat @ vecs
    assert np.allclose(got, want)


def _model(rng) -> GateSetModel:
    s = rng.uniform(-0.5, 0.5, 3)
    m = rng.uniform(-0.4, 0.4, 3)
    u = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    state = StateVec.from_bloch(*s)
    m0 = Effect.from_params(rng.uniform(-0.1, 0.1), *m)
    return GateSetModel((state,), (m0, m0.complement()), {"g": ptm_of_unitary(u), "h": ptm_of_unitary(MATRICES["H"])})


def test_gauge_transform_preserves_probabilities(rng):
    model = _model(rng)
    b = rng.normal(size=(4, 4)) + 3 * np.eye(4)
    moved = gauge_transform(b, model)
    for seq in ([], ["g"], ["g", "h", "g"]):
        for e in (0, 1):
            assert moved.probability(0, seq, e) == pytest.approx(model.probability(0, seq, e), abs=1e-12)


def test_singular_gauge_rejected(rng):
    with pytest.raises(LiouvilleError):
        gauge_transform(np.zeros((4, 4)), _model(rng))


def test_rescaling_gauge():
    assert np.allclose(rescaling_gauge(2.0), np.diag([1, 2, 2, 2]))
    with pytest.raises(LiouvilleError):
        rescaling_gauge(0.0)


def test_rescaling_commutes_with_unital_tp():
    u = ptm_of_unitary(MATRICES["H"]).mat
    b = rescaling_gauge(3.0)
    assert np.allclose(b @ u @ np.linalg.inv(b), u)


def test_arrays_are_frozen():
    s = StateVec.from_bloch()
    with pytest.raises(ValueError):
        s.coeffs[0] = 2.0
