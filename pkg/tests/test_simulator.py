import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from spamsep.channels import PauliChannel, amplitude_damping_ptm, pauli_channel_ptm
from spamsep.circuits import Circuit, CompiledCircuit, build_propagation_circuit, gate, randomized_compile, with_measurement_twirl
from spamsep.liouville import Effect, Ptm, StateVec
from spamsep.modelfile import load_model, model_from_dict, model_to_dict, save_model
from spamsep.simulator import (
    ModelError,
    QpuModel,
    SpamParams,
    exact_probabilities,
    ideal_computational_effects,
    run_circuit,
    spam_error_vector,
)


def _oracle_spam(model):
    return [((p.s_x, p.s_y, p.s_z), p.m_i, (p.m_x, p.m_y, p.m_z)) for p in model.spam]


def _random_model(seed, n=3):
    rng = np.random.default_rng(seed)
    return QpuModel(tuple(SpamParams.random(rng, 0.2, 0.2, 0.2, 0.1) for _ in range(n)))


@st.composite
def circuits(draw, n=3):
    moments = []
    for _ in range(draw(st.integers(0, 6))):
        if draw(st.booleans()):
            q = draw(st.integers(0, n - 1))
            moments.append((gate(draw(st.sampled_from(["H", "S", "X", "Y", "SDG"])), q),))
        else:
            a, b = draw(st.permutations(range(n)))[:2]
            moments.append((gate(draw(st.sampled_from(["CZ", "CNOT"])), a, b),))
    measure = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n, unique=True))
    return Circuit(n, tuple(moments), tuple(measure))


@given(circuits(), st.integers(0, 2**32 - 1))
def test_probabilities_match_density_matrix(c, seed):
    model = _random_model(seed)
    got = exact_probabilities(model, c)
    want = oracles.probabilities(_oracle_spam(model), c)
    assert got.keys() == want.keys()
    for k in got:
        assert got[k] == pytest.approx(want[k], abs=1e-12)


def test_noise_and_relabel_match_density_matrix(rng):
    model = _random_model(3)
    pc = PauliChannel.random(rng, 0.05, 2)
    noisy = QpuModel(model.spam, {"CZ": pauli_channel_ptm(pc), "H": amplitude_damping_ptm(0.1)})
    c = randomized_compile(build_propagation_circuit("ZZ", 0, [1, 2], 3), seed=4)
    cc = with_measurement_twirl(c, "Y")
    got = exact_probabilities(noisy, cc)
    want = oracles.probabilities(
        _oracle_spam(model),
        cc.circuit,
        relabel=cc.relabel_mask,
        kraus_noise={"CZ": oracles.pauli_kraus(pc.probs), "H": oracles.damping_kraus(0.1)},
    )
    for k in got:
        assert got[k] == pytest.approx(want[k], abs=1e-12)


def test_amplitude_damping_gate():
    model = QpuModel((SpamParams(s_z=-1.0, m_i=0.1, m_z=0.8),))
    c = Circuit(1, ((gate("AD", 0, param=1.0),),))
    assert exact_probabilities(model, c)["0"] == pytest.approx(0.95)


def test_untouched_qubits_do_not_matter():
    model = _random_model(5)
    c = Circuit(3, ((gate("H", 0),),), (0,))
    p = exact_probabilities(model, c)
    q = exact_probabilities(model.with_spam([model.spam[0], SpamParams(), SpamParams()]), c)
    assert p == pytest.approx(q)


def test_sampling_is_seeded_and_binomial():
    model = QpuModel((SpamParams.from_errors(0.0, 0.1),))
    c = Circuit(1)
    a = run_circuit(model, c, 20000, seed=1)
    assert a == run_circuit(model, c, 20000, seed=1)
    assert a != run_circuit(model, c, 20000, seed=2)
    p1 = a.counts.get("1", 0) / 20000
    assert abs(p1 - 0.1) < 4 * np.sqrt(0.09 / 20000)


def test_sampling_coverage_rate():
    # counts of a p=0.3 outcome should fall within 1 sigma about 68% of the time
    model = QpuModel((SpamParams.from_errors(0.0, 0.3),))
    shots = 1000
    hits = 0
    for s in range(400):
        k = run_circuit(model, Circuit(1), shots, seed=s).counts.get("1", 0)
        hits += abs(k - 300) <= np.sqrt(shots * 0.21)
    assert 0.6 < hits / 400 < 0.76


def test_model_rejects_unphysical():
    with pytest.raises(ModelError):
        SpamParams(s_x=0.8, s_z=0.8)
    with pytest.raises(ModelError):
        SpamParams(m_i=0.2, m_z=0.9)
    with pytest.raises(ModelError, match="trace"):
        QpuModel((SpamParams(),), {"H": Ptm(np.diag([0.9, 1, 1, 1]))})


def test_too_small_model():
    with pytest.raises(ModelError):
        exact_probabilities(QpuModel.ideal(1), Circuit(2))


@given(st.integers(0, 2**32 - 1))
def test_random_spam_is_physical(seed):
    rng = np.random.default_rng(seed)
    p = SpamParams.random(rng, 0.1, 0.1)
    assert 0 <= p.delta_sp <= 0.1 and 0 <= p.delta_m <= 0.1


def test_spam_error_vector_sums_to_zero():
    model = _random_model(9, 2)
    ideal = StateVec(np.kron([1, 0, 0, 1.0], [1, 0, 0, 1.0]))
    d = spam_error_vector(model, ideal, ideal_computational_effects(2))
    assert d.sum() == pytest.approx(0.0, abs=1e-12)
    want = []
    probs = oracles.probabilities(_oracle_spam(model), Circuit(2))
    ideal_p = {"00": 1.0, "01": 0.0, "10": 0.0, "11": 0.0}
    want = [ideal_p[k] - probs[k] for k in sorted(probs)]
    assert np.allclose(d, want)


def test_spam_error_vector_rejects_bad_povm():
    with pytest.raises(ModelError):
        spam_error_vector(QpuModel.ideal(1), StateVec.from_bloch(), [Effect.from_params(), Effect.from_params()])


def test_model_file_roundtrip(tmp_path):
    doc = {
        "schema_version": 1,
        "ancilla": 0,
        "qubits": [{"delta_sp": 0.02, "delta_m": 0.05}, {"s": [0.1, 0, 0.9], "m_i": 0.01, "m": [0, 0, 0.9]}, "ideal"],
        "gate_noise": {
            "CZ": {"pauli": {"II": 0.99, "XI": 0.005, "IZ": 0.005}},
            "CZ 1 2": {"depolarizing": {"error": 0.02, "n_qubits": 2}},
            "H": {"amplitude_damping": 0.001},
            "X": {"depolarizing": 0.01},
        },
    }
    model = model_from_dict(doc)
    assert model.spam[0].s_z == pytest.approx(0.96)
    assert model.noise_for(gate("CZ", 1, 2)) is not model.noise_for(gate("CZ", 0, 1))
    path = tmp_path / "m.yaml"
    save_model(model, path)
    again = load_model(path)
    assert again.spam == model.spam
    c = randomized_compile(build_propagation_circuit("ZZ", 0, [1, 2], 3), seed=1)
    assert exact_probabilities(again, c) == pytest.approx(exact_probabilities(model, c))
    assert model_to_dict(again)["ancilla"] == 0


@pytest.mark.parametrize(
    "doc, needle",
    [
        ({"qubits": 2}, "schema_version"),
        ({"schema_version": 1, "qubits": []}, "qubits"),
        ({"schema_version": 1, "qubits": [{"delta_sp": 0.1, "s": [0, 0, 1]}]}, "qubits\\[0\\]"),
        ({"schema_version": 1, "qubits": [{"s": [0, 0]}]}, "three"),
        ({"schema_version": 1, "qubits": 1, "gate_noise": {"H": {"bogus": 1}}}, "bogus"),
        ({"schema_version": 1, "qubits": 2, "gate_noise": {"CZ a b": {"depolarizing": 0.1}}}, "integers"),
        ({"schema_version": 1, "qubits": 1, "ancilla": 3}, "ancilla"),
    ],
)
def test_model_file_errors(doc, needle):
    with pytest.raises(ModelError, match=needle):
        model_from_dict(doc)


def test_compiled_and_bare_agree():
    model = _random_model(2)
    c = Circuit(3, ((gate("H", 1),),), (1, 0))
    assert exact_probabilities(model, c) == exact_probabilities(model, CompiledCircuit(c))
