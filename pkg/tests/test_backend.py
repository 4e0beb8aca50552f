import threading
import time

import numpy as np
import pytest

from spamsep.backend import (
    BackendError,
    BackendTimeout,
    ExchangeBackend,
    ExecutionRequest,
    SimulatorBackend,
    derive_seed,
    process_exchange_dir,
)
from spamsep.circuits import build_propagation_circuit, randomized_compile, serialize_counts
from spamsep.results import Counts, Distribution
from spamsep.simulator import QpuModel, SpamParams


def _model():
    return QpuModel((SpamParams.from_errors(0.02, 0.05), SpamParams.from_errors(0.01, 0.07)))


def _request(seed=3):
    c = build_propagation_circuit("Z", 0, [1], 2)
    batch = [randomized_compile(c, seed=i, measurement_twirl=True) for i in range(4)]
    return ExecutionRequest(batch, 500, seed, "t")


def test_derive_seed():
    assert derive_seed(1, "a") == derive_seed(1, "a")
    assert derive_seed(1, "a") != derive_seed(1, "b")
    assert 0 <= derive_seed(5) < 2**63
    with pytest.raises(ValueError):
        derive_seed(-1)


def test_request_id_depends_on_content():
    assert _request().request_id == _request().request_id
    assert _request(3).request_id != _request(4).request_id
    assert _request().request_id.startswith("t-")


def test_request_validation():
    with pytest.raises(ValueError):
        ExecutionRequest([], 0)


def test_simulator_backend_deterministic():
    be = SimulatorBackend(_model())
    a, b = be.execute(_request()), be.execute(_request())
    assert a == b
    assert all(isinstance(r, Counts) and r.shots == 500 for r in a.results)


def test_exact_backend_returns_distributions():
    res = SimulatorBackend(_model(), exact=True).execute(_request())
    assert all(isinstance(r, Distribution) for r in res.results)


def _serve(model, directory, stop):
    while not stop.is_set():
        process_exchange_dir(model, directory)
        time.sleep(0.01)


def test_exchange_matches_in_process(tmp_path):
    stop = threading.Event()
    t = threading.Thread(target=_serve, args=(_model(), tmp_path, stop), daemon=True)
    t.start()
    try:
        ex = ExchangeBackend(tmp_path, 2, timeout=20, poll_interval=0.01)
        got = ex.execute(_request())
    finally:
        stop.set()
        t.join()
    want = SimulatorBackend(_model()).execute(_request())
    assert got == want
    assert (tmp_path / f"{_request().request_id}.circuits").exists()


def test_exchange_reuses_existing_counts(tmp_path):
    req = _request()
    results = SimulatorBackend(_model()).execute(req).results
    (tmp_path / f"{req.request_id}.counts").write_text(serialize_counts(list(results)))
    got = ExchangeBackend(tmp_path, 2, timeout=1).execute(req)
    assert got.results == results
    assert not (tmp_path / f"{req.request_id}.circuits").exists()


def test_exchange_timeout(tmp_path):
    with pytest.raises(BackendTimeout):
        ExchangeBackend(tmp_path, 2, timeout=0.1, poll_interval=0.02).execute(_request())


def test_exchange_rejects_wrong_shots(tmp_path):
    req = _request()
    results = [Counts(dict(r.counts), r.shots, r.circuit_id) for r in SimulatorBackend(_model()).execute(req).results]
    results[0] = Counts({"0": 5}, 5, results[0].circuit_id)
    (tmp_path / f"{req.request_id}.counts").write_text(serialize_counts(results))
    with pytest.raises(BackendError, match="shots"):
        ExchangeBackend(tmp_path, 2, timeout=1).execute(req)


def test_exchange_rejects_missing_ids(tmp_path):
    req = _request()
    results = list(SimulatorBackend(_model()).execute(req).results)[:2]
    (tmp_path / f"{req.request_id}.counts").write_text(serialize_counts(results))
    with pytest.raises(BackendError, match="no counts"):
        ExchangeBackend(tmp_path, 2, timeout=1).execute(req)


def test_concurrent_identical_requests(tmp_path):
    stop = threading.Event()
    server = threading.Thread(target=_serve, args=(_model(), tmp_path, stop), daemon=True)
    server.start()
    ex = ExchangeBackend(tmp_path, 2, timeout=20, poll_interval=0.01)
    out = []
    workers = [threading.Thread(target=lambda: out.append(ex.execute(_request()))) for _ in range(4)]
    for w in workers:
        w.start()
    for w in workers:
        w.join()
    stop.set()
    server.join()
    assert len(out) == 4 and all(o == out[0] for o in out)
    assert len(list(tmp_path.glob("*.circuits"))) == 1


def test_sample_seeds_are_per_circuit():
    recs = _request().records()
    assert len({r.sample_seed for r in recs}) == len(recs)
    assert [r.id for r in recs] == ["c00000", "c00001", "c00002", "c00003"]
    assert np.all([r.shots == 500 for r in recs])
