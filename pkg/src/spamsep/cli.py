"""Command-line harness: ``spamsep characterize | cb | simulate | gauge-demo``.

Every command reads a YAML config (``--config``), writes reports into ``--out-dir``
and is deterministic for a fixed seed.  Exit codes: 0 success, 2 config error,
3 backend error, 4 estimation refused.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

import click
import yaml

from . import __version__
from .backend import (
    Backend,
    BackendError,
    CapabilityError,
    ExchangeBackend,
    SimulatorBackend,
    execute_batch_document,
    process_exchange_dir,
    write_atomic,
)
from .benchmarking import CbConfig, CbError, CbResult, cycle_for, run_cycle_benchmark
from .circuits.serialize import SerializationError, serialize_counts
from .gaugedemo import default_design, demonstrate_gauge_orbit, distinguish_by_propagation, measure_error_via_damping
from .modelfile import load_model
from .protocol import (
    EstimationRefused,
    RepetitionRow,
    default_ancillas,
    run_characterization,
    summarize,
)
from .simulator import ModelError, QpuModel

CONFIG_SCHEMA_VERSION = 1
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_REFUSED = 4


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class CbSettings:
    enabled: bool = True
    lengths: tuple[int, ...] = (0, 2, 8)
    sequences_per_length: int = 30
    shots: int = 8192
    gate: str = "CZ"


@dataclass
class Config:
    source: Path
    model: Path | None
    n_qubits: int
    qubits: tuple[int, ...]
    ancilla: int | None
    ancillas: dict[int, int]
    k: int = 50
    shots: int = 8192
    repetitions: int = 30
    seed: int = 0
    workers: int = 1
    cb: CbSettings = field(default_factory=CbSettings)
    gauge_x: float = 2.0
    simulate_input: Path | None = None

    def canonical(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("source")
        for key in ("model", "simulate_input"):
            d[key] = None if d[key] is None else str(d[key])
        d["ancillas"] = {str(k): v for k, v in sorted(self.ancillas.items())}
        return d

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _take(doc: Mapping[str, Any], key: str, path: str, kind: type | tuple, default: Any = ...) -> Any:
    if key not in doc or doc[key] is None:
        if default is ...:
            raise ConfigError(f"{path}.{key}", "required")
        return default
    val = doc[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or (isinstance(val, bool) and kind in (int, float)):
        name = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise ConfigError(f"{path}.{key}", f"expected {name}, got {type(val).__name__}")
    return val


def _positive(val: int, path: str) -> int:
    if val < 1:
        raise ConfigError(path, "must be at least 1")
    return val


def parse_config(doc: Any, source: Path, require_ancilla: bool = True) -> Config:
    if not isinstance(doc, Mapping):
        raise ConfigError("config", "expected a mapping")
    if doc.get("schema_version") != CONFIG_SCHEMA_VERSION:
        raise ConfigError("config.schema_version", f"expected {CONFIG_SCHEMA_VERSION}, got {doc.get('schema_version')!r}")
    base = source.parent
    model = _take(doc, "model", "config", str, None)
    model_path = None if model is None else (base / model)
    n_qubits = _take(doc, "n_qubits", "config", int, None)
    if model_path is None and n_qubits is None:
        raise ConfigError("config.model", "required unless n_qubits is given for an exchange backend")
    qubits = _take(doc, "qubits", "config", list, None)
    if qubits is not None:
        for i, q in enumerate(qubits):
            if not isinstance(q, int) or isinstance(q, bool) or q < 0:
                raise ConfigError(f"config.qubits[{i}]", "expected a nonnegative integer")
        if len(set(qubits)) != len(qubits):
            raise ConfigError("config.qubits", "duplicate qubit")
    ancilla = _take(doc, "ancilla", "config", int, None if not require_ancilla else ...)
    overrides = _take(doc, "ancillas", "config", dict, {})
    ancillas: dict[int, int] = {}
    for k, v in overrides.items():
        try:
            ancillas[int(k)] = int(v)
        except (TypeError, ValueError):
            raise ConfigError(f"config.ancillas.{k}", "expected integer qubit indices") from None
    cb_doc = _take(doc, "cb", "config", dict, {})
    lengths = _take(cb_doc, "lengths", "config.cb", list, [0, 2, 8])
    if not all(isinstance(m, int) and not isinstance(m, bool) for m in lengths):
        raise ConfigError("config.cb.lengths", "expected a list of integers")
    cb = CbSettings(
        enabled=_take(cb_doc, "enabled", "config.cb", bool, True),
        lengths=tuple(lengths),
        sequences_per_length=_positive(
            _take(cb_doc, "sequences_per_length", "config.cb", int, 30), "config.cb.sequences_per_length"
        ),
        shots=_positive(_take(cb_doc, "shots", "config.cb", int, 8192), "config.cb.shots"),
        gate=_take(cb_doc, "gate", "config.cb", str, "CZ").upper(),
    )
    if cb.gate not in ("CZ", "CNOT"):
        raise ConfigError("config.cb.gate", "expected CZ or CNOT")
    gauge = _take(doc, "gauge_demo", "config", dict, {})
    simulate = _take(doc, "simulate", "config", dict, {})
    sim_input = _take(simulate, "input", "config.simulate", str, None)
    seed = _take(doc, "seed", "config", int, 0)
    if seed < 0:
        raise ConfigError("config.seed", "must be nonnegative")
    x = _take(gauge, "x", "config.gauge_demo", float, 2.0)
    if x == 0:
        raise ConfigError("config.gauge_demo.x", "must be nonzero")
    return Config(
        source=source,
        model=model_path,
        n_qubits=n_qubits or 0,
        qubits=tuple(qubits) if qubits is not None else (),
        ancilla=ancilla,
        ancillas=ancillas,
        k=_positive(_take(doc, "k", "config", int, 50), "config.k"),
        shots=_positive(_take(doc, "shots", "config", int, 8192), "config.shots"),
        repetitions=_positive(_take(doc, "repetitions", "config", int, 30), "config.repetitions"),
        seed=seed,
        workers=_positive(_take(doc, "workers", "config", int, 1), "config.workers"),
        cb=cb,
        gauge_x=x,
        simulate_input=None if sim_input is None else base / sim_input,
    )


def load_config(path: str | Path, require_ancilla: bool = True) -> Config:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"invalid YAML: {exc}") from None
    return parse_config(doc, path, require_ancilla)


def _model(cfg: Config) -> QpuModel:
    if cfg.model is None:
        raise ConfigError("config.model", "required for the simulator backend")
    try:
        model = load_model(cfg.model)
    except OSError as exc:
        raise ConfigError("config.model", f"cannot read {cfg.model}: {exc.strerror}") from None
    except (ModelError, yaml.YAMLError) as exc:
        raise ConfigError("config.model", str(exc)) from None
    if cfg.n_qubits and cfg.n_qubits != model.n_qubits:
        raise ConfigError("config.n_qubits", f"model has {model.n_qubits} qubits")
    cfg.n_qubits = model.n_qubits
    return model


def make_backend(spec: str, cfg: Config, timeout: float) -> Backend:
    if spec in ("sim", "sim-exact"):
        return SimulatorBackend(_model(cfg), exact=spec == "sim-exact")
    if spec.startswith("exchange:"):
        directory = spec[len("exchange:"):]
        if not directory:
            raise ConfigError("--backend", "exchange backend needs a directory")
        if not cfg.n_qubits:
            _model(cfg)
        return ExchangeBackend(directory, cfg.n_qubits, timeout=timeout)
    raise ConfigError("--backend", f"unknown backend {spec!r}")


def _resolve_qubits(cfg: Config) -> dict[int, int]:
    qubits = cfg.qubits or tuple(range(cfg.n_qubits))
    for i, q in enumerate(qubits):
        if q >= cfg.n_qubits:
            raise ConfigError(f"config.qubits[{i}]", f"qubit {q} out of range for {cfg.n_qubits} qubits")
    if cfg.ancilla is None:
        raise ConfigError("config.ancilla", "required")
    if not 0 <= cfg.ancilla < cfg.n_qubits:
        raise ConfigError("config.ancilla", f"qubit {cfg.ancilla} out of range")
    pool = sorted(set(qubits) | {cfg.ancilla})
    try:
        pairs = default_ancillas(pool, cfg.ancilla)
    except ValueError as exc:
        raise ConfigError("config.qubits", str(exc)) from None
    pairs = {q: a for q, a in pairs.items() if q in qubits}
    for q, a in cfg.ancillas.items():
        if q not in pairs:
            raise ConfigError(f"config.ancillas.{q}", "qubit is not being characterized")
        if a == q or not 0 <= a < cfg.n_qubits:
            raise ConfigError(f"config.ancillas.{q}", f"invalid ancilla {a}")
        pairs[q] = a
    return pairs


def _header(command: str, cfg: Config) -> dict[str, Any]:
    return {
        "tool": "spamsep",
        "version": __version__,
        "command": command,
        "seed": cfg.seed,
        "config_hash": cfg.digest(),
    }


def _json_safe(obj: Any) -> Any:
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else str(obj)
    if isinstance(obj, Mapping):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _write_json(path: Path, doc: Mapping[str, Any]) -> None:
    write_atomic(path, json.dumps(_json_safe(doc), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: Mapping[str, Any], columns: list[str], rows: list[list[Any]]) -> None:
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    write_atomic(path, buf.getvalue())


def _cb_doc(res: CbResult) -> dict[str, Any]:
    return {
        "r_cb": res.r_cb,
        "std_error": res.std_error,
        "per_pauli": {
            p: {"decay": d.decay, "amplitude": d.amplitude, "std_error": d.std_error, "means": d.means}
            for p, d in res.per_pauli_decays.items()
        },
        "fit_residuals": res.fit_residuals,
    }


def _run_cb(backend: Backend, cfg: Config, pairs: Mapping[int, int]) -> dict[tuple[int, int], CbResult]:
    out = {}
    for (a, t) in sorted({(a, q) for q, a in pairs.items()}):
        cbc = CbConfig(
            cycle_for(cfg.cb.gate, (a, t), cfg.n_qubits),
            cfg.cb.lengths,
            cfg.cb.sequences_per_length,
            None,
            cfg.cb.shots,
            cfg.seed,
        )
        out[(a, t)] = run_cycle_benchmark(backend, cbc)
    return out


ROW_COLUMNS = [
    "repetition", "qubit", "ancilla", "beta1_ancilla", "beta2", "beta1_target", "s_z", "m_z",
    "delta_sp", "delta_sp_se", "delta_sp_lower", "delta_sp_upper",
    "delta_m", "delta_m_se", "delta_m_lower", "delta_m_upper", "r_e", "physical", "refused",
]


def _row(r: RepetitionRow) -> list[Any]:
    e = r.estimate
    if e is None:
        return [r.repetition, r.qubit, r.ancilla] + [""] * (len(ROW_COLUMNS) - 4) + [r.refused]
    return [
        r.repetition, r.qubit, r.ancilla, e.beta1_ancilla, e.beta2, e.beta1_target, e.s_z, e.m_z,
        e.delta_sp, e.std_errors["delta_sp"], *e.delta_sp_bounds,
        e.delta_m, e.std_errors["delta_m"], *e.delta_m_bounds, e.r_e_used, int(e.physical), "",
    ]


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _guard(fn):
    """Map library errors onto exit codes."""

    def run(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            raise _Fail(EXIT_CONFIG, f"config error: {exc}") from None
        except (CapabilityError, BackendError, SerializationError) as exc:
            raise _Fail(EXIT_BACKEND, f"backend error: {exc}") from None
        except (EstimationRefused, CbError) as exc:
            raise _Fail(EXIT_REFUSED, f"estimation refused: {exc}") from None

    return run


@click.group()
@click.version_option(__version__, prog_name="spamsep")
def main() -> None:
    """Separate state-preparation and measurement errors by error propagation."""


def _common(f):
    f = click.option("--timeout", type=float, default=600.0, show_default=True, help="Exchange backend timeout (s).")(f)
    f = click.option("--backend", "backend_spec", default="sim", show_default=True, help="sim, sim-exact or exchange:<dir>.")(f)
    f = click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=Path("."), show_default=True)(f)
    f = click.option("--seed", type=int, default=None, help="Override the config seed.")(f)
    f = click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), required=True)(f)
    return f


def _invoke(body, *args) -> None:
    try:
        _guard(body)(*args)
    except _Fail as exc:
        click.echo(str(exc), err=True)
        sys.exit(exc.code)


def _prepare(config_path: Path, seed: int | None, out_dir: Path, require_ancilla: bool = True) -> Config:
    cfg = load_config(config_path, require_ancilla)
    if seed is not None:
        if seed < 0:
            raise ConfigError("--seed", "must be nonnegative")
        cfg.seed = seed
    out_dir.mkdir(parents=True, exist_ok=True)
    return cfg


@main.command()
@_common
def characterize(config_path, seed, out_dir, backend_spec, timeout) -> None:
    """Cycle benchmarking of each propagation gate, then repeated SPAM estimation."""

    def body():
        cfg = _prepare(config_path, seed, out_dir)
        backend = make_backend(backend_spec, cfg, timeout)
        pairs = _resolve_qubits(cfg)
        cb = _run_cb(backend, cfg, pairs) if cfg.cb.enabled else {}
        r_e = {pair: max(0.0, res.r_cb) for pair, res in cb.items()}
        rows = run_characterization(backend, pairs, cfg.k, cfg.shots, cfg.repetitions, cfg.seed, r_e, cfg.workers)
        header = _header("characterize", cfg)
        _write_csv(out_dir / "characterize_rows.csv", header, ROW_COLUMNS, [_row(r) for r in rows])
        summary = {
            **header,
            "cb": {f"{a}-{t}": _cb_doc(res) for (a, t), res in cb.items()},
            "qubits": [asdict(s) for s in summarize(rows)],
        }
        _write_json(out_dir / "characterize_summary.json", summary)
        refused = [r for r in rows if r.refused]
        if refused:
            raise EstimationRefused(f"{len(refused)} estimate(s) refused; first: {refused[0].refused}")
        click.echo(f"wrote {out_dir / 'characterize_rows.csv'} and {out_dir / 'characterize_summary.json'}")

    _invoke(body)


@main.command()
@_common
def cb(config_path, seed, out_dir, backend_spec, timeout) -> None:
    """Cycle benchmarking of the propagation gate for every (ancilla, qubit) pair."""

    def body():
        cfg = _prepare(config_path, seed, out_dir)
        backend = make_backend(backend_spec, cfg, timeout)
        res = _run_cb(backend, cfg, _resolve_qubits(cfg))
        doc = {**_header("cb", cfg), "cycles": {f"{cfg.cb.gate} {a} {t}": _cb_doc(r) for (a, t), r in res.items()}}
        _write_json(out_dir / "cb.json", doc)
        click.echo(f"wrote {out_dir / 'cb.json'}")

    _invoke(body)


@main.command("gauge-demo")
@_common
def gauge_demo(config_path, seed, out_dir, backend_spec, timeout) -> None:
    """Gauge orbit under unital gates, and the propagation / damping escapes."""

    def body():
        cfg = _prepare(config_path, seed, out_dir, require_ancilla=False)
        model = _model(cfg)
        orbit = demonstrate_gauge_orbit(model, cfg.gauge_x, default_design(model.n_qubits))
        doc: dict[str, Any] = {
            **_header("gauge-demo", cfg),
            "x": cfg.gauge_x,
            "max_deviation": orbit.max_deviation,
            "max_gate_change": orbit.max_gate_change,
            "parameters_changed": orbit.parameters_changed,
            "original": [asdict(p) for p in orbit.original],
            "rescaled": [asdict(p) for p in orbit.rescaled],
        }
        if cfg.ancilla is not None and model.n_qubits > 1:
            target = next(q for q in range(model.n_qubits) if q != cfg.ancilla)
            # the partner model must stay physical; try the rescaling and its inverse
            doc["propagation"] = {"skipped": "no physical partner for x or 1/x"}
            for x in (1.0 / cfg.gauge_x, cfg.gauge_x):
                try:
                    dist = distinguish_by_propagation(model, x, target, cfg.ancilla)
                except ModelError:
                    continue
                doc["propagation"] = {
                    **asdict(dist), "x": x, "target": target, "distinguished": dist.distinguished,
                }
                break
        backend = make_backend(backend_spec, cfg, timeout)
        if backend.supports_damping:
            doc["damping"] = {
                str(q): asdict(measure_error_via_damping(backend, q, cfg.shots, cfg.seed))
                for q in range(model.n_qubits)
            }
        _write_json(out_dir / "gauge_demo.json", doc)
        click.echo(f"max probability deviation {orbit.max_deviation:.3e}")

    _invoke(body)


@main.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--seed", type=int, default=None, help="Fallback sampling seed for records without one.")
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=Path("."), show_default=True)
@click.option("--input", "input_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--watch", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Serve an exchange directory until idle for --timeout seconds.")
@click.option("--timeout", type=float, default=600.0, show_default=True)
def simulate(config_path, seed, out_dir, input_path, watch, timeout) -> None:
    """Execute a circuit batch file on the configured model and write counts."""

    def body():
        cfg = _prepare(config_path, seed, out_dir, require_ancilla=False)
        model = _model(cfg)
        if watch is not None:
            watch.mkdir(parents=True, exist_ok=True)
            idle_since = time.monotonic()
            while time.monotonic() - idle_since < timeout:
                if process_exchange_dir(model, watch, cfg.seed):
                    idle_since = time.monotonic()
                else:
                    time.sleep(0.05)
            return
        src = input_path or cfg.simulate_input
        if src is None:
            raise ConfigError("config.simulate.input", "required (or pass --input)")
        try:
            text = Path(src).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("config.simulate.input", f"cannot read {src}: {exc.strerror}") from None
        try:
            results = execute_batch_document(model, text, cfg.seed)
        except ModelError as exc:
            raise BackendError(str(exc)) from None
        dest = out_dir / (Path(src).stem + ".counts")
        write_atomic(dest, serialize_counts(results))
        click.echo(f"wrote {dest}")

    _invoke(body)


if __name__ == "__main__":
    main()
