"""File formats: scenario JSON, measurement-record CSV, report JSON.

Complex numbers are ``[re, im]`` pairs; a matrix is a list of rows of such
pairs. Bare real numbers are accepted on input wherever a complex is expected.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .channel import BasisDecomposition, DampingModel, ExponentialSum, TabulatedSignal, dephasing
from .decoherence import PureDecoherenceModel, coefficient_matrix
from .operators import DensityMatrix, Observable
from .tomography import MeasurementRecord, ReconstructionReport, TimeGrid


class ScenarioError(ValueError):
    """Malformed scenario or record file (CLI exit code 2)."""


def complex_from_json(x) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise ScenarioError(f"expected a number or [re, im] pair, got {x!r}")


def complex_to_json(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def matrix_from_json(rows) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ScenarioError("matrix must be a nonempty list of rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ScenarioError("matrix rows have unequal length")
    return np.array([[complex_from_json(x) for x in r] for r in rows], dtype=complex)


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[complex_to_json(x) for x in row] for row in m]


def jsonable(obj: Any):
    """Recursively convert numpy and complex values for ``json.dumps``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, DensityMatrix):
        return matrix_to_json(obj.matrix)
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            if obj.ndim == 2:
                return matrix_to_json(obj)
            return [jsonable(v) for v in obj]
        return jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_to_json(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, allow_nan=False) + "\n"


def signal_from_json(spec) -> ExponentialSum | TabulatedSignal:
    if not isinstance(spec, dict):
        raise ScenarioError(f"signal spec must be an object, got {spec!r}")
    if "terms" in spec:
        return ExponentialSum(
            tuple((complex_from_json(t["coeff"]), complex_from_json(t["rate"])) for t in spec["terms"])
        )
    if "times" in spec and "values" in spec:
        return TabulatedSignal(tuple(spec["times"]), tuple(complex_from_json(v) for v in spec["values"]))
    raise ScenarioError("signal spec needs 'terms' or 'times'+'values'")


def signal_to_json(sig) -> dict:
    if isinstance(sig, ExponentialSum):
        return {"terms": [{"coeff": complex_to_json(c), "rate": complex_to_json(z)} for c, z in sig.terms]}
    return {"times": list(sig.times), "values": [complex_to_json(v) for v in sig.values]}


def decomposition_to_json(decomp: BasisDecomposition) -> dict:
    return {
        "type": "damping_model",
        "basis": [matrix_to_json(a) for a in decomp.basis],
        "signals": [signal_to_json(s) for s in decomp.signals],
    }


def decoherence_from_json(spec) -> PureDecoherenceModel:
    return PureDecoherenceModel(
        energies=tuple(float(e) for e in spec["energies"]),
        env_hamiltonian=matrix_from_json(spec["env_hamiltonian"]),
        couplings=tuple(matrix_from_json(b) for b in spec["couplings"]),
        env_state=DensityMatrix(matrix_from_json(spec["env_state"])),
    )


def channel_from_json(spec) -> tuple[DampingModel, PureDecoherenceModel | None]:
    """Build the channel; the second item is set for pure-decoherence specs."""
    kind = spec.get("type")
    if kind == "dephasing":
        return dephasing(float(spec["gamma"])), None
    if kind in ("damping_model", "decomposed"):
        decomp = BasisDecomposition(
            tuple(matrix_from_json(a) for a in spec["basis"]),
            tuple(signal_from_json(s) for s in spec["signals"]),
        )
        return DampingModel.from_decomposition(decomp, name=spec.get("name", "")), None
    if kind == "sampled":
        mats = [matrix_from_json(m) for m in spec["matrices"]]
        return DampingModel.from_samples(spec["times"], mats), None
    if kind == "pure_decoherence":
        model = decoherence_from_json(spec)
        channel = DampingModel.from_function(
            lambda t: coefficient_matrix(model, t).matrix, model.n, name="pure-decoherence"
        )
        return channel, model
    raise ScenarioError(f"unknown channel type {kind!r}")


@dataclass
class Scenario:
    name: str
    channel: DampingModel
    decoherence: PureDecoherenceModel | None
    observables: list
    true_state: DensityMatrix | None = None
    grid_times: tuple | None = None
    horizon: float | None = None
    p: int | None = None
    probe_grid: tuple | None = None
    candidate_times: tuple | None = None
    noise_sigma: float = 0.0
    seed: int = 0
    trace_augmentation: bool = True
    project_to_density: bool = False
    record_path: Path | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def auto_grid(self) -> bool:
        return self.grid_times is None


def load_scenario(path) -> Scenario:
    """Parse a scenario file; every malformation surfaces as ScenarioError."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return _scenario_from_dict(raw, path.parent)
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"{path}: {type(exc).__name__}: {exc}") from exc


def _scenario_from_dict(raw: dict, base: Path) -> Scenario:
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")
    specs = [k for k in ("channel", "damping_model", "pure_decoherence") if k in raw]
    if len(specs) != 1:
        raise ScenarioError("scenario needs exactly one channel spec")
    spec = dict(raw[specs[0]])
    if specs[0] != "channel":
        spec.setdefault("type", specs[0])
    channel, deco = channel_from_json(spec)

    observables = [
        Observable(matrix_from_json(o["matrix"]), o.get("label", f"Q{i + 1}"))
        for i, o in enumerate(raw.get("observables", []))
    ]
    labels = [q.label for q in observables]
    if len(set(labels)) != len(labels):
        raise ScenarioError("observable labels must be unique")
    state = raw.get("true_state")
    true_state = DensityMatrix(matrix_from_json(state)) if state is not None else None

    grid = raw.get("grid", {"auto": True})
    if isinstance(grid, list):
        grid = {"times": grid}
    grid_times = tuple(float(t) for t in grid["times"]) if "times" in grid else None
    if grid_times is None and not grid.get("auto", False):
        raise ScenarioError("grid needs 'times' or 'auto': true")
    horizon = grid.get("horizon")
    options = raw.get("options", {})
    record = raw.get("record")
    opt = lambda key: tuple(float(t) for t in raw[key]) if key in raw else None
    return Scenario(
        name=str(raw.get("name", "")),
        channel=channel,
        decoherence=deco,
        observables=observables,
        true_state=true_state,
        grid_times=grid_times,
        horizon=float(horizon) if horizon is not None else None,
        p=int(grid["p"]) if grid.get("p") is not None else None,
        probe_grid=opt("probe_grid"),
        candidate_times=opt("candidate_times"),
        noise_sigma=float(raw.get("noise_sigma", 0.0)),
        seed=int(raw.get("seed", 0)),
        trace_augmentation=bool(options.get("trace_augmentation", True)),
        project_to_density=bool(options.get("project_to_density", False)),
        record_path=(base / record) if record else None,
        raw=raw,
    )


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_record_csv(record: MeasurementRecord, path) -> None:
    """Header ``t,<label_1>,...,<label_r>``, one row per time instant."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + record.labels)
        for j, t in enumerate(record.grid):
            w.writerow([fmt(t)] + [fmt(v) for v in record.values[:, j]])


def read_record_csv(path, observables) -> MeasurementRecord:
    """Load a record; columns are matched to ``observables`` by label."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0].strip() != "t":
        raise ScenarioError(f"{path}: header must start with 't'")
    header = [h.strip() for h in rows[0]]
    by_label = {q.label: q for q in observables}
    missing = [h for h in header[1:] if h not in by_label]
    if missing:
        raise ScenarioError(f"{path}: no observable for columns {missing}")
    try:
        body = [[float(x) for x in r] for r in rows[1:] if r]
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    if any(len(r) != len(header) for r in body):
        raise ScenarioError(f"{path}: ragged rows")
    data = np.array(body, dtype=float).reshape(-1, len(header))
    try:
        grid = TimeGrid(tuple(data[:, 0]))
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    return MeasurementRecord(tuple(by_label[h] for h in header[1:]), grid, data[:, 1:].T)


def report_to_dict(report: ReconstructionReport) -> dict:
    state = report.state
    return {
        "state": state.matrix if state is not None else None,
        "state_positive": bool(state.positive) if state is not None else None,
        "complete": report.complete,
        "span_dimension": report.span_dimension,
        "hermitian_span_dimension": report.hermitian_span_dimension,
        "deficit": report.deficit,
        "lambda_condition": report.lambda_condition,
        "frame_condition": report.frame_condition,
        "residual": report.residual,
        "projected_to_density": report.projected_to_density,
        "warnings": list(report.warnings),
    }
