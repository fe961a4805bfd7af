"""Command-line front end.

Subcommands: ``validate``, ``decompose``, ``run``, ``demo-dephasing``.
Exit codes: 0 success, 1 domain failure, 2 I/O or parse failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .channel import (
    RESIDUAL_TOL,
    decay_horizon,
    default_candidate_times,
    dephasing,
    evaluate,
    extract_basis,
    validate_channel,
)
from .exceptions import IncompleteFrameError, TomographyError
from .operators import DensityMatrix
from .tomography import (
    ILL_CONDITIONED,
    TimeGrid,
    check_completeness,
    check_solvability,
    dephasing_closed_form,
    dephasing_observables,
    dephasing_projections,
    frame_operators,
    lambda_matrix,
    reconstruct_state,
    select_time_grid,
    simulate_measurements,
    solve_projections,
)

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2
AUTO_HORIZON_FACTOR = 3.0
DEMO_STATE = np.array([[0.6, 0.1 - 0.2j], [0.1 + 0.2j, 0.4]])


class StageError(Exception):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage
        self.exc = exc


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (TomographyError, ValueError) as exc:
        if isinstance(exc, io.ScenarioError):
            raise
        raise StageError(name, exc) from exc


def _emit(text: str, path=None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _horizon(scn: io.Scenario) -> float:
    if scn.horizon is not None:
        return scn.horizon
    h = decay_horizon(scn.channel, AUTO_HORIZON_FACTOR)
    if h is None:
        raise io.ScenarioError("grid.horizon is required when no decay rates are known")
    return h


def _probe_grid(scn: io.Scenario) -> list[float]:
    if scn.probe_grid is not None:
        return list(scn.probe_grid)
    hi = scn.channel.domain[1]
    if scn.grid_times is not None:
        pts = set(scn.grid_times)
    else:
        pts = set(np.linspace(0.0, min(_horizon(scn), hi), 9))
    return sorted(pts | {0.0})


def cmd_validate(args) -> int:
    scn = io.load_scenario(args.scenario)
    report = _stage("validate", validate_channel, scn.channel, _probe_grid(scn))
    out = {"scenario": scn.name, "probe_grid": _probe_grid(scn), **report.to_dict()}
    _emit(io.dumps(out))
    return EXIT_OK if report.ok else EXIT_DOMAIN


def _candidates(scn: io.Scenario):
    if scn.candidate_times is not None:
        return list(scn.candidate_times)
    return list(default_candidate_times(scn.channel.dim, _horizon(scn)))


def _decompose(scn: io.Scenario, probe_times=()):
    return _stage(
        "decompose", extract_basis, scn.channel, _candidates(scn), probe_times=probe_times
    )


def cmd_decompose(args) -> int:
    scn = io.load_scenario(args.scenario)
    probes = list(scn.grid_times or ()) + list(scn.probe_grid or ())
    try:
        decomp = _decompose(scn, probes)
    except StageError as exc:
        _err(str(exc))
        time = getattr(exc.exc, "time", None)
        _emit(io.dumps({"scenario": scn.name, "ok": False, "error": str(exc.exc), "offending_time": time}))
        return EXIT_DOMAIN
    times = list(decomp.signals[0].times)
    residuals = [float(np.linalg.norm(decomp.evaluate(t) - evaluate(scn.channel, t))) for t in times]
    ok = max(residuals) <= RESIDUAL_TOL
    out = {
        "scenario": scn.name,
        "ok": ok,
        "mu": decomp.mu,
        "basis": [np.asarray(a) for a in decomp.basis],
        "times": times,
        "residuals": residuals,
        "max_residual": max(residuals),
    }
    _emit(io.dumps(out))
    return EXIT_OK if ok else EXIT_DOMAIN


def run_pipeline(scn: io.Scenario) -> tuple[dict, object]:
    """Run every stage; returns the report dict and the record (if simulated)."""
    channel = scn.channel
    if scn.record_path is None and scn.true_state is None:
        raise io.ScenarioError("simulation mode needs true_state (or give a record path)")
    if not scn.observables:
        raise io.ScenarioError("scenario lists no observables")

    check = _stage("validate", validate_channel, channel, _probe_grid(scn))
    if not check.ok:
        raise StageError("validate", TomographyError(f"channel failed validation: {check.to_dict()}"))

    record = None
    if scn.record_path is not None:
        record = io.read_record_csv(scn.record_path, scn.observables)
        grid = record.grid
    elif scn.grid_times is not None:
        grid = _stage("grid", TimeGrid, scn.grid_times)
    else:
        grid = None

    if channel.is_decomposed:
        decomp = channel.decomposition
    else:
        decomp = _decompose(scn, tuple(grid) if grid is not None else ())
    if grid is None:
        grid = _stage("grid", select_time_grid, decomp, _horizon(scn), scn.p, seed=scn.seed)
        if not channel.is_decomposed:
            # exact lambda values at the chosen times instead of interpolated ones
            decomp = _decompose(scn, tuple(grid))

    if record is None:
        record = _stage(
            "simulate", simulate_measurements, channel, scn.true_state, scn.observables, grid,
            scn.noise_sigma, scn.seed,
        )

    lm = _stage("lambda-matrix", lambda_matrix, decomp, grid)
    sol = check_solvability(lm)
    frame = _stage("frame", frame_operators, scn.observables, decomp)
    comp = check_completeness(frame, scn.trace_augmentation)
    out = {
        "scenario": scn.name,
        "mu": decomp.mu,
        "grid": list(grid),
        "lambda_matrix": lm,
        "solvability": {
            "square": sol.square, "invertible": sol.invertible,
            "condition": sol.condition, "rank": sol.rank,
        },
        "completeness": {
            "complete": comp.complete, "span_dimension": comp.span_dimension,
            "deficit": comp.deficit, "hermitian_span_dimension": comp.hermitian_span_dimension,
            "trace_augmentation": scn.trace_augmentation,
        },
    }
    proj = _stage("solve", solve_projections, record, lm)
    out["projections"] = np.asarray(proj, dtype=complex)
    try:
        report = reconstruct_state(
            proj, frame, scn.trace_augmentation, scn.project_to_density, lambda_condition=sol.condition
        )
    except IncompleteFrameError as exc:
        out["ok"] = False
        out["error"] = str(exc)
        out["deficit"] = exc.deficit
        raise _IncompleteRun(out, record, exc) from exc
    out.update(io.report_to_dict(report))
    if scn.true_state is not None:
        out["frobenius_error"] = float(np.linalg.norm(report.state.matrix - scn.true_state.matrix))
    out["ok"] = True
    return out, record


class _IncompleteRun(Exception):
    def __init__(self, out, record, exc):
        super().__init__(str(exc))
        self.out, self.record, self.exc = out, record, exc


def cmd_run(args) -> int:
    scn = io.load_scenario(args.scenario)
    try:
        out, record = run_pipeline(scn)
        code = EXIT_OK
    except _IncompleteRun as inc:
        _err(f"reconstruct: {inc.exc}")
        out, record, code = inc.out, inc.record, EXIT_DOMAIN
    if args.record_out and record is not None:
        io.write_record_csv(record, args.record_out)
    _emit(io.dumps(out), args.report_out)
    return code


def demo_dephasing(gamma: float, t: float) -> dict:
    """Qubit dephasing walkthrough with ``Q_1 = X`` at ``0`` and ``Q_2 = Y + Z``
    at ``0`` and ``t``; returns every intermediate quantity.
    """
    if not (gamma > 0):
        raise ValueError(f"gamma must be positive, got {gamma}")
    model = dephasing(gamma)
    decomp = model.decomposition
    q1, q2 = dephasing_observables()
    rho0 = DensityMatrix(DEMO_STATE)
    warnings = []

    grid = TimeGrid((0.0, t)) if t > 0 else TimeGrid((0.0,))
    rec = simulate_measurements(model, rho0, [q1, q2], grid)
    m1_0, m2_0 = rec.values[0, 0], rec.values[1, 0]
    m2_t = rec.values[1, -1]
    z, y = dephasing_projections(m2_0, m2_t, gamma, t)
    closed = dephasing_closed_form(m1_0, m2_0, m2_t, gamma, t)

    lm = lambda_matrix(decomp, grid)
    sol = check_solvability(lm)
    decay = math.exp(-gamma * t)
    if sol.condition > ILL_CONDITIONED:
        warnings.append(f"lambda-matrix condition {sol.condition:.3g} exceeds {ILL_CONDITIONED:.0e}")
    if decay < 1.0 / ILL_CONDITIONED:
        warnings.append(
            f"exp(-gamma t) = {decay:.3g} has decayed below {1.0 / ILL_CONDITIONED:.0e}; "
            "the second measurement carries almost no coherence signal"
        )
    proj = solve_projections(rec, lm)
    frame = frame_operators([q1, q2], decomp)
    report = reconstruct_state(proj, frame, True, False, lambda_condition=sol.condition)
    return {
        "gamma": gamma,
        "t": t,
        "D_t": evaluate(model, t),
        "decomposition": {
            "A": [np.asarray(a) for a in decomp.basis],
            "lambda_t": decomp.signal_values(t),
        },
        "observables": {"Q1": q1.matrix, "Q2": q2.matrix},
        "true_state": rho0.matrix,
        "measurements": {"m1(0)": m1_0, "m2(0)": m2_0, "m2(t)": m2_t},
        "lambda_matrix": lm,
        "lambda_condition": sol.condition,
        "projections": {"Tr(sigma3 rho)": z, "Tr(sigma2 rho)": y},
        "closed_form_state": closed.matrix,
        "pipeline_state": report.state.matrix,
        "closed_vs_pipeline": float(np.linalg.norm(closed.matrix - report.state.matrix)),
        "frobenius_error": float(np.linalg.norm(closed.matrix - rho0.matrix)),
        "warnings": warnings,
    }


def _fmt_matrix(m) -> str:
    m = np.asarray(m, dtype=complex)
    rows = ["  [" + ", ".join(f"{z.real:.17g}{z.imag:+.17g}j" for z in row) + "]" for row in m]
    return "\n".join(rows)


def cmd_demo(args) -> int:
    d = demo_dephasing(args.gamma, args.t)
    for w in d["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    if args.json:
        _emit(io.dumps(d))
        return EXIT_OK
    f = io.fmt
    lines = [
        f"qubit dephasing, gamma = {f(d['gamma'])}, t = {f(d['t'])}",
        "D(t) =", _fmt_matrix(d["D_t"]),
        "D(t) = lambda_1(t) A_1 + lambda_2(t) A_2 with lambda_1 = 1, lambda_2 = exp(-gamma t)",
        "A_1 =", _fmt_matrix(d["decomposition"]["A"][0]),
        "A_2 =", _fmt_matrix(d["decomposition"]["A"][1]),
        "Q1 =", _fmt_matrix(d["observables"]["Q1"]),
        "Q2 =", _fmt_matrix(d["observables"]["Q2"]),
        "true rho(0) =", _fmt_matrix(d["true_state"]),
    ]
    lines += [f"{k} = {f(v)}" for k, v in d["measurements"].items()]
    lines += [f"{k} = {f(v)}" for k, v in d["projections"].items()]
    lines += [
        "reconstructed rho(0) (closed form) =", _fmt_matrix(d["closed_form_state"]),
        "reconstructed rho(0) (frame inversion) =", _fmt_matrix(d["pipeline_state"]),
        f"closed form vs frame inversion (Frobenius) = {f(d['closed_vs_pipeline'])}",
        f"error vs true state (Frobenius) = {f(d['frobenius_error'])}",
    ]
    _emit("\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dyntomo", description="Dynamic state tomography for phase-damping channels")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check positivity, unit diagonal and D(0) = J")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("decompose", help="extract a constant basis for D(t)")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("run", help="simulate, solve and reconstruct")
    p.add_argument("--scenario", required=True)
    p.add_argument("--record-out", help="write the measurement record CSV here")
    p.add_argument("--report-out", help="write the report JSON here (default: stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("demo-dephasing", help="qubit dephasing walkthrough")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--t", type=float, default=math.log(2))
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (io.ScenarioError, OSError) as exc:
        _err(str(exc))
        return EXIT_IO
    except StageError as exc:
        _err(str(exc))
        return EXIT_DOMAIN
    except (TomographyError, ValueError) as exc:
        _err(str(exc))
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
