"""State reconstruction from repeated measurements under a damping channel.

Pipeline: simulate (or load) ``m_i(t_j)``; build the lambda-matrix
``[lambda_k(t_j)]``; solve it for the projections
``Tr{(Q_i o A_k^T) rho(0)}``; check that the frame operators
``Q_i o A_k^T`` span the operator space; invert the frame for ``rho(0)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import BasisDecomposition, DampingModel, evaluate
from .exceptions import (
    DegenerateSignalsError,
    DegenerateTimesError,
    DimensionError,
    IncompleteFrameError,
    SolvabilityError,
)
from .operators import (
    DensityMatrix,
    Observable,
    as_density,
    hadamard,
    hermitian_basis,
    hermitian_part,
    nearest_density,
    numerical_rank,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
)

log = logging.getLogger(__name__)

SINGULAR_TOL = 1e-9
ILL_CONDITIONED = 1e12
GRID_CANDIDATES = 256


@dataclass(frozen=True)
class TimeGrid:
    instants: tuple

    def __post_init__(self):
        ts = tuple(float(t) for t in self.instants)
        if not ts:
            raise ValueError("time grid is empty")
        if any(not math.isfinite(t) or t < 0 for t in ts):
            raise ValueError("grid times must be finite and >= 0")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("grid times must be strictly increasing")
        object.__setattr__(self, "instants", ts)

    def __len__(self):
        return len(self.instants)

    def __iter__(self):
        return iter(self.instants)


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    observables: tuple
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        shape = (len(self.observables), len(self.grid))
        if values.shape != shape:
            raise DimensionError(f"record values have shape {values.shape}, expected {shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("record values must be finite")
        object.__setattr__(self, "observables", tuple(self.observables))
        object.__setattr__(self, "values", values)

    @property
    def labels(self) -> list[str]:
        return [q.label for q in self.observables]


@dataclass(frozen=True, eq=False)
class FrameOperators:
    """``operators[i, k] = Q_i o A_k^T``, shape ``(r, mu, n, n)``."""

    operators: np.ndarray

    @property
    def dim(self) -> int:
        return self.operators.shape[-1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.operators.shape[:2]

    def flat(self) -> list[np.ndarray]:
        return list(self.operators.reshape(-1, self.dim, self.dim))


@dataclass(frozen=True)
class Solvability:
    square: bool
    invertible: bool
    condition: float
    rank: int


@dataclass(frozen=True)
class Completeness:
    complete: bool
    span_dimension: int
    deficit: int
    hermitian_span_dimension: int


@dataclass
class ReconstructionReport:
    state: DensityMatrix | None
    complete: bool
    span_dimension: int
    deficit: int
    lambda_condition: float
    residual: float
    projected_to_density: bool
    hermitian_span_dimension: int = 0
    frame_condition: float = float("nan")
    warnings: list = field(default_factory=list)


def simulate_measurements(
    model: DampingModel,
    rho0,
    observables: Sequence[Observable],
    grid: TimeGrid,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> MeasurementRecord:
    """``m_i(t_j) = Tr{Q_i (D(t_j) o rho0)}`` plus optional Gaussian noise."""
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    rho = as_density(rho0)
    if rho.dim != model.dim:
        raise DimensionError(f"state dim {rho.dim} != channel dim {model.dim}")
    for q in observables:
        if q.dim != model.dim:
            raise DimensionError(f"observable {q.label!r} has dim {q.dim}, expected {model.dim}")
    values = np.empty((len(observables), len(grid)))
    for j, t in enumerate(grid):
        rho_t = hadamard(evaluate(model, t), rho.matrix)
        for i, q in enumerate(observables):
            values[i, j] = np.sum(q.matrix * rho_t.T).real
    if noise_sigma > 0:
        values += np.random.default_rng(seed).normal(0.0, noise_sigma, size=values.shape)
    return MeasurementRecord(tuple(observables), grid, values)


def lambda_matrix(decomp: BasisDecomposition, grid: TimeGrid) -> np.ndarray:
    """``p x mu`` matrix with entry ``(j, k) = lambda_k(t_j)``."""
    return np.array([decomp.signal_values(t) for t in grid], dtype=complex)


def check_solvability(lm) -> Solvability:
    lm = np.atleast_2d(np.asarray(lm, dtype=complex))
    p, mu = lm.shape
    s = np.linalg.svd(lm, compute_uv=False)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > SINGULAR_TOL * smax)) if smax > 0 else 0
    condition = float(smax / s[-1]) if s.size and s[-1] > 0 else math.inf
    square = p == mu
    return Solvability(square, square and rank == mu, condition, rank)


def select_time_grid(
    decomp: BasisDecomposition,
    horizon: float,
    p: int | None = None,
    candidates: int = GRID_CANDIDATES,
    seed: int = 0,
) -> TimeGrid:
    """Best of ``candidates`` random grids on ``[0, horizon]``.

    Square systems are scored by ``|det|``, overdetermined ones by the
    smallest singular value.
    """
    mu = decomp.mu
    p = mu if p is None else int(p)
    if p < mu:
        raise ValueError(f"p={p} is below mu={mu}; the projections cannot be solved")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    lo, hi = decomp.domain
    if lo > 0 or horizon > hi:
        raise ValueError(f"horizon {horizon} not inside signal domain [{lo}, {hi}]")
    rng = np.random.default_rng(seed)
    draws = np.sort(rng.uniform(0.0, horizon, size=(candidates, p)), axis=1)
    # (candidates, p, mu) stack of lambda-matrices, evaluated in one pass per signal
    lms = np.stack([np.asarray(s(draws), dtype=complex) for s in decomp.signals], axis=-1)
    if p == mu:
        scores = np.abs(np.linalg.det(lms))
    else:
        scores = np.linalg.svd(lms, compute_uv=False)[:, -1]
    scores = np.where(np.all(np.diff(draws, axis=1) > 0, axis=1), scores, -1.0)
    if scores.size == 0 or scores.max() < 0:
        raise DegenerateSignalsError("no candidate grid was drawn")
    best = draws[int(np.argmax(scores))]
    grid = TimeGrid(tuple(best))
    sol = check_solvability(lambda_matrix(decomp, grid))
    if sol.rank < mu:
        raise DegenerateSignalsError(
            f"no grid in {candidates} candidates gives a full-rank lambda-matrix; "
            "signals look linearly dependent"
        )
    return grid


def solve_projections(record: MeasurementRecord, lm) -> np.ndarray:
    """Solve ``m_i = L x_i`` for every observable; returns ``r x mu``.

    ``p == mu`` requires an invertible ``L``; ``p > mu`` is solved by least
    squares and requires full column rank.
    """
    lm = np.atleast_2d(np.asarray(lm, dtype=complex))
    p, mu = lm.shape
    if p != len(record.grid):
        raise DimensionError(f"lambda-matrix has {p} rows but record has {len(record.grid)} times")
    sol = check_solvability(lm)
    if p < mu or sol.rank < mu:
        raise SolvabilityError(
            f"lambda-matrix ({p}x{mu}, rank {sol.rank}) does not determine the projections: "
            "need at least as many distinct times as basis elements and a nonsingular matrix"
        )
    data = record.values.T
    if sol.square:
        x = np.linalg.solve(lm, data)
    else:
        x, *_ = np.linalg.lstsq(lm, data, rcond=None)
    x = x.T
    if np.all(np.abs(x.imag) == 0):
        return x.real
    return x


def frame_operators(observables: Sequence[Observable], decomp: BasisDecomposition) -> FrameOperators:
    n = decomp.dim
    for q in observables:
        if q.dim != n:
            raise DimensionError(f"observable {q.label!r} has dim {q.dim}, expected {n}")
    ops = np.array([[hadamard(q.matrix, a.T) for a in decomp.basis] for q in observables], dtype=complex)
    return FrameOperators(ops.reshape(len(observables), decomp.mu, n, n))


def _hermitian_parts(mats) -> list[np.ndarray]:
    out = []
    for m in mats:
        out.append(hermitian_part(m))
        out.append(hermitian_part(-1j * m))
    return out


def check_completeness(frame: FrameOperators, include_trace_constraint: bool = True) -> Completeness:
    """Rank of the frame operators over the complex operator space.

    With ``include_trace_constraint`` the identity joins the frame, encoding
    the a-priori datum ``Tr rho = 1``.
    """
    n = frame.dim
    mats = frame.flat()
    if include_trace_constraint:
        mats = mats + [np.eye(n, dtype=complex)]
    span = numerical_rank(mats) if mats else 0
    # real span of Hermitian parts: what a Hermitian unknown actually sees
    herm = _hermitian_parts(mats)
    herm_vecs = [np.concatenate([h.real.ravel(), h.imag.ravel()]) for h in herm]
    herm_span = numerical_rank(herm_vecs) if herm_vecs else 0
    return Completeness(span == n * n, span, n * n - span, herm_span)


def reconstruct_state(
    projections,
    frame: FrameOperators,
    include_trace_constraint: bool = True,
    project_to_density: bool = False,
    lambda_condition: float = float("nan"),
) -> ReconstructionReport:
    """Linear inversion of ``Tr(M_ik rho) = v_ik`` over Hermitian ``rho``.

    ``rho`` is parametrized by real coordinates over the Gell-Mann basis.
    Each datum gives two real equations (real and imaginary parts); the trace
    constraint adds ``Tr rho = 1``. Positivity is not imposed unless
    ``project_to_density`` is set, in which case the result is flagged.

    Raises :class:`IncompleteFrameError` when the frame does not span.
    """
    n = frame.dim
    comp = check_completeness(frame, include_trace_constraint)
    if not comp.complete:
        raise IncompleteFrameError(
            f"frame spans {comp.span_dimension} of {n * n} dimensions (deficit {comp.deficit})",
            comp.span_dimension,
            comp.deficit,
        )
    v = np.asarray(projections, dtype=complex)
    if v.shape != frame.shape:
        raise DimensionError(f"projections have shape {v.shape}, expected {frame.shape}")
    basis = hermitian_basis(n).stacked()
    mats = frame.flat()
    # pairing[f, a] = Tr(M_f G_a)
    pairing = np.einsum("fij,aji->fa", np.array(mats), basis)
    rows = [pairing.real, pairing.imag]
    rhs = [v.ravel().real, v.ravel().imag]
    if include_trace_constraint:
        rows.append(np.trace(basis, axis1=1, axis2=2).real[None, :])
        rhs.append(np.array([1.0]))
    design = np.vstack(rows)
    target = np.concatenate(rhs)
    coords, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = float(np.linalg.norm(design @ coords - target))
    s = np.linalg.svd(design, compute_uv=False)
    frame_cond = float(s[0] / s[-1]) if s[-1] > 0 else math.inf

    warnings = []
    if frame_cond > ILL_CONDITIONED:
        warnings.append(f"ill-conditioned frame system (condition {frame_cond:.3g})")
    if math.isfinite(lambda_condition) and lambda_condition > ILL_CONDITIONED:
        warnings.append(f"ill-conditioned lambda-matrix (condition {lambda_condition:.3g})")

    estimate = hermitian_part(np.tensordot(coords, basis, axes=1))
    tr = np.trace(estimate).real
    if not include_trace_constraint and abs(tr) > 0:
        # strict mode does not know Tr rho = 1 a priori; report what the data say
        if abs(tr - 1.0) > 1e-10:
            warnings.append(f"estimate has trace {tr:.6g}; renormalized")
        estimate = estimate / tr
    projected = False
    if project_to_density:
        state = nearest_density(estimate)
        projected = True
    else:
        state = DensityMatrix(estimate, require_positive=False)
        if not state.positive:
            warnings.append(f"estimate is not positive (min eigenvalue {state.min_eigenvalue:.3g})")
    for w in warnings:
        log.warning(w)
    return ReconstructionReport(
        state=state,
        complete=True,
        span_dimension=comp.span_dimension,
        deficit=comp.deficit,
        lambda_condition=lambda_condition,
        residual=residual,
        projected_to_density=projected,
        hermitian_span_dimension=comp.hermitian_span_dimension,
        frame_condition=frame_cond,
        warnings=warnings,
    )


def reconstruct(
    record: MeasurementRecord,
    decomp: BasisDecomposition,
    include_trace_constraint: bool = True,
    project_to_density: bool = False,
) -> ReconstructionReport:
    """Convenience pipeline: lambda-matrix, projections, frame inversion."""
    lm = lambda_matrix(decomp, record.grid)
    sol = check_solvability(lm)
    proj = solve_projections(record, lm)
    frame = frame_operators(record.observables, decomp)
    return reconstruct_state(
        proj, frame, include_trace_constraint, project_to_density, lambda_condition=sol.condition
    )


@dataclass(frozen=True)
class MinimalObservables:
    subset: tuple
    size: int
    indices: tuple


def minimal_observables(
    dictionary: Sequence[Observable],
    decomp: BasisDecomposition,
    include_trace_constraint: bool = True,
) -> MinimalObservables:
    """Greedy forward selection of observables until the frame spans.

    Each step adds the dictionary entry with the largest gain in span
    dimension; ties go to the lowest index.
    """
    dictionary = list(dictionary)
    if not dictionary:
        raise ValueError("observable dictionary is empty")
    full = check_completeness(frame_operators(dictionary, decomp), include_trace_constraint)
    if not full.complete:
        raise IncompleteFrameError(
            f"dictionary frame spans only {full.span_dimension} dimensions (deficit {full.deficit})",
            full.span_dimension,
            full.deficit,
        )
    n = decomp.dim
    per_obs = [frame_operators([q], decomp).flat() for q in dictionary]
    chosen: list[int] = []
    current = [np.eye(n, dtype=complex)] if include_trace_constraint else []
    span = numerical_rank(current) if current else 0
    while span < n * n:
        gains = []
        for i, ops in enumerate(per_obs):
            if i in chosen:
                gains.append(-1)
                continue
            gains.append(numerical_rank(current + ops) - span)
        best = int(np.argmax(gains))
        chosen.append(best)
        current = current + per_obs[best]
        span = numerical_rank(current)
    subset = tuple(dictionary[i] for i in chosen)
    return MinimalObservables(subset, len(subset), tuple(chosen))


def dephasing_observables() -> tuple[Observable, Observable]:
    """``Q_1 = X`` and ``Q_2 = Y + Z``."""
    return Observable(SIGMA_X, "Q1"), Observable(SIGMA_Y + SIGMA_Z, "Q2")


def dephasing_projections(m2_0: float, m2_t: float, gamma: float, t: float) -> tuple[float, float]:
    """``(Tr Z rho, Tr Y rho)`` from ``Q_2`` measured at ``0`` and ``t``."""
    if not (gamma > 0 and t > 0):
        raise DegenerateTimesError(f"need gamma > 0 and t > 0 (got gamma={gamma}, t={t})")
    e = math.exp(-gamma * t)
    if e == 1.0:
        raise DegenerateTimesError("exp(-gamma t) rounds to 1; times are indistinguishable")
    return (m2_0 * e - m2_t) / (e - 1.0), (m2_t - m2_0) / (e - 1.0)


def dephasing_closed_form(m1_0: float, m2_0: float, m2_t: float, gamma: float, t: float) -> DensityMatrix:
    """Explicit qubit reconstruction under dephasing with ``Q_1 = X``,
    ``Q_2 = Y + Z``; ``Q_1`` at ``t = 0``, ``Q_2`` at ``0`` and ``t``.

    The result is Hermitian with unit trace; positivity depends on the data
    and is reported via ``state.positive`` rather than raised.
    """
    z, y = dephasing_projections(m2_0, m2_t, gamma, t)
    rho = 0.5 * (np.eye(2) + m1_0 * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z)
    state = DensityMatrix(rho, require_positive=False)
    if not state.positive:
        log.warning("closed-form estimate is not positive (min eigenvalue %.3g)", state.min_eigenvalue)
    return state
