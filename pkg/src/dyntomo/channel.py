"""Phase-damping channels ``rho(t) = D(t) o rho(0)``.

A :class:`DampingModel` is either a constant-basis decomposition
``D(t) = sum_k lambda_k(t) A_k`` or an opaque matrix-valued function of time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .exceptions import (
    ChannelValidationError,
    DecompositionError,
    DimensionError,
    TimeDomainError,
)
from .operators import (
    PSD_TOL,
    RANK_TOL,
    DensityMatrix,
    all_ones,
    as_density,
    as_square,
    hadamard,
    hermitian_part,
    numerical_rank,
)

UNIT_DIAG_TOL = 1e-10
INIT_TOL = 1e-10
RESIDUAL_TOL = 1e-9


def _check_time(t: float) -> float:
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise TimeDomainError(f"time must be finite and >= 0, got {t}")
    return t


@dataclass(frozen=True)
class ExponentialSum:
    """Scalar signal ``t -> sum_j c_j exp(z_j t)``."""

    terms: tuple

    def __post_init__(self):
        terms = tuple((complex(c), complex(z)) for c, z in self.terms)
        if not terms:
            raise ValueError("exponential sum needs at least one term")
        for c, z in terms:
            if not (np.isfinite(c) and np.isfinite(z)):
                raise ValueError("exponential sum parameters must be finite")
        object.__setattr__(self, "terms", terms)

    @property
    def domain(self) -> tuple[float, float]:
        return (0.0, math.inf)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = sum(c * np.exp(z * t) for c, z in self.terms)
        return complex(out) if out.ndim == 0 else out

    def decay_rates(self) -> list[float]:
        return [-z.real for c, z in self.terms if z.real < 0 and c != 0]


@dataclass(frozen=True)
class TabulatedSignal:
    """Scalar signal known on a table, linearly interpolated inside it."""

    times: tuple
    values: tuple

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        values = np.asarray(self.values, dtype=complex).ravel()
        if times.size == 0 or times.size != values.size:
            raise ValueError("tabulated signal needs matching, nonempty times and values")
        if np.any(np.diff(times) <= 0):
            raise ValueError("tabulated signal times must be strictly increasing")
        object.__setattr__(self, "times", tuple(times))
        object.__setattr__(self, "values", tuple(values))

    @property
    def domain(self) -> tuple[float, float]:
        return (self.times[0], self.times[-1])

    def __call__(self, t):
        tt = np.asarray(t, dtype=float)
        lo, hi = self.domain
        if np.any(tt < lo) or np.any(tt > hi):
            raise TimeDomainError(f"t={t} outside tabulated range [{lo}, {hi}]")
        xs = np.asarray(self.times)
        ys = np.asarray(self.values)
        out = np.interp(tt, xs, ys.real) + 1j * np.interp(tt, xs, ys.imag)
        return complex(out) if out.ndim == 0 else out

    def decay_rates(self) -> list[float]:
        return []


ScalarSignal = Union[ExponentialSum, TabulatedSignal]


@dataclass(frozen=True, eq=False)
class BasisDecomposition:
    """``D(t) = sum_k signals[k](t) * basis[k]`` with independent ``basis``.

    The initial condition ``sum_k lambda_k(0) A_k = J`` is a property of the
    channel and is checked by :func:`validate_channel`, not here, so that
    invalid scenarios can still be represented and reported on.
    """

    basis: tuple
    signals: tuple

    def __post_init__(self):
        basis = tuple(as_square(a, "basis matrix") for a in self.basis)
        signals = tuple(self.signals)
        if not basis:
            raise ValueError("decomposition needs at least one basis matrix")
        if len(basis) != len(signals):
            raise ValueError(f"{len(basis)} basis matrices but {len(signals)} signals")
        n = basis[0].shape[0]
        if any(a.shape != (n, n) for a in basis):
            raise DimensionError("basis matrices must share one square shape")
        if len(basis) > n * n:
            raise ValueError(f"mu={len(basis)} exceeds n^2={n * n}")
        if numerical_rank(basis) != len(basis):
            raise ValueError("basis matrices are linearly dependent")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "signals", signals)

    @property
    def mu(self) -> int:
        return len(self.basis)

    @property
    def dim(self) -> int:
        return self.basis[0].shape[0]

    @property
    def domain(self) -> tuple[float, float]:
        lo = max(s.domain[0] for s in self.signals)
        hi = min(s.domain[1] for s in self.signals)
        return (lo, hi)

    def signal_values(self, t: float) -> np.ndarray:
        return np.array([s(t) for s in self.signals], dtype=complex)

    def evaluate(self, t: float) -> np.ndarray:
        return np.tensordot(self.signal_values(t), np.array(self.basis), axes=1)

    def decay_rates(self) -> list[float]:
        return [r for s in self.signals for r in s.decay_rates()]


@dataclass(frozen=True, eq=False)
class DampingModel:
    """A channel ``D(t)``; exactly one of ``decomposition`` / ``sampler``."""

    dim: int
    decomposition: BasisDecomposition | None = None
    sampler: Callable[[float], np.ndarray] | None = None
    domain: tuple = (0.0, math.inf)
    name: str = ""

    def __post_init__(self):
        if (self.decomposition is None) == (self.sampler is None):
            raise ValueError("give exactly one of decomposition or sampler")
        if self.decomposition is not None:
            if self.decomposition.dim != self.dim:
                raise DimensionError("decomposition dimension does not match dim")
            object.__setattr__(self, "domain", self.decomposition.domain)

    @classmethod
    def from_decomposition(cls, decomp: BasisDecomposition, name: str = "") -> "DampingModel":
        return cls(decomp.dim, decomposition=decomp, name=name)

    @classmethod
    def from_function(cls, fn, dim: int, domain=(0.0, math.inf), name: str = "") -> "DampingModel":
        return cls(int(dim), sampler=fn, domain=tuple(domain), name=name)

    @classmethod
    def from_samples(cls, times, matrices, name: str = "") -> "DampingModel":
        """Tabulated ``D(t)``, linearly interpolated between sample times."""
        times = np.asarray(times, dtype=float)
        mats = np.array([as_square(m) for m in matrices])
        if times.ndim != 1 or times.size != mats.shape[0] or times.size == 0:
            raise ValueError("need one matrix per sample time")
        if np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")

        def sampler(t):
            if times.size == 1:
                return mats[0].copy()
            j = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, times.size - 2))
            w = (t - times[j]) / (times[j + 1] - times[j])
            return (1 - w) * mats[j] + w * mats[j + 1]

        return cls(mats.shape[1], sampler=sampler, domain=(times[0], times[-1]), name=name)

    @property
    def is_decomposed(self) -> bool:
        return self.decomposition is not None

    def __call__(self, t: float) -> np.ndarray:
        return evaluate(self, t)


def evaluate(model: DampingModel, t: float) -> np.ndarray:
    """Return ``D(t)``."""
    t = _check_time(t)
    lo, hi = model.domain
    if t < lo or t > hi:
        raise TimeDomainError(f"t={t} outside channel domain [{lo}, {hi}]")
    if model.decomposition is not None:
        return model.decomposition.evaluate(t)
    d = as_square(model.sampler(t), "D(t)")
    if d.shape != (model.dim, model.dim):
        raise DimensionError(f"sampler returned shape {d.shape}, expected {(model.dim,) * 2}")
    return d


def dephasing(gamma: float) -> DampingModel:
    """Qubit dephasing: ``D(t) = I + exp(-gamma t) X``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    decomp = BasisDecomposition(
        basis=(np.eye(2, dtype=complex), np.array([[0, 1], [1, 0]], dtype=complex)),
        signals=(ExponentialSum(((1.0, 0.0),)), ExponentialSum(((1.0, -gamma),))),
    )
    return DampingModel.from_decomposition(decomp, name=f"dephasing(gamma={gamma:g})")


@dataclass
class ValidationReport:
    psd_ok: bool
    diag_ok: bool
    init_ok: bool
    worst_violations: dict = field(default_factory=dict)
    worst_times: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.psd_ok and self.diag_ok and self.init_ok

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "psd_ok": self.psd_ok,
            "diag_ok": self.diag_ok,
            "init_ok": self.init_ok,
            "worst_violations": dict(self.worst_violations),
            "worst_times": dict(self.worst_times),
        }


def validate_channel(model: DampingModel, probe_grid: Sequence[float]) -> ValidationReport:
    """Check positivity, unit diagonal and ``D(0) = J`` over a probe grid.

    ``t = 0`` is always probed for the initial condition, whether or not the
    grid contains it.
    """
    grid = [_check_time(t) for t in probe_grid]
    if not grid:
        raise ValueError("probe grid is empty")
    worst = {"psd": 0.0, "diag": 0.0, "init": 0.0}
    at = {"psd": None, "diag": None, "init": 0.0}
    for t in sorted(set(grid) | {0.0}):
        d = evaluate(model, t)
        h = hermitian_part(d)
        # a non-Hermitian D(t) cannot be positive; count asymmetry as violation
        v_psd = max(-float(np.linalg.eigvalsh(h)[0]), float(np.max(np.abs(d - h))), 0.0)
        v_diag = float(np.max(np.abs(np.diag(d) - 1.0)))
        if v_psd > worst["psd"]:
            worst["psd"], at["psd"] = v_psd, t
        if v_diag > worst["diag"]:
            worst["diag"], at["diag"] = v_diag, t
        if t == 0.0:
            worst["init"] = float(np.max(np.abs(d - 1.0)))
    return ValidationReport(
        psd_ok=worst["psd"] <= PSD_TOL,
        diag_ok=worst["diag"] <= UNIT_DIAG_TOL,
        init_ok=worst["init"] <= INIT_TOL,
        worst_violations=worst,
        worst_times=at,
    )


def default_candidate_times(n: int, horizon: float) -> np.ndarray:
    """``4 n^2`` uniform points on ``[0, horizon]``."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    return np.linspace(0.0, float(horizon), 4 * n * n)


def decay_horizon(model: DampingModel, factor: float = 1.0) -> float | None:
    """``factor / (slowest decay rate)`` or ``None`` if no rates are known."""
    if model.decomposition is None:
        return None
    rates = model.decomposition.decay_rates()
    if not rates:
        return None
    return factor / min(rates)


def extract_basis(
    model: DampingModel,
    candidate_times: Sequence[float] | None = None,
    tol: float = RANK_TOL,
    *,
    probe_times: Sequence[float] = (),
    horizon: float | None = None,
    residual_tol: float = RESIDUAL_TOL,
) -> BasisDecomposition:
    """Greedy constant-basis extraction from samples of ``D(t)``.

    Candidates are scanned in time order; ``D(t_i)`` joins the basis when it
    raises the numerical rank of the collected set (earliest time wins).
    Signal values are then obtained by least squares at every candidate and
    probe time and stored as :class:`TabulatedSignal`. Probe times never add
    basis elements; they only verify and extend the table.

    Raises :class:`DecompositionError` at the first time whose sample is not
    reproduced within ``residual_tol`` (Frobenius).
    """
    if candidate_times is None:
        if horizon is None:
            horizon = decay_horizon(model)
        if horizon is None:
            raise ValueError("candidate_times or a horizon is required")
        candidate_times = default_candidate_times(model.dim, horizon)
    cands = [_check_time(t) for t in candidate_times]
    if not cands:
        raise ValueError("candidate_times is empty")
    if any(b < a for a, b in zip(cands, cands[1:])):
        raise ValueError("candidate_times must be sorted")
    n = model.dim
    samples = {t: evaluate(model, t) for t in cands}

    basis: list[np.ndarray] = []
    for t in cands:
        d = samples[t]
        if np.max(np.abs(d)) == 0:
            continue
        if numerical_rank(basis + [d], tol) > len(basis):
            basis.append(d)
        if len(basis) == n * n:
            break
    if not basis:
        raise DecompositionError("D(t) vanishes at every candidate time")

    all_times = sorted(set(cands) | {_check_time(t) for t in probe_times})
    for t in all_times:
        if t not in samples:
            samples[t] = evaluate(model, t)
    design = np.array([a.ravel() for a in basis]).T
    coeffs = []
    for t in all_times:
        target = samples[t].ravel()
        lam, *_ = np.linalg.lstsq(design, target, rcond=None)
        resid = float(np.linalg.norm(design @ lam - target))
        if resid > residual_tol:
            raise DecompositionError(
                f"basis of size {len(basis)} fails to reproduce D(t) at t={t:.17g} "
                f"(residual {resid:.3g}); candidate grid too coarse",
                time=t,
                residual=resid,
            )
        coeffs.append(lam)
    coeffs = np.array(coeffs)
    signals = tuple(TabulatedSignal(tuple(all_times), tuple(coeffs[:, k])) for k in range(len(basis)))
    return BasisDecomposition(tuple(basis), signals)


def _independent_subset(mats: list[np.ndarray], tol: float) -> list[np.ndarray]:
    keep: list[np.ndarray] = []
    for m in mats:
        if np.max(np.abs(m)) > 0 and numerical_rank(keep + [m], tol) > len(keep):
            keep.append(m)
    return keep


def basis_closure(seed: Sequence, tol: float = RANK_TOL) -> list[np.ndarray]:
    """Close a matrix set under ordinary products ``B_i B_h``.

    A maximal independent subset of ``seed`` is kept, then independent
    pairwise products are appended until no product leaves the span.
    """
    mats = [as_square(b, "seed matrix") for b in seed]
    if not mats:
        raise ValueError("seed is empty")
    n = mats[0].shape[0]
    if any(m.shape != (n, n) for m in mats):
        raise DimensionError("seed matrices must share one square shape")
    current = _independent_subset(mats, tol)
    for _ in range(n * n):
        grown = False
        for a in list(current):
            for b in list(current):
                if len(current) == n * n:
                    return current
                p = a @ b
                if np.max(np.abs(p)) > 0 and numerical_rank(current + [p], tol) > len(current):
                    current.append(p)
                    grown = True
        if not grown:
            break
    return current


def apply_channel(model: DampingModel, t: float, rho0) -> DensityMatrix:
    """``D(t) o rho0``; raises if the result leaves the state set."""
    rho = as_density(rho0)
    if rho.dim != model.dim:
        raise DimensionError(f"state dim {rho.dim} != channel dim {model.dim}")
    out = hadamard(evaluate(model, t), rho.matrix)
    try:
        return DensityMatrix(out)
    except ValueError as exc:
        raise ChannelValidationError(f"channel output at t={t} is not a state: {exc}") from exc


def random_correlation(n: int, rng: np.random.Generator) -> np.ndarray:
    """Gram matrix of random complex unit vectors: PSD with unit diagonal."""
    v = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v @ v.conj().T


def random_damping_model(n: int, mu: int, rng: np.random.Generator) -> DampingModel:
    """Random valid channel with a known exponential-sum decomposition.

    ``D(t) = (1 - sum_k w_k(t)) J + sum_k w_k(t) M_k`` with random correlation
    matrices ``M_k`` and weights ``w_k = c_k (1 - exp(-g_k t) cos(w_k t))``,
    a convex combination for every ``t``. Unit diagonal confines ``D(t)`` to
    a space of dimension ``n^2 - n + 1``, which bounds ``mu``.
    """
    mu_max = n * n - n + 1
    if not 1 <= mu <= mu_max:
        raise ValueError(f"mu must lie in [1, {mu_max}] for n={n}")
    k = mu - 1
    j = all_ones(n)
    if k == 0:
        decomp = BasisDecomposition((j,), (ExponentialSum(((1.0, 0.0),)),))
        return DampingModel.from_decomposition(decomp, name="identity")
    c = rng.uniform(0.2, 1.0, size=k)
    c *= rng.uniform(0.3, 0.5) / c.sum()
    g = rng.uniform(0.05, 0.3, size=k)
    omega = np.sort(rng.uniform(0.5, 4.0, size=k))
    mats = [random_correlation(n, rng) - j for _ in range(k)]
    a0 = j + sum(ci * m for ci, m in zip(c, mats))
    signals = [ExponentialSum(((1.0, 0.0),))]
    for ci, gi, wi in zip(c, g, omega):
        signals.append(ExponentialSum(((-ci / 2, complex(-gi, wi)), (-ci / 2, complex(-gi, -wi)))))
    decomp = BasisDecomposition(tuple([a0] + mats), tuple(signals))
    return DampingModel.from_decomposition(decomp, name=f"random(n={n}, mu={mu})")
