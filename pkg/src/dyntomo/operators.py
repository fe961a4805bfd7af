"""Dense complex-matrix substrate: Hadamard products, trace pairings,
Hermitian operator bases, numerical rank and density-matrix handling.

All matrices are plain ``numpy`` arrays of dtype ``complex128``. The only
wrapper types are :class:`DensityMatrix` and :class:`Observable`, which carry
validated invariants across module boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import DegenerateInputError, DimensionError, InvalidStateError

HERM_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
RANK_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SIGMA_X, SIGMA_Y, SIGMA_Z)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    if isinstance(a, (DensityMatrix, Observable)):
        a = a.matrix
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.size == 0:
        raise DimensionError(f"{name} must be a nonempty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def as_square(a, name: str = "matrix") -> np.ndarray:
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def is_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def all_ones(n: int) -> np.ndarray:
    return np.ones((n, n), dtype=complex)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian unit-trace matrix, positive semidefinite unless built with
    ``require_positive=False`` (used for raw estimator output, where a
    violation is reported through :attr:`positive` instead of raised).
    """

    matrix: np.ndarray
    require_positive: bool = True
    positive: bool = field(init=False)
    min_eigenvalue: float = field(init=False)

    def __post_init__(self):
        m = as_square(self.matrix, "density matrix").copy()
        if not is_hermitian(m, HERM_TOL):
            raise InvalidStateError("density matrix is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"density matrix trace is {tr.real:.6g}, expected 1")
        min_eig = float(np.linalg.eigvalsh(hermitian_part(m))[0])
        if self.require_positive and min_eig < -PSD_TOL:
            raise InvalidStateError(f"density matrix has negative eigenvalue {min_eig:.3g}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "positive", min_eig >= -PSD_TOL)
        object.__setattr__(self, "min_eigenvalue", min_eig)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim}, positive={self.positive})"


def as_density(rho) -> DensityMatrix:
    if isinstance(rho, DensityMatrix):
        return rho
    return DensityMatrix(as_square(rho, "rho"))


@dataclass(frozen=True, eq=False)
class Observable:
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = as_square(self.matrix, f"observable {self.label!r}").copy()
        if not is_hermitian(m, HERM_TOL):
            raise ValueError(f"observable {self.label!r} is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def hadamard(a, b) -> np.ndarray:
    """Entrywise product of two equally shaped matrices."""
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return a * b


def trace_pair(m, rho) -> complex:
    """Return ``Tr(M rho)``."""
    m = as_square(m, "M")
    r = as_square(rho, "rho")
    if m.shape != r.shape:
        raise DimensionError(f"dimension mismatch {m.shape} vs {r.shape}")
    # Tr(M R) = sum_ij M_ij R_ji
    return complex(np.sum(m * r.T))


def hadamard_trace_transport(a, b, c) -> tuple[complex, complex]:
    """Evaluate both sides of ``Tr{A^T (B o C)} = Tr{(A^T o B^T) C}``.

    The pair exists so the identity can be checked; the two values should
    agree to rounding.
    """
    a, b, c = as_matrix(a, "A"), as_matrix(b, "B"), as_matrix(c, "C")
    if not (a.shape == b.shape == c.shape):
        raise DimensionError(f"shape mismatch {a.shape}, {b.shape}, {c.shape}")
    lhs = np.trace(a.T @ (b * c))
    rhs = np.trace((a.T * b.T) @ c)
    return complex(lhs), complex(rhs)


@dataclass(frozen=True, eq=False)
class HermitianBasis:
    dim: int
    operators: tuple

    def __len__(self):
        return len(self.operators)

    def __iter__(self):
        return iter(self.operators)

    def __getitem__(self, k):
        return self.operators[k]

    @property
    def norms(self) -> np.ndarray:
        """Hilbert-Schmidt norms ``Tr(G_a G_a)``."""
        return np.array([np.trace(g @ g).real for g in self.operators])

    def stacked(self) -> np.ndarray:
        return np.array(self.operators)

    def coordinates(self, m) -> np.ndarray:
        """Complex expansion coefficients of ``m`` (real for Hermitian ``m``)."""
        m = as_square(m)
        return np.array([np.trace(g @ m) for g in self.operators]) / self.norms

    def compose(self, coords) -> np.ndarray:
        return np.tensordot(np.asarray(coords), self.stacked(), axes=1)


def hermitian_basis(n: int) -> HermitianBasis:
    """Identity followed by the generalized Gell-Mann generators.

    Generators come in three families: symmetric, antisymmetric, diagonal.
    Each is normalized to ``Tr(G_a G_b) = 2 delta_ab``, so ``n = 2`` gives the
    Pauli matrices in the order ``I, X, Y, Z``.
    """
    if int(n) != n or n < 2:
        raise ValueError(f"basis dimension must be an integer >= 2, got {n}")
    n = int(n)
    pairs = [(j, k) for j in range(n) for k in range(j + 1, n)]
    ops = [np.eye(n, dtype=complex)]
    for j, k in pairs:
        g = np.zeros((n, n), dtype=complex)
        g[j, k] = g[k, j] = 1
        ops.append(g)
    for j, k in pairs:
        g = np.zeros((n, n), dtype=complex)
        g[j, k] = -1j
        g[k, j] = 1j
        ops.append(g)
    for l in range(1, n):
        d = np.zeros(n)
        d[:l] = 1
        d[l] = -l
        ops.append(np.diag(np.sqrt(2.0 / (l * (l + 1))) * d).astype(complex))
    return HermitianBasis(n, tuple(ops))


def _stack(vectors) -> np.ndarray:
    mats = [np.asarray(v, dtype=complex) for v in vectors]
    if not mats:
        raise ValueError("need at least one matrix")
    shape = mats[0].shape
    for m in mats:
        if m.shape != shape:
            raise DimensionError(f"shape mismatch {m.shape} vs {shape}")
    return np.array([m.ravel() for m in mats])


def numerical_rank(vectors: Sequence, tol: float = RANK_TOL) -> int:
    """Count singular values above ``tol`` times the largest one."""
    s = np.linalg.svd(_stack(vectors), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def nearest_density(h) -> DensityMatrix:
    """Project onto the state set by clipping negative eigenvalues and
    renormalizing. Already-valid input is returned unchanged.
    """
    h = hermitian_part(as_square(h, "H"))
    w, v = np.linalg.eigh(h)
    if w[0] >= 0:
        tr = np.trace(h).real
        if tr <= 0:
            raise DegenerateInputError("matrix has zero trace")
        return DensityMatrix(h / tr)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise DegenerateInputError("no positive spectrum left after clipping")
    out = (v * (w / w.sum())) @ v.conj().T
    return DensityMatrix(hermitian_part(out))


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random state drawn as ``G G^dagger / Tr`` with complex Gaussian ``G``."""
    k = n if rank is None else rank
    g = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
    rho = g @ g.conj().T
    return DensityMatrix(hermitian_part(rho / np.trace(rho).real))


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return hermitian_part(g)
