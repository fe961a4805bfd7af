"""Pure-decoherence models: a system Hamiltonian diagonal in the computational
basis coupled to a finite environment through ``sum_n |n><n| (x) B_n``.

The reduced dynamics is ``rho(t) = C(t) o rho(0)`` with
``C_nm(t) = Tr(exp(-i Z_n t) rho_E exp(i Z_m t))`` and
``Z_n = e_n I + H_E + B_n``. Nothing here builds the joint system-environment
propagator; all work happens on environment-sized matrices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import DampingModel, validate_channel
from .exceptions import ChannelValidationError, DimensionError
from .operators import (
    HERM_TOL,
    PSD_TOL,
    DensityMatrix,
    as_density,
    as_square,
    hermitian_part,
    is_hermitian,
    random_density,
    random_hermitian,
)

MAX_ENV_DIM = 64


@dataclass(frozen=True, eq=False)
class PureDecoherenceModel:
    energies: tuple
    env_hamiltonian: np.ndarray
    couplings: tuple
    env_state: DensityMatrix
    max_env_dim: int = MAX_ENV_DIM

    def __post_init__(self):
        energies = tuple(float(e) for e in np.asarray(self.energies, dtype=float).ravel())
        if not energies:
            raise ValueError("need at least one system energy")
        h_e = as_square(self.env_hamiltonian, "environment Hamiltonian")
        d = h_e.shape[0]
        if d > self.max_env_dim:
            raise ValueError(f"environment dimension {d} exceeds cap {self.max_env_dim}")
        if not is_hermitian(h_e, HERM_TOL):
            raise ValueError("environment Hamiltonian is not Hermitian")
        couplings = tuple(as_square(b, "coupling") for b in self.couplings)
        if len(couplings) != len(energies):
            raise ValueError(f"{len(energies)} energies but {len(couplings)} couplings")
        for k, b in enumerate(couplings):
            if b.shape != (d, d):
                raise DimensionError(f"coupling {k} has shape {b.shape}, expected {(d, d)}")
            if not is_hermitian(b, HERM_TOL):
                raise ValueError(f"coupling {k} is not Hermitian")
        rho_e = as_density(self.env_state)
        if rho_e.dim != d:
            raise DimensionError(f"environment state has dim {rho_e.dim}, expected {d}")
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "env_hamiltonian", h_e)
        object.__setattr__(self, "couplings", couplings)
        # exact unit trace keeps C_nn = Tr(rho_E) at rounding level
        rho_e = DensityMatrix(rho_e.matrix / np.trace(rho_e.matrix).real)
        object.__setattr__(self, "env_state", rho_e)

    @property
    def n(self) -> int:
        return len(self.energies)

    @property
    def env_dim(self) -> int:
        return self.env_hamiltonian.shape[0]


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    time: float
    matrix: np.ndarray

    def diag_error(self) -> float:
        return float(np.max(np.abs(np.diag(self.matrix) - 1.0)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(hermitian_part(self.matrix))[0])

    def check(self, unit_tol: float = 1e-10, psd_tol: float = PSD_TOL) -> None:
        if self.diag_error() > unit_tol:
            raise ChannelValidationError(f"C({self.time}) diagonal deviates by {self.diag_error():.3g}")
        if self.min_eigenvalue() < -psd_tol:
            raise ChannelValidationError(f"C({self.time}) has eigenvalue {self.min_eigenvalue():.3g}")
        if self.time == 0 and np.max(np.abs(self.matrix - 1.0)) > unit_tol:
            raise ChannelValidationError("C(0) is not the all-ones matrix")


def dressed_operators(model: PureDecoherenceModel) -> list[np.ndarray]:
    """``Z_n = e_n I + H_E + B_n``."""
    eye = np.eye(model.env_dim, dtype=complex)
    return [e * eye + model.env_hamiltonian + b for e, b in zip(model.energies, model.couplings)]


def _propagators(model: PureDecoherenceModel, t: float) -> np.ndarray:
    ops = []
    for z in dressed_operators(model):
        w, v = np.linalg.eigh(hermitian_part(z))
        ops.append((v * np.exp(-1j * w * t)) @ v.conj().T)
    return np.array(ops)


def coefficient_matrix(model: PureDecoherenceModel, t: float) -> CoefficientMatrix:
    """``C_nm(t) = Tr(U_n rho_E U_m^dagger)`` with ``U_n = exp(-i Z_n t)``."""
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise ValueError(f"time must be finite and >= 0, got {t}")
    u = _propagators(model, t)
    if not np.all(np.isfinite(u)):
        raise FloatingPointError(f"non-finite propagator at t={t}")
    left = u @ model.env_state.matrix
    # Tr(X Y^dagger) = sum_ab X_ab conj(Y_ab)
    c = np.einsum("nab,mab->nm", left, u.conj())
    return CoefficientMatrix(t, c)


def apply_kraus_map(model: PureDecoherenceModel, t: float, rho0) -> DensityMatrix:
    """``sum_{n,m} C_nm(t) P_n rho0 P_m`` with computational-basis projectors."""
    rho = as_density(rho0)
    if rho.dim != model.n:
        raise DimensionError(f"state dim {rho.dim} != number of system levels {model.n}")
    c = coefficient_matrix(model, t).matrix
    projectors = [np.diag(np.eye(model.n, dtype=complex)[k]) for k in range(model.n)]
    out = np.zeros((model.n, model.n), dtype=complex)
    for a, pa in enumerate(projectors):
        for b, pb in enumerate(projectors):
            out += c[a, b] * (pa @ rho.matrix @ pb)
    return DensityMatrix(hermitian_part(out))


def to_channel(model: PureDecoherenceModel, probe_grid: Sequence[float]) -> DampingModel:
    """Wrap ``t -> C(t)`` as a sampled :class:`DampingModel` and validate it."""
    grid = [float(t) for t in probe_grid]
    if 0.0 not in grid:
        raise ValueError("probe grid must include t = 0")
    channel = DampingModel.from_function(
        lambda t: coefficient_matrix(model, t).matrix, model.n, name="pure-decoherence"
    )
    report = validate_channel(channel, grid)
    if not report.ok:
        raise ChannelValidationError(f"pure-decoherence channel failed validation: {report.to_dict()}")
    return channel


def random_model(n: int, env_dim: int, rng: np.random.Generator, scale: float = 1.0) -> PureDecoherenceModel:
    """Random model with Gaussian Hermitian ``H_E``, ``B_n`` and a mixed ``rho_E``."""
    return PureDecoherenceModel(
        energies=tuple(rng.uniform(-1, 1, size=n) * scale),
        env_hamiltonian=random_hermitian(env_dim, rng) * scale / 2,
        couplings=tuple(random_hermitian(env_dim, rng) * scale / 2 for _ in range(n)),
        env_state=random_density(env_dim, rng),
    )
