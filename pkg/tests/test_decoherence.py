import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyntomo.channel import evaluate, validate_channel
from dyntomo.decoherence import (
    PureDecoherenceModel,
    apply_kraus_map,
    coefficient_matrix,
    dressed_operators,
    random_model,
    to_channel,
)
from dyntomo.exceptions import DimensionError
from dyntomo.operators import SIGMA_X, SIGMA_Z, hadamard, random_density

GRID = [0.0, 0.3, 1.0, 3.0]


def decoupled(energies, d=2):
    z = np.zeros((d, d))
    return PureDecoherenceModel(
        energies=energies,
        env_hamiltonian=np.diag(np.arange(d, dtype=float)),
        couplings=tuple(z for _ in energies),
        env_state=np.eye(d) / d,
    )


class TestModel:
    def test_wrong_coupling_count(self):
        with pytest.raises(ValueError):
            PureDecoherenceModel((0.0, 1.0), np.zeros((2, 2)), (np.zeros((2, 2)),), np.eye(2) / 2)

    def test_non_hermitian_coupling(self):
        with pytest.raises(ValueError):
            PureDecoherenceModel((0.0,), np.zeros((2, 2)), (np.array([[0, 1], [0, 0]]),), np.eye(2) / 2)

    def test_env_state_validated(self):
        with pytest.raises(ValueError):
            PureDecoherenceModel((0.0,), np.zeros((2, 2)), (np.zeros((2, 2)),), np.eye(2))

    def test_env_cap(self):
        with pytest.raises(ValueError):
            PureDecoherenceModel((0.0,), np.zeros((65, 65)), (np.zeros((65, 65)),), np.eye(65) / 65)


class TestDressedOperators:
    def test_free(self):
        model = decoupled((0.5, -1.0))
        z = dressed_operators(PureDecoherenceModel(model.energies, np.zeros((2, 2)), model.couplings, model.env_state))
        np.testing.assert_array_equal(z[0], 0.5 * np.eye(2))
        np.testing.assert_array_equal(z[1], -1.0 * np.eye(2))

    def test_assembly(self):
        model = PureDecoherenceModel((0.0, 1.0), SIGMA_Z / 2, (np.zeros((2, 2)), SIGMA_X), np.eye(2) / 2)
        z1, z2 = dressed_operators(model)
        np.testing.assert_array_equal(z1, SIGMA_Z / 2)
        np.testing.assert_array_equal(z2, np.eye(2) + SIGMA_Z / 2 + SIGMA_X)

    def test_hermitian(self, rng):
        for z in dressed_operators(random_model(3, 4, rng)):
            assert np.max(np.abs(z - z.conj().T)) <= 1e-14


class TestCoefficientMatrix:
    def test_initial_all_ones(self, rng):
        c = coefficient_matrix(random_model(3, 3, rng), 0.0)
        np.testing.assert_allclose(c.matrix, np.ones((3, 3)), atol=1e-12)

    @pytest.mark.parametrize("t", [0.2, 1.0, 7.5])
    def test_decoupled_pure_phases(self, t):
        e = (0.3, -0.8, 1.1)
        c = coefficient_matrix(decoupled(e, d=3), t).matrix
        oracle = np.array([[np.exp(-1j * (en - em) * t) for em in e] for en in e])
        np.testing.assert_allclose(c, oracle, atol=1e-13)
        np.testing.assert_allclose(np.abs(c), 1.0, atol=1e-13)

    def test_unit_diagonal(self, rng):
        model = random_model(4, 3, rng)
        for t in np.linspace(0, 10, 11):
            c = coefficient_matrix(model, t)
            assert c.diag_error() <= 1e-12
            c.check()

    def test_negative_time(self, rng):
        with pytest.raises(ValueError):
            coefficient_matrix(random_model(2, 2, rng), -1.0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1), st.floats(0, 30))
    def test_structure(self, n, d, seed, t):
        model = random_model(n, d, np.random.default_rng(seed))
        c = coefficient_matrix(model, t)
        assert c.diag_error() <= 1e-12
        assert c.min_eigenvalue() >= -1e-10
        assert np.max(np.abs(c.matrix)) <= 1 + 1e-12


class TestKraus:
    def test_initial(self, rng, rho0):
        np.testing.assert_allclose(apply_kraus_map(random_model(2, 2, rng), 0.0, rho0).matrix, rho0, atol=1e-12)

    def test_diagonal_state(self, rng):
        rho = np.diag([0.2, 0.5, 0.3])
        model = random_model(3, 2, rng)
        for t in GRID:
            np.testing.assert_allclose(apply_kraus_map(model, t, rho).matrix, rho, atol=1e-14)

    def test_matches_entrywise_product(self, rng):
        model = random_model(2, 2, rng)
        rho = random_density(2, rng).matrix
        for t in GRID:
            c = coefficient_matrix(model, t).matrix
            oracle = np.array([[c[i, j] * rho[i, j] for j in range(2)] for i in range(2)])
            out = apply_kraus_map(model, t, rho).matrix
            np.testing.assert_allclose(out, oracle, atol=1e-12, rtol=0)
            np.testing.assert_allclose(out, hadamard(c, rho), atol=1e-12, rtol=0)

    def test_dimension_mismatch(self, rng, rho0):
        with pytest.raises(DimensionError):
            apply_kraus_map(random_model(3, 2, rng), 0.1, rho0)


class TestToChannel:
    def test_qubit_with_qubit_bath(self, rng):
        model = PureDecoherenceModel(
            (0.0, 1.0), SIGMA_Z / 2, (0.3 * SIGMA_X, -0.7 * SIGMA_X + 0.2 * SIGMA_Z), np.eye(2) / 2
        )
        channel = to_channel(model, GRID)
        assert validate_channel(channel, np.linspace(0, 10, 41)).ok
        np.testing.assert_allclose(evaluate(channel, 1.0), coefficient_matrix(model, 1.0).matrix)

    def test_decoupled_unimodular(self):
        channel = to_channel(decoupled((0.0, 2.0)), GRID)
        for t in GRID:
            np.testing.assert_allclose(np.abs(evaluate(channel, t)), 1.0, atol=1e-13)

    def test_trivial_system(self, rng):
        model = PureDecoherenceModel((0.4,), np.zeros((2, 2)), (SIGMA_X,), np.eye(2) / 2)
        channel = to_channel(model, GRID)
        for t in GRID:
            np.testing.assert_allclose(evaluate(channel, t), [[1.0]], atol=1e-14)

    def test_grid_needs_zero(self, rng):
        with pytest.raises(ValueError):
            to_channel(random_model(2, 2, rng), [0.5])
