import numpy as np
import pytest

from fockFTW.errors import FockDomainError, InputFormatError
from fockFTW.fock_core import (
    DensityMatrix,
    FockCutoff,
    PureState,
    annihilation_matrix,
    derive_rng,
    dm_from_diag,
    fidelity,
    fock_state,
    mean_photon,
    number_matrix,
)


class TestFockCutoff:

    def test_dimension(self):
        assert FockCutoff(10).dim == 11
        assert FockCutoff(0).dim == 1

    def test_rejects_negative(self):
        with pytest.raises(FockDomainError):
            FockCutoff(-1)

    def test_rejects_non_integer(self):
        with pytest.raises(TypeError):
            FockCutoff(2.5)
        with pytest.raises(TypeError):
            FockCutoff(True)

    def test_coerce(self):
        assert FockCutoff.coerce(4) == FockCutoff(4)
        c = FockCutoff(3)
        assert FockCutoff.coerce(c) is c


class TestDensityMatrix:

    @pytest.fixture
    def mixture(self):
        return dm_from_diag([0.38, 0.62], 10)

    def test_valid_matrix(self):
        rho = DensityMatrix([[0.5, 0.5], [0.5, 0.5]])
        assert rho.dim == 2
        assert abs(rho.elements[0, 1] - 0.5) < 1e-15

    def test_rejects_non_hermitian(self):
        with pytest.raises(FockDomainError):
            DensityMatrix([[0.5, 0.1], [0.0, 0.5]])

    def test_trace_must_be_one(self):
        with pytest.raises(FockDomainError):
            DensityMatrix([[1.0, 0.0], [0.0, 1.0]])
        rho = DensityMatrix([[1.0, 0.0], [0.0, 1.0]], normalize=True)
        assert np.allclose(rho.probabilities(), [0.5, 0.5])

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(FockDomainError):
            DensityMatrix([[1.5, 0.0], [0.0, -0.5]])

    def test_rejects_non_square(self):
        with pytest.raises(FockDomainError):
            DensityMatrix([[1.0, 0.0]])

    def test_elements_are_read_only(self, mixture):
        with pytest.raises(ValueError):
            mixture.elements[0, 0] = 1.0

    def test_probabilities_and_cutoff(self, mixture):
        p = mixture.probabilities()
        assert abs(p[0] - 0.38) < 1e-12
        assert abs(p[1] - 0.62) < 1e-12
        assert mixture.cutoff == FockCutoff(10)
        assert mixture.is_diagonal()

    def test_eigenvalues_clamped(self, mixture):
        values = mixture.eigenvalues()
        assert np.all(values >= 0.0)
        assert abs(np.sum(values) - 1.0) < 1e-12

    def test_save_and_load(self, tmp_path):
        amplitudes = np.array([0.6, 0.8j])
        rho = PureState(amplitudes).to_density_matrix()
        path = tmp_path / "rho.json"
        rho.save(path)
        loaded = DensityMatrix.load(path)
        assert np.max(np.abs(loaded.elements - rho.elements)) < 1e-15

    def test_from_dict_rejects_missing_keys(self):
        with pytest.raises(InputFormatError):
            DensityMatrix.from_dict({"dim": 1, "re": [1.0]})

    def test_from_dict_size_mismatch(self):
        with pytest.raises(InputFormatError):
            DensityMatrix.from_dict({"dim": 2, "re": [1.0], "im": [0.0]})


class TestPureState:

    def test_norm_checked(self):
        with pytest.raises(FockDomainError):
            PureState([1.0, 1.0])

    def test_fock_state(self):
        ket = fock_state(2, 4)
        assert ket.dim == 5
        assert ket.amplitudes[2] == 1.0
        rho = ket.to_density_matrix()
        assert rho.probabilities()[2] == 1.0

    def test_fock_state_outside_cutoff(self):
        with pytest.raises(FockDomainError):
            fock_state(5, 4)


class TestOperators:

    def test_number_operator(self):
        a = annihilation_matrix(6)
        assert np.allclose(a.conj().T @ a, number_matrix(6))

    def test_commutator_truncation(self):
        n_max = 5
        a = annihilation_matrix(n_max)
        comm = a @ a.conj().T - a.conj().T @ a
        expected = np.eye(n_max + 1)
        expected[-1, -1] = -n_max
        assert np.allclose(comm, expected)

    def test_mean_photon(self):
        assert abs(mean_photon(dm_from_diag([0.38, 0.62], 3)) - 0.62) < 1e-12


class TestDmFromDiag:

    def test_pads_to_cutoff(self):
        rho = dm_from_diag([0.372, 0.620, 0.000, 0.008, 0.000], 10)
        assert rho.dim == 11
        assert abs(rho.probabilities()[3] - 0.008) < 1e-12

    def test_rounded_row_needs_tolerance(self):
        row = [0.119, 0.382, 0.408, 0.079, 0.013]
        with pytest.raises(FockDomainError):
            dm_from_diag(row, 10)
        rho = dm_from_diag(row, 10, sum_tolerance=2e-3)
        assert abs(np.sum(rho.probabilities()) - 1.0) < 1e-12

    def test_default_sum_tolerance(self):
        assert abs(dm_from_diag([0.38, 0.62 + 5e-7], 2).probabilities()[1] - 0.62) < 1e-6
        with pytest.raises(FockDomainError):
            dm_from_diag([0.38, 0.62 + 5e-6], 2)

    def test_rejects_negative(self):
        with pytest.raises(FockDomainError):
            dm_from_diag([1.1, -0.1], 2)

    def test_rejects_too_long(self):
        with pytest.raises(FockDomainError):
            dm_from_diag([0.5, 0.25, 0.25], 1)


class TestFidelity:

    def test_identical_states(self):
        rho = dm_from_diag([0.38, 0.62], 5)
        assert abs(fidelity(rho, rho) - 1.0) < 1e-12

    def test_orthogonal_states(self):
        a = fock_state(0, 3).to_density_matrix()
        b = fock_state(1, 3).to_density_matrix()
        assert fidelity(a, b) < 1e-12

    def test_pure_against_mixture(self):
        one = fock_state(1, 5).to_density_matrix()
        assert abs(fidelity(one, dm_from_diag([0.38, 0.62], 5)) - 0.62) < 1e-12
        plus = PureState(np.array([1.0, 1.0]) / np.sqrt(2.0)).to_density_matrix()
        assert abs(fidelity(plus, dm_from_diag([0.5, 0.5], 1)) - 0.5) < 1e-9
        assert abs(fidelity(plus, plus) - 1.0) < 1e-9

    def test_dimension_mismatch(self):
        with pytest.raises(FockDomainError):
            fidelity(dm_from_diag([1.0], 2), dm_from_diag([1.0], 3))


class TestDeriveRng:

    def test_same_keys_same_stream(self):
        a = derive_rng(7, 1, 3).random(5)
        b = derive_rng(7, 1, 3).random(5)
        assert np.array_equal(a, b)

    def test_different_keys_differ(self):
        a = derive_rng(7, 1, 3).random(5)
        b = derive_rng(7, 1, 4).random(5)
        assert not np.array_equal(a, b)

    def test_invalid_seed(self):
        with pytest.raises(TypeError):
            derive_rng(1.5)
        with pytest.raises(FockDomainError):
            derive_rng(-1)
