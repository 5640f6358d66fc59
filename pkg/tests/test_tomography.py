#!/usr/bin/env python3
"""
Test suite for maximum-likelihood homodyne tomography.
"""

import json
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from fockFTW.acceptance import probability_tolerance
from fockFTW.errors import FockDomainError, InputFormatError, InsufficientDataError
from fockFTW.fock_core import FockCutoff, PureState, dm_from_diag, fidelity
from fockFTW.herald_model import HeraldScenario, conditional_signal_state
from fockFTW.homodyne_sim import PhasePolicy, QuadratureRecord, sample_quadratures
from fockFTW.tomography import MleConfig, log_likelihood, mle_reconstruct, projector_weights


@pytest.fixture(scope="module")
def mixture_records():
    """Fixture providing 10,000 seeded samples of the (0.38, 0.62) mixture."""
    return sample_quadratures(dm_from_diag([0.38, 0.62], 10), 10000, seed=21, herald_n=1)


@pytest.fixture(scope="module")
def mixture_result(mixture_records):
    """Fixture providing the default reconstruction of mixture_records."""
    return mle_reconstruct(mixture_records, MleConfig(cutoff=FockCutoff(10)))


class TestProjector:
    """Tests for quadrature projectors."""

    def test_odd_components_vanish_at_origin(self):
        proj = projector_weights(0.0, 0.7, 6)
        assert np.all(proj[1::2, :] == 0.0)
        assert np.all(proj[:, 1::2] == 0.0)

    def test_rank_one_hermitian(self):
        proj = projector_weights(0.4, 1.1, 5)
        assert np.allclose(proj, proj.conj().T)
        values = np.linalg.eigvalsh(proj)
        assert abs(values[-1] - np.trace(proj).real) < 1e-12
        assert np.all(np.abs(values[:-1]) < 1e-12)

    def test_phase_insensitive_is_diagonal(self):
        full = projector_weights(0.4, 1.1, 5)
        diag = projector_weights(0.4, 1.1, 5, phase_insensitive=True)
        assert np.allclose(diag, np.diag(np.diag(full)))

    def test_completeness(self):
        xs = np.linspace(-10.0, 10.0, 2001)
        diagonals = np.array([np.real(np.diag(projector_weights(x, 0.0, 10, True))) for x in xs])
        assert np.max(np.abs(trapezoid(diagonals, xs, axis=0) - 1.0)) < 1e-6


class TestMleConfig:
    """Tests for reconstruction settings."""

    def test_defaults(self):
        cfg = MleConfig()
        assert cfg.phase_insensitive
        assert cfg.max_iterations == 2000
        assert cfg.log_likelihood_tolerance == 1e-9
        assert cfg.bin_width is None

    def test_invalid_values(self):
        with pytest.raises(FockDomainError):
            MleConfig(max_iterations=0)
        with pytest.raises(FockDomainError):
            MleConfig(log_likelihood_tolerance=0.0)

    def test_dict_round_trip(self):
        cfg = MleConfig(cutoff=FockCutoff(6), max_iterations=50, phase_insensitive=False, bin_width=0.1)
        assert MleConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "mle.json"
        path.write_text(json.dumps({"n_max": 10, "iterations": 5}))
        with pytest.raises(InputFormatError):
            MleConfig.load(path)

    @pytest.mark.parametrize("value", ["false", 0, None])
    def test_phase_flag_must_be_json_bool(self, value):
        with pytest.raises(InputFormatError):
            MleConfig.from_dict({"phase_insensitive": value})


class TestReconstruction:
    """Tests for mle_reconstruct."""

    def test_too_few_records(self):
        records = sample_quadratures(dm_from_diag([1.0], 4), 99, seed=0)
        with pytest.raises(InsufficientDataError):
            mle_reconstruct(records, MleConfig(cutoff=FockCutoff(4)))

    def test_value_outside_grid(self):
        records = sample_quadratures(dm_from_diag([1.0], 4), 150, seed=0)
        records.append(QuadratureRecord(50.0, 0.0, 0, 0))
        with pytest.raises(FockDomainError):
            mle_reconstruct(records, MleConfig(cutoff=FockCutoff(4)))

    def test_vacuum(self):
        records = sample_quadratures(dm_from_diag([1.0], 10), 10000, seed=13)
        result = mle_reconstruct(records, MleConfig(cutoff=FockCutoff(10)))
        assert result.rho.probabilities()[0] >= 0.98

    def test_mixture_probabilities(self, mixture_result):
        p = mixture_result.rho.probabilities()
        assert abs(p[1] - 0.62) < 0.03
        assert abs(p[0] - 0.38) < 0.03
        assert mixture_result.converged

    def test_result_is_diagonal(self, mixture_result):
        assert mixture_result.rho.is_diagonal()

    def test_monotone_log_likelihood(self, mixture_result):
        steps = np.diff(mixture_result.log_likelihood_trace)
        assert np.all(steps >= -1e-12)
        assert mixture_result.final_log_likelihood == mixture_result.log_likelihood_trace[-1]

    def test_log_likelihood_matches(self, mixture_records, mixture_result):
        value = log_likelihood(mixture_result.rho, mixture_records, phase_insensitive=True)
        assert abs(value - mixture_result.final_log_likelihood) < 1e-9

    def test_fixed_point(self, mixture_records, mixture_result):
        cfg = MleConfig(cutoff=FockCutoff(10))
        again = mle_reconstruct(mixture_records, cfg, initial=mixture_result.rho)
        assert abs(again.final_log_likelihood - mixture_result.final_log_likelihood) < 1e-8

    def test_iteration_cap(self, mixture_records):
        result = mle_reconstruct(mixture_records, MleConfig(cutoff=FockCutoff(10), max_iterations=1))
        assert not result.converged
        assert result.iterations_used == 1
        assert abs(np.sum(result.rho.probabilities()) - 1.0) < 1e-12

    def test_initial_dimension_mismatch(self, mixture_records):
        with pytest.raises(FockDomainError):
            mle_reconstruct(mixture_records, MleConfig(cutoff=FockCutoff(10)), initial=dm_from_diag([1.0], 4))

    def test_binned(self, mixture_records):
        result = mle_reconstruct(mixture_records, MleConfig(cutoff=FockCutoff(10), bin_width=0.05))
        assert abs(result.rho.probabilities()[1] - 0.62) < 0.04

    def test_full_phase_mode(self):
        truth = PureState(np.array([1.0, 1.0]) / math.sqrt(2.0)).to_density_matrix()
        records = sample_quadratures(truth, 4000, PhasePolicy.uniform(), seed=17)
        result = mle_reconstruct(records, MleConfig(cutoff=FockCutoff(3), phase_insensitive=False))
        assert abs(result.rho.elements[1, 0] - 0.5) < 0.05
        steps = np.diff(result.log_likelihood_trace)
        assert np.all(steps >= -1e-12)
        insensitive = mle_reconstruct(records, MleConfig(cutoff=FockCutoff(3)))
        assert insensitive.rho.is_diagonal()
        assert abs(insensitive.rho.probabilities()[1] - 0.5) < 0.08


@pytest.mark.slow
class TestClosedLoop:
    """Simulate, reconstruct and compare with the truth."""

    @pytest.mark.parametrize("r, eta_i, eta_s, herald_n", [
        (0.3, 1.0, 1.0, 1),
        (0.3, 1.0, 0.62, 1),
        (0.5, 0.85, 0.85, 2),
    ])
    def test_fidelity(self, r, eta_i, eta_s, herald_n):
        truth, _ = conditional_signal_state(HeraldScenario(r, eta_i, eta_s, herald_n, FockCutoff(10)))
        records = sample_quadratures(truth, 10000, seed=42, herald_n=herald_n)
        result = mle_reconstruct(records, MleConfig(cutoff=FockCutoff(10)))
        assert fidelity(truth, result.rho) >= 0.99
        p_true = truth.probabilities()
        assert np.all(np.abs(p_true - result.rho.probabilities()) <= probability_tolerance(p_true))
        assert np.all(np.diff(result.log_likelihood_trace) >= -1e-12)
