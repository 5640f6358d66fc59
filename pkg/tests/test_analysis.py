#!/usr/bin/env python3
"""
Test suite for Wigner functions, photon-number tables and bootstrap errors.
"""

import json
import math

import numpy as np
import pytest

from fockFTW.errors import FockDomainError, InputFormatError, InsufficientDataError
from fockFTW.fock_core import FockCutoff, PureState, dm_from_diag, fock_state
from fockFTW.homodyne_sim import sample_quadratures
from fockFTW.acceptance import bootstrap_sd_bounds
from fockFTW.analysis import (
    PhotonProbability,
    WignerValue,
    bootstrap,
    bootstrap_many,
    parse_statistic,
    photon_distribution,
    photon_number_table,
    quadrature_histogram,
    refine_radial_minimum,
    wigner_grid,
    wigner_point,
    wigner_values,
)
from fockFTW.tomography import MleConfig

SINGLE_PHOTON_ROW = [0.372, 0.620, 0.000, 0.008, 0.000]
TWO_PHOTON_ROW = [0.119, 0.382, 0.408, 0.079, 0.013]


@pytest.fixture
def single_photon_state():
    """Fixture providing the single-photon table row at n_max = 10."""
    return dm_from_diag(SINGLE_PHOTON_ROW, 10)


@pytest.fixture
def two_photon_state():
    """Fixture providing the rounded two-photon table row at n_max = 10."""
    return dm_from_diag(TWO_PHOTON_ROW, 10, sum_tolerance=2e-3)


@pytest.fixture(scope="module")
def small_dataset():
    """Fixture providing 1,000 samples of the (0.38, 0.62) mixture."""
    return sample_quadratures(dm_from_diag([0.38, 0.62], 4), 1000, seed=31, herald_n=1)


class TestWignerValues:
    """Tests for pointwise Wigner evaluation."""

    def test_vacuum_origin(self):
        """Vacuum has W(0,0) = 1/pi."""
        assert abs(wigner_point(fock_state(0, 3).to_density_matrix(), 0.0, 0.0) - 1.0 / math.pi) < 1e-12

    def test_single_photon_origin(self):
        """|1> has W(0,0) = -1/pi."""
        assert abs(wigner_point(fock_state(1, 3).to_density_matrix(), 0.0, 0.0) + 1.0 / math.pi) < 1e-12

    def test_single_photon_row(self, single_photon_state):
        """The single-photon row is negative at the origin, W(0,0) = -0.0815."""
        assert abs(wigner_point(single_photon_state, 0.0, 0.0) + 0.0815) < 5e-4

    def test_two_photon_row(self, two_photon_state):
        """The two-photon row is positive at the origin and negative on a ring near r = 0.65."""
        assert wigner_point(two_photon_state, 0.0, 0.0) > 0.0
        assert abs(wigner_point(two_photon_state, 0.0, 0.0) - 0.0251) < 5e-4
        assert abs(wigner_point(two_photon_state, 0.0, 0.65) + 0.0082) < 1e-3

    def test_radial_symmetry(self, two_photon_state):
        """Diagonal states depend on radius only."""
        angles = np.linspace(0.0, 2.0 * math.pi, 7)
        values = wigner_values(two_photon_state, 0.9 * np.cos(angles), 0.9 * np.sin(angles))
        assert np.max(values) - np.min(values) < 1e-12

    def test_coherent_superposition(self):
        """(|0> + |1>)/sqrt(2) has W = exp(-r^2)/pi (r^2 + sqrt(2) x)."""
        rho = PureState(np.array([1.0, 1.0]) / math.sqrt(2.0)).to_density_matrix()
        for x, p in ((1.0, 0.0), (-1.0, 0.0), (0.3, -0.7)):
            r2 = x * x + p * p
            expected = math.exp(-r2) / math.pi * (r2 + math.sqrt(2.0) * x)
            assert abs(wigner_point(rho, x, p) - expected) < 1e-12

    def test_broadcast_shape(self, single_photon_state):
        """x and p broadcast together."""
        values = wigner_values(single_photon_state, np.zeros((3, 1)), np.zeros((1, 4)))
        assert values.shape == (3, 4)


class TestWignerGrid:
    """Tests for gridded Wigner functions."""

    def test_integral(self):
        grid = wigner_grid(fock_state(1, 10).to_density_matrix())
        assert abs(grid.integral() - 1.0) < 1e-3

    def test_minimum_at_origin(self):
        grid = wigner_grid(fock_state(1, 10).to_density_matrix())
        assert abs(grid.min_value + 1.0 / math.pi) < 1e-12
        assert np.hypot(*grid.min_location) < 1e-12

    def test_resolution_too_small(self, single_photon_state):
        with pytest.raises(FockDomainError):
            wigner_grid(single_photon_state, resolution=15)

    def test_empty_range(self, single_photon_state):
        with pytest.raises(FockDomainError):
            wigner_grid(single_photon_state, x_range=(1.0, -1.0))

    def test_csv_layout(self, tmp_path, single_photon_state):
        grid = wigner_grid(single_photon_state, resolution=16)
        path = tmp_path / "wigner_grid.csv"
        grid.write_csv(path)
        lines = path.read_text().splitlines()
        assert len(lines) == 18
        assert lines[0].startswith("x_axis,")
        assert lines[1].startswith("p_axis,")
        assert len(lines[2].split(",")) == 17

    def test_min_json(self, tmp_path, single_photon_state):
        grid = wigner_grid(single_photon_state, resolution=21)
        path = tmp_path / "wigner_min.json"
        grid.write_min_json(path, extra={"W00": -0.0815})
        data = json.loads(path.read_text())
        assert set(data) == {"min_value", "min_x", "min_p", "W00"}


class TestRadialMinimum:
    """Tests for sub-grid refinement of the negative ring."""

    def test_two_photon_ring(self, two_photon_state):
        """The minimum of the two-photon row lies near r = 0.65."""
        radius, value = refine_radial_minimum(two_photon_state)
        assert 0.6 < radius < 0.72
        assert value < 0.0
        assert value <= wigner_point(two_photon_state, 0.0, 0.65) + 1e-12

    def test_bracketed_by_grid(self, two_photon_state):
        """Refinement around a grid minimum agrees with the unbracketed search."""
        grid = wigner_grid(two_photon_state, resolution=101)
        radius, _ = refine_radial_minimum(two_photon_state, grid)
        free, _ = refine_radial_minimum(two_photon_state)
        assert abs(radius - free) < 1e-4

    def test_needs_diagonal_state(self):
        """Phase-sensitive states have no radial minimum."""
        rho = PureState(np.array([1.0, 1.0]) / math.sqrt(2.0)).to_density_matrix()
        with pytest.raises(FockDomainError):
            refine_radial_minimum(rho)


class TestPhotonNumbers:
    """Tests for photon-number summaries."""

    def test_distribution(self, single_photon_state):
        """One (n, P(n)) pair per Fock level."""
        dist = photon_distribution(single_photon_state)
        assert len(dist) == 11
        assert dist[1] == (1, pytest.approx(0.62))

    def test_table(self, single_photon_state):
        """The printed row matches 37.2% 62.0% 0.0% 0.8% 0.0%."""
        header, row = photon_number_table(single_photon_state).splitlines()
        assert header.split() == ["P(0)", "P(1)", "P(2)", "P(3)", "P(4)"]
        assert row.split() == ["37.2%", "62.0%", "0.0%", "0.8%", "0.0%"]

    def test_table_with_errors(self, single_photon_state):
        """Standard deviations are printed with a ± sign."""
        table = photon_number_table(single_photon_state, sds=[0.012, 0.0125], max_n=1)
        assert "62.0 ± 1.3%" in table
        assert "37.2 ± 1.2%" in table


class TestStatistics:
    """Tests for statistic parsing."""

    def test_photon_probability(self):
        assert parse_statistic("P(3)") == PhotonProbability(3)

    def test_wigner_value(self):
        stat = parse_statistic("W(-0.5, 0.65)")
        assert stat == WignerValue(-0.5, 0.65)
        assert stat.name == "W(-0.5,0.65)"

    def test_unknown(self):
        with pytest.raises(InputFormatError):
            parse_statistic("Q(1)")

    def test_outside_cutoff(self, single_photon_state):
        with pytest.raises(FockDomainError):
            PhotonProbability(11).evaluate(single_photon_state)


class TestBootstrap:
    """Tests for bootstrap error estimates."""

    @pytest.fixture
    def cfg(self):
        """Fixture providing a small-cutoff reconstruction config."""
        return MleConfig(cutoff=FockCutoff(4))

    def test_few_replicates_flagged(self, small_dataset, cfg):
        """Two replicates work but are flagged."""
        report = bootstrap(small_dataset, "P(1)", cfg, replicates=2, seed=0)
        assert report.replicate_count + report.excluded_count == 2
        assert report.few_replicates
        assert report.sd >= 0.0

    def test_deterministic(self, small_dataset, cfg):
        """Same seed gives identical replicate values."""
        a = bootstrap(small_dataset, "P(1)", cfg, replicates=4, seed=5)
        b = bootstrap(small_dataset, "P(1)", cfg, replicates=4, seed=5)
        assert a.values == b.values
        assert a.to_dict() == b.to_dict()

    def test_workers_do_not_change_result(self, small_dataset, cfg):
        """Threaded replicates reproduce the serial ones."""
        serial = bootstrap(small_dataset, "P(1)", cfg, replicates=4, seed=5, workers=1)
        threaded = bootstrap(small_dataset, "P(1)", cfg, replicates=4, seed=5, workers=2)
        assert serial.values == threaded.values

    def test_shared_replicates(self, small_dataset, cfg):
        """Several statistics come from the same reconstructions."""
        reports = bootstrap_many(small_dataset, ["P(0)", "P(1)", "W(0,0)"], cfg, replicates=4, seed=1)
        assert [r.statistic for r in reports] == ["P(0)", "P(1)", "W(0,0)"]
        assert all(r.replicate_count == reports[0].replicate_count for r in reports)

    def test_too_few_replicates(self, small_dataset, cfg):
        with pytest.raises(FockDomainError):
            bootstrap(small_dataset, "P(1)", cfg, replicates=1)

    def test_bad_statistic(self, small_dataset, cfg):
        """Statistic text is validated before any reconstruction."""
        with pytest.raises(InputFormatError):
            bootstrap(small_dataset, "P(one)", cfg, replicates=2)

    @pytest.mark.slow
    def test_single_photon_sd(self):
        records = sample_quadratures(dm_from_diag([0.38, 0.62], 10), 10000, seed=42, herald_n=1)
        report = bootstrap(records, "P(1)", MleConfig(cutoff=FockCutoff(10)), replicates=100, seed=42)
        lo, hi = bootstrap_sd_bounds()
        assert lo <= report.sd <= hi
        assert not report.few_replicates

    @pytest.mark.slow
    def test_sd_shrinks_as_inverse_root_n(self):
        truth = dm_from_diag([0.38, 0.62], 10)
        scaled = []
        for n in (2500, 10000, 40000):
            records = sample_quadratures(truth, n, seed=7, herald_n=1)
            report = bootstrap(records, "P(1)", MleConfig(cutoff=FockCutoff(10)), replicates=100, seed=7)
            scaled.append(report.sd * math.sqrt(n))
        center = np.mean(scaled)
        assert all(abs(s - center) < 0.25 * center for s in scaled)


class TestQuadratureHistogram:
    """Tests for measured against predicted quadrature densities."""

    def test_vacuum_reference(self, tmp_path):
        vacuum = fock_state(0, 4).to_density_matrix()
        records = sample_quadratures(vacuum, 20000, seed=9)
        hist = quadrature_histogram(records, vacuum, bins=40)
        assert np.max(np.abs(hist.measured - hist.predicted)) < 0.08
        path = tmp_path / "hist.csv"
        hist.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "x,measured,predicted"
        assert len(lines) == 41

    def test_empty(self):
        with pytest.raises(InsufficientDataError):
            quadrature_histogram([], fock_state(0, 2).to_density_matrix())
