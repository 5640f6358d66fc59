"""
Quadrature statistics of truncated states and Monte-Carlo homodyne sampling.

Convention: x = (a + a^dagger) / sqrt(2), so the vacuum has variance 1/2 and
psi_n(x) = H_n(x) exp(-x^2/2) / sqrt(2^n n! sqrt(pi)). The LO phase rotates
the measured quadrature, x_theta = x cos(theta) + p sin(theta).

Quadrature datasets are CSV files with header ``x,theta,herald_n,slot``; the
same format comes out of the trace pipeline and goes into tomography.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import FockDomainError, InputFormatError
from .fock_core import FockCutoff, derive_rng

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
CSV_HEADER = ["x", "theta", "herald_n", "slot"]
GRID_POINTS = 4096
# stream key for sample_quadratures under derive_rng
SAMPLING_STREAM = 0


@dataclass(frozen=True)
class QuadratureConvention:
    """Fixed quadrature normalization shared by simulator, pipeline and tomography."""

    vacuum_variance: float = 0.5
    grid_points: int = GRID_POINTS

    def grid_half_width(self, n_max):
        return 5.0 + math.sqrt(2.0 * n_max)

    def grid(self, n_max):
        half = self.grid_half_width(n_max)
        return np.linspace(-half, half, self.grid_points)


CONVENTION = QuadratureConvention()


def quadrature_grid(n_max):
    """Sampler grid x in [-L, L], L = 5 + sqrt(2 n_max), 4096 points."""
    return CONVENTION.grid(n_max)


def hermite_functions(x, n_max):
    """
    Harmonic-oscillator eigenfunctions psi_0..psi_{n_max} evaluated at ``x``.

    Uses the three-term recurrence on psi_n itself,
    psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1},
    which stays finite for large n where H_n alone would overflow.

    Returns:
        numpy.ndarray: shape (n_max + 1, len(x)) (or (n_max + 1,) for scalar x)
    """
    x_arr = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x_arr).ravel()
    psi = np.empty((n_max + 1, flat.size))
    psi[0] = math.pi ** -0.25 * np.exp(-0.5 * flat ** 2)
    if n_max >= 1:
        psi[1] = math.sqrt(2.0) * flat * psi[0]
    for n in range(1, n_max):
        psi[n + 1] = math.sqrt(2.0 / (n + 1)) * flat * psi[n] - math.sqrt(n / (n + 1)) * psi[n - 1]
    if x_arr.ndim == 0:
        return psi[:, 0]
    return psi.reshape((n_max + 1,) + x_arr.shape)


@dataclass(frozen=True)
class QuadratureRecord:
    """
    One homodyne outcome.

    Args:
        x (float): Quadrature value in shot-noise units (vacuum variance 1/2)
        theta (float): LO phase in [0, 2 pi)
        herald_n (int): Photon count of the herald that selected this slot
        slot (int): Slot index within its trigger
    """

    x: float
    theta: float
    herald_n: int
    slot: int

    def __post_init__(self):
        if not math.isfinite(self.x):
            raise FockDomainError(f"quadrature value must be finite, got {self.x}")
        if not 0.0 <= self.theta < TWO_PI:
            raise FockDomainError(f"theta must lie in [0, 2pi), got {self.theta}")

    @classmethod
    def at_phase(cls, x, theta, herald_n, slot):
        """Build a record, wrapping ``theta`` into [0, 2 pi)."""
        wrapped = float(theta) % TWO_PI
        if wrapped >= TWO_PI:
            wrapped = 0.0
        return cls(float(x), wrapped, int(herald_n), int(slot))


@dataclass(frozen=True)
class PhasePolicy:
    """Either one fixed LO phase or a phase drawn uniformly per record."""

    mode: str = "fixed"
    theta: float = 0.0

    def __post_init__(self):
        if self.mode not in ("fixed", "uniform"):
            raise FockDomainError(f"phase policy must be 'fixed' or 'uniform', got {self.mode!r}")

    @classmethod
    def fixed(cls, theta=0.0):
        return cls("fixed", float(theta) % TWO_PI)

    @classmethod
    def uniform(cls):
        return cls("uniform", 0.0)


def _phase_vectors(dim, theta):
    return np.exp(1j * np.arange(dim) * theta)


def quad_pdf(rho, theta, x):
    """
    Quadrature density p(x|theta) = sum_mn rho_mn e^{i(n-m)theta} psi_m(x) psi_n(x).

    Args:
        rho (DensityMatrix): State
        theta (float): LO phase in radians
        x: Scalar or array of quadrature values

    Returns:
        float or numpy.ndarray: Non-negative density values

    Examples:
        >>> from fockFTW.fock_core import dm_from_diag
        >>> round(quad_pdf(dm_from_diag([1.0], 0), 0.0, 0.0), 4)
        0.5642
    """
    x_arr = np.asarray(x, dtype=float)
    psi = hermite_functions(np.atleast_1d(x_arr).ravel(), rho.dim - 1)
    if rho.is_diagonal():
        density = rho.probabilities() @ (psi ** 2)
    else:
        v = psi * _phase_vectors(rho.dim, theta)[:, None]
        density = np.real(np.einsum("mk,mn,nk->k", v.conj(), rho.elements, v))
    density = np.clip(density, 0.0, None)
    if x_arr.ndim == 0:
        return float(density[0])
    return density.reshape(x_arr.shape)


def _inverse_cdf(grid, density, uniforms):
    cdf = cumulative_trapezoid(density, grid, initial=0.0)
    cdf /= cdf[-1]
    return np.interp(uniforms, cdf, grid)


def sample_quadratures(rho, count, phase_policy=None, seed=0, herald_n=0, slot=0):
    """
    Draw i.i.d. homodyne outcomes from ``rho``.

    Sampling is inverse-CDF on the tabulated grid of quadrature_grid(n_max)
    with linear interpolation. For a diagonal state, or a fixed phase, one
    table serves every draw; otherwise each draw tabulates p(x|theta) at its
    own phase.

    Parameters:
        rho: DensityMatrix to sample
        count: int, number of records (>= 1)
        phase_policy: PhasePolicy, default fixed theta = 0
        seed: int, master seed (stream derive_rng(seed, 0))
        herald_n: int, herald tag written into every record
        slot: int, slot index written into every record

    Returns:
        list of QuadratureRecord
    """
    if isinstance(count, bool) or not isinstance(count, (int, np.integer)) or count < 1:
        raise FockDomainError(f"count must be a positive integer, got {count}")
    policy = PhasePolicy.fixed(0.0) if phase_policy is None else phase_policy
    rng = derive_rng(seed, SAMPLING_STREAM)
    grid = quadrature_grid(rho.dim - 1)

    if policy.mode == "uniform":
        thetas = rng.uniform(0.0, TWO_PI, size=count)
    else:
        thetas = np.full(count, policy.theta)
    uniforms = rng.random(count)

    if rho.is_diagonal() or policy.mode == "fixed":
        density = quad_pdf(rho, float(thetas[0]), grid)
        xs = _inverse_cdf(grid, density, uniforms)
    else:
        # p(x|theta) = Re sum_k e^{ik theta} A_k(x), A_k built once from the k-th superdiagonal
        psi = hermite_functions(grid, rho.dim - 1)
        harmonics = np.zeros((rho.dim, grid.size), dtype=complex)
        for k in range(rho.dim):
            band = np.diagonal(rho.elements, offset=k)
            term = np.sum(band[:, None] * psi[: rho.dim - k] * psi[k:], axis=0)
            harmonics[k] = term if k == 0 else 2.0 * term
        xs = np.empty(count)
        ks = np.arange(rho.dim)
        for j in range(count):
            density = np.clip(np.real(np.exp(1j * ks * thetas[j]) @ harmonics), 0.0, None)
            xs[j] = _inverse_cdf(grid, density, uniforms[j])

    logger.debug("sampled %d quadratures (policy=%s, seed=%d)", count, policy.mode, seed)
    return [
        QuadratureRecord.at_phase(x, theta, herald_n, slot)
        for x, theta in zip(xs.tolist(), thetas.tolist())
    ]


def write_quadrature_csv(path, records):
    """Write records as ``x,theta,herald_n,slot`` with 17 significant digits."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow([f"{rec.x:.17g}", f"{rec.theta:.17g}", rec.herald_n, rec.slot])
    logger.info("wrote %d quadrature records to %s", len(records), path)


def read_quadrature_csv(path):
    """
    Read a quadrature CSV written by write_quadrature_csv (or any tool using its header).

    Raises:
        InputFormatError: On a wrong header or an unparseable row (with its line number).
    """
    path = Path(path)
    records = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CSV_HEADER:
            raise InputFormatError(f"expected header {','.join(CSV_HEADER)}", path=path, line_number=1)
        for line_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise InputFormatError(f"expected 4 fields, got {len(row)}", path=path, line_number=line_number)
            try:
                records.append(QuadratureRecord.at_phase(float(row[0]), float(row[1]), int(row[2]), int(row[3])))
            except (ValueError, FockDomainError) as e:
                raise InputFormatError(f"bad quadrature row: {e}", path=path, line_number=line_number)
    return records
