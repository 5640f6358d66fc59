"""
Wigner functions, negativity search, photon-number tables and bootstrap errors.

Wigner convention matches homodyne_sim (vacuum variance 1/2): the vacuum is
W = exp(-x^2 - p^2) / pi. Matrix elements use the associated-Laguerre kernel

    W_mn(x, p) = (-1)^n / pi * sqrt(2^(m-n) n! / m!) (x - i p)^(m-n)
                 * L_n^(m-n)(2 r^2) * exp(-r^2),      m >= n, r^2 = x^2 + p^2

with W_nm = conj(W_mn), and W = sum_mn rho_mn W_mn.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar
from scipy.special import eval_genlaguerre, gammaln

from .errors import FockDomainError, InputFormatError, InsufficientDataError
from .fock_core import DensityMatrix, derive_rng
from .formatting import format_percent
from .homodyne_sim import quad_pdf
from .tomography import MleConfig, mle_reconstruct

logger = logging.getLogger(__name__)

MIN_GRID_RESOLUTION = 16
DEFAULT_REPLICATES = 100
# fewer replicates than this get a warning flag on the report
MIN_RELIABLE_REPLICATES = 20
BOOTSTRAP_STREAM = 1
# warm start mixes this much of I/d into the point estimate
WARM_START_MIXING = 0.1


def wigner_values(rho, x, p):
    """
    Wigner function of ``rho`` on arrays ``x`` and ``p`` (broadcast together).

    Returns:
        numpy.ndarray: Real values with the broadcast shape of x and p
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    x, p = np.broadcast_arrays(x, p)
    r2 = x ** 2 + p ** 2
    rho_el = rho.elements
    total = np.zeros(x.shape)
    if rho.is_diagonal():
        probs = rho.probabilities()
        for n in np.nonzero(probs)[0]:
            total += probs[n] * (-1.0) ** n * eval_genlaguerre(int(n), 0, 2.0 * r2)
        return np.exp(-r2) / np.pi * total
    z = x - 1j * p
    for n in range(rho.dim):
        for m in range(n, rho.dim):
            element = rho_el[m, n]
            if element == 0:
                continue
            k = m - n
            coeff = np.exp(0.5 * (k * np.log(2.0) + gammaln(n + 1) - gammaln(m + 1)))
            kernel = (-1.0) ** n * coeff * z ** k * eval_genlaguerre(n, k, 2.0 * r2)
            if k == 0:
                total += np.real(element) * np.real(kernel)
            else:
                total += 2.0 * np.real(element * kernel)
    return np.exp(-r2) / np.pi * total


def wigner_point(rho, x, p):
    """
    W(x, p) at one phase-space point.

    Examples:
        >>> from fockFTW.fock_core import dm_from_diag
        >>> round(wigner_point(dm_from_diag([0.0, 1.0], 1), 0.0, 0.0), 4)
        -0.3183
    """
    return float(wigner_values(rho, float(x), float(p)))


@dataclass(frozen=True)
class WignerGrid:
    """
    Wigner function sampled on a rectangular grid; values[i, j] = W(x_axis[i], p_axis[j]).
    """

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray
    min_value: float
    min_location: tuple

    def integral(self):
        """Trapezoid estimate of the integral of W over the grid (1 for a contained state)."""
        inner = trapezoid(self.values, self.p_axis, axis=1)
        return float(trapezoid(inner, self.x_axis))

    def min_summary(self):
        return {
            "min_value": self.min_value,
            "min_x": self.min_location[0],
            "min_p": self.min_location[1],
        }

    def write_csv(self, path):
        """CSV with an ``x_axis`` row, a ``p_axis`` row, then one row of W per x."""
        path = Path(path)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["x_axis"] + [f"{v:.17g}" for v in self.x_axis])
            writer.writerow(["p_axis"] + [f"{v:.17g}" for v in self.p_axis])
            for row in self.values:
                writer.writerow([""] + [f"{v:.17g}" for v in row])
        logger.info("wrote %dx%d Wigner grid to %s", self.x_axis.size, self.p_axis.size, path)

    def write_min_json(self, path, extra=None):
        path = Path(path)
        payload = self.min_summary()
        if extra:
            payload.update(extra)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")


def wigner_grid(rho, x_range=(-5.0, 5.0), p_range=(-5.0, 5.0), resolution=201):
    """
    Evaluate W on a resolution x resolution grid and locate its minimum.

    Raises:
        FockDomainError: If resolution < 16 or a range is empty.
    """
    if isinstance(resolution, bool) or not isinstance(resolution, (int, np.integer)) or resolution < MIN_GRID_RESOLUTION:
        raise FockDomainError(f"grid resolution must be an integer >= {MIN_GRID_RESOLUTION}, got {resolution}")
    if not (x_range[1] > x_range[0] and p_range[1] > p_range[0]):
        raise FockDomainError(f"empty grid range x={x_range} p={p_range}")
    x_axis = np.linspace(float(x_range[0]), float(x_range[1]), int(resolution))
    p_axis = np.linspace(float(p_range[0]), float(p_range[1]), int(resolution))
    X, P = np.meshgrid(x_axis, p_axis, indexing="ij")
    values = wigner_values(rho, X, P)
    i, j = np.unravel_index(int(np.argmin(values)), values.shape)
    return WignerGrid(
        x_axis=x_axis,
        p_axis=p_axis,
        values=values,
        min_value=float(values[i, j]),
        min_location=(float(x_axis[i]), float(p_axis[j])),
    )


def refine_radial_minimum(rho, grid=None, max_radius=5.0):
    """
    Sub-grid radius of the Wigner minimum for a phase-insensitive state.

    A diagonal state has a radially symmetric W, so the minimum lies on a
    ring; the radius is refined with a bounded scalar minimisation, bracketed
    around the grid minimum when a grid is given.

    Returns:
        tuple: (radius, W at that radius)

    Raises:
        FockDomainError: If rho has off-diagonal elements.
    """
    if not rho.is_diagonal():
        raise FockDomainError("radial refinement needs a diagonal (phase-insensitive) state")
    if grid is not None:
        r0 = float(np.hypot(*grid.min_location))
        step = float(max(grid.x_axis[1] - grid.x_axis[0], grid.p_axis[1] - grid.p_axis[0]))
        lo, hi = max(0.0, r0 - 2.0 * step), min(max_radius, r0 + 2.0 * step)
    else:
        radii = np.linspace(0.0, max_radius, 501)
        r0 = float(radii[int(np.argmin(wigner_values(rho, radii, 0.0)))])
        lo, hi = max(0.0, r0 - 0.02), min(max_radius, r0 + 0.02)
    if hi <= lo:
        return r0, wigner_point(rho, r0, 0.0)
    res = minimize_scalar(lambda s: wigner_point(rho, s, 0.0), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-8})
    radius = float(res.x)
    value = float(res.fun)
    # the bounded search never returns the bracket ends, so compare with them
    for edge in (lo, hi):
        edge_value = wigner_point(rho, edge, 0.0)
        if edge_value < value:
            radius, value = edge, edge_value
    return radius, value


def photon_distribution(rho):
    """[(n, P(n)) for n = 0..n_max] from the diagonal of rho."""
    return [(n, float(p)) for n, p in enumerate(rho.probabilities())]


@dataclass(frozen=True)
class PhotonProbability:
    n: int

    @property
    def name(self):
        return f"P({self.n})"

    def evaluate(self, rho):
        if self.n >= rho.dim:
            raise FockDomainError(f"{self.name} outside cutoff n_max={rho.dim - 1}")
        return float(rho.probabilities()[self.n])


@dataclass(frozen=True)
class WignerValue:
    x: float
    p: float

    @property
    def name(self):
        return f"W({self.x:g},{self.p:g})"

    def evaluate(self, rho):
        return wigner_point(rho, self.x, self.p)


_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_PHOTON_RE = re.compile(r"^\s*P\(\s*(\d+)\s*\)\s*$")
_WIGNER_RE = re.compile(rf"^\s*W\(\s*({_NUMBER})\s*,\s*({_NUMBER})\s*\)\s*$")


def parse_statistic(text):
    """
    Parse ``"P(n)"`` or ``"W(x,p)"`` into a statistic object.

    Raises:
        InputFormatError: If the text matches neither form.

    Examples:
        >>> parse_statistic("P(1)").name
        'P(1)'
        >>> parse_statistic("W(0, 0.65)").name
        'W(0,0.65)'
    """
    if isinstance(text, (PhotonProbability, WignerValue)):
        return text
    m = _PHOTON_RE.match(text)
    if m:
        return PhotonProbability(int(m.group(1)))
    m = _WIGNER_RE.match(text)
    if m:
        return WignerValue(float(m.group(1)), float(m.group(2)))
    raise InputFormatError(f"unknown statistic {text!r}; expected 'P(n)' or 'W(x,p)'")


@dataclass(frozen=True)
class BootstrapReport:
    """
    Bootstrap summary for one statistic.

    ``few_replicates`` is set below 20 usable replicates; ``skewed`` when the
    percentile interval does not contain the point estimate.
    """

    statistic: str
    point_estimate: float
    replicate_count: int
    excluded_count: int
    sd: float
    interval: tuple
    few_replicates: bool = False
    skewed: bool = False
    values: tuple = field(default=(), repr=False, compare=False)

    def to_dict(self):
        return {
            "statistic": self.statistic,
            "point_estimate": self.point_estimate,
            "replicate_count": self.replicate_count,
            "excluded_count": self.excluded_count,
            "sd": self.sd,
            "interval": [self.interval[0], self.interval[1]],
            "few_replicates": self.few_replicates,
            "skewed": self.skewed,
        }


def _warm_start(rho):
    dim = rho.dim
    mixed = (1.0 - WARM_START_MIXING) * np.array(rho.elements) + WARM_START_MIXING * np.eye(dim) / dim
    return DensityMatrix(mixed, normalize=True)


def _replicate(records, cfg, seed, index, initial):
    rng = derive_rng(seed, BOOTSTRAP_STREAM, index)
    picks = rng.integers(0, len(records), size=len(records))
    result = mle_reconstruct([records[k] for k in picks], cfg, initial=initial)
    logger.debug("bootstrap replicate %d: %d iterations, converged=%s", index, result.iterations_used, result.converged)
    return result


def bootstrap_replicates(records, cfg, replicates, seed, initial=None, workers=1):
    """
    Reconstruct ``replicates`` resampled datasets.

    Replicate i always draws from derive_rng(seed, 1, i), so the output does
    not depend on ``workers``.

    Returns:
        list of MleResult, in replicate order
    """
    records = list(records)
    if isinstance(replicates, bool) or not isinstance(replicates, (int, np.integer)) or replicates < 2:
        raise FockDomainError(f"bootstrap needs at least 2 replicates, got {replicates}")
    if not records:
        raise InsufficientDataError("bootstrap needs a non-empty dataset")
    if workers is None or workers <= 1:
        return [_replicate(records, cfg, seed, i, initial) for i in range(replicates)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: _replicate(records, cfg, seed, i, initial), range(replicates)))


def _summarize(statistic, point, values, excluded):
    arr = np.asarray(values, dtype=float)
    lo, hi = (float(v) for v in np.percentile(arr, [2.5, 97.5]))
    few = arr.size < MIN_RELIABLE_REPLICATES
    skewed = not lo <= point <= hi
    if few:
        logger.warning("%s: only %d bootstrap replicates, error estimate is rough", statistic.name, arr.size)
    return BootstrapReport(
        statistic=statistic.name,
        point_estimate=float(point),
        replicate_count=int(arr.size),
        excluded_count=int(excluded),
        sd=float(np.std(arr, ddof=1)),
        interval=(lo, hi),
        few_replicates=few,
        skewed=skewed,
        values=tuple(arr.tolist()),
    )


def bootstrap_many(records, statistics, cfg=None, replicates=DEFAULT_REPLICATES, seed=0, estimate=None, workers=1):
    """
    Bootstrap several statistics from one shared set of replicate reconstructions.

    Args:
        records: Quadrature records (the full dataset)
        statistics: Iterable of "P(n)" / "W(x,p)" strings or statistic objects
        cfg (MleConfig): Reconstruction settings for every replicate
        replicates (int): Number of resamples (>= 2)
        seed (int): Master seed; replicate i uses derive_rng(seed, 1, i)
        estimate (MleResult, optional): Point reconstruction of ``records``;
            computed when omitted
        workers (int): Thread count for replicate reconstructions

    Returns:
        list of BootstrapReport, one per statistic

    Raises:
        InsufficientDataError: If fewer than 2 replicates converge.
    """
    cfg = MleConfig() if cfg is None else cfg
    records = list(records)
    stats = [parse_statistic(s) for s in statistics]
    if not stats:
        raise FockDomainError("bootstrap needs at least one statistic")
    if estimate is None:
        estimate = mle_reconstruct(records, cfg)
    results = bootstrap_replicates(records, cfg, replicates, seed, initial=_warm_start(estimate.rho), workers=workers)
    kept = [r for r in results if r.converged]
    excluded = len(results) - len(kept)
    if excluded:
        logger.warning("%d of %d bootstrap replicates did not converge and were excluded", excluded, len(results))
    if len(kept) < 2:
        raise InsufficientDataError(f"only {len(kept)} bootstrap replicates converged")
    return [
        _summarize(stat, stat.evaluate(estimate.rho), [stat.evaluate(r.rho) for r in kept], excluded)
        for stat in stats
    ]


def bootstrap(records, statistic, cfg=None, replicates=DEFAULT_REPLICATES, seed=0, workers=1):
    """Bootstrap report for a single statistic (see bootstrap_many)."""
    return bootstrap_many(records, [statistic], cfg, replicates, seed, workers=workers)[0]


@dataclass(frozen=True)
class QuadratureHistogram:
    """Measured quadrature density next to the density a state predicts."""

    centers: np.ndarray
    measured: np.ndarray
    predicted: np.ndarray

    def write_csv(self, path):
        path = Path(path)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["x", "measured", "predicted"])
            for row in zip(self.centers, self.measured, self.predicted):
                writer.writerow([f"{v:.17g}" for v in row])


def quadrature_histogram(records, rho, bins=60, theta=0.0):
    """
    Normalized histogram of the record x values and p(x|theta) of ``rho`` at the bin centers.

    With a vacuum ``rho`` this is the shot-noise reference comparison.
    """
    xs = np.array([r.x for r in records], dtype=float)
    if xs.size == 0:
        raise InsufficientDataError("histogram needs at least one record")
    edge = float(np.max(np.abs(xs)))
    edges = np.linspace(-edge, edge, int(bins) + 1)
    measured, edges = np.histogram(xs, bins=edges, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return QuadratureHistogram(centers=centers, measured=measured, predicted=quad_pdf(rho, theta, centers))


def photon_number_table(rho, sds=None, max_n=4, decimals=1):
    """
    Photon-number table: a header of P(0)..P(max_n) and one row of percentages.

    Args:
        rho (DensityMatrix): State whose diagonal is tabulated
        sds: Optional sequence of standard deviations (probability units) shown as +/-
        max_n (int): Highest photon number in the table
        decimals (int): Decimal places of the percentages

    Returns:
        str: Two lines, columns right-aligned
    """
    probs = rho.probabilities()
    cells = []
    for n in range(max_n + 1):
        p = float(probs[n]) if n < probs.size else 0.0
        sd = None if sds is None or n >= len(sds) else sds[n]
        cells.append(format_percent(p, sd=sd, decimals=decimals))
    headers = [f"P({n})" for n in range(max_n + 1)]
    width = max(len(c) for c in cells + headers)
    return "  ".join(h.rjust(width) for h in headers) + "\n" + "  ".join(c.rjust(width) for c in cells)
