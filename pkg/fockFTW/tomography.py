"""
Iterative maximum-likelihood homodyne tomography.

The estimate is refined by the fixed-point update rho <- N[R rho R] with
R(rho) = (1/N) sum_j w_j Pi_j / tr(rho Pi_j), where Pi_j = |x_j,theta_j><x_j,theta_j|
is the quadrature projector of sample j. Should a plain step lower the
log-likelihood, the update operator is diluted towards the identity,
(I + eps R) / (1 + eps), with eps halved until the likelihood no longer drops.

In phase-insensitive mode only the diagonal psi_n(x)^2 of each projector is
used and the estimate stays diagonal; theta is then ignored.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import FockDomainError, InputFormatError, InsufficientDataError
from .fock_core import DensityMatrix, FockCutoff
from .homodyne_sim import CONVENTION, hermite_functions

logger = logging.getLogger(__name__)

MIN_RECORDS = 100
# identity admixture after every normalization
MIXING_FLOOR = 1e-12
# allowed per-sample log-likelihood drop in an accepted step
MONOTONICITY_SLACK = 1e-12
MAX_DILUTION_HALVINGS = 30


@dataclass(frozen=True)
class MleConfig:
    """
    Settings for mle_reconstruct.

    Args:
        cutoff (FockCutoff): Truncation of the reconstructed state
        max_iterations (int): Iteration cap (>= 1)
        log_likelihood_tolerance (float): Stop once the per-sample gain drops below this
        phase_insensitive (bool): Constrain the estimate to be diagonal and ignore theta
        bin_width (float or None): Histogram x values into bins of this width
    """

    cutoff: FockCutoff = field(default_factory=lambda: FockCutoff(10))
    max_iterations: int = 2000
    log_likelihood_tolerance: float = 1e-9
    phase_insensitive: bool = True
    bin_width: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "cutoff", FockCutoff.coerce(self.cutoff))
        if isinstance(self.max_iterations, bool) or not isinstance(self.max_iterations, int) or self.max_iterations < 1:
            raise FockDomainError(f"max_iterations must be an integer >= 1, got {self.max_iterations}")
        if not self.log_likelihood_tolerance > 0.0:
            raise FockDomainError(f"log_likelihood_tolerance must be > 0, got {self.log_likelihood_tolerance}")
        if self.bin_width is not None and not self.bin_width > 0.0:
            raise FockDomainError(f"bin_width must be positive or None, got {self.bin_width}")

    def to_dict(self):
        return {
            "n_max": self.cutoff.n_max,
            "max_iterations": self.max_iterations,
            "log_likelihood_tolerance": self.log_likelihood_tolerance,
            "phase_insensitive": self.phase_insensitive,
            "bin_width": self.bin_width,
        }

    @classmethod
    def from_dict(cls, data, n_max=None, path=None):
        allowed = {"n_max", "max_iterations", "log_likelihood_tolerance", "phase_insensitive", "bin_width"}
        if not isinstance(data, dict):
            raise InputFormatError("MLE config must be a JSON object", path=path)
        unknown = set(data) - allowed
        if unknown:
            raise InputFormatError(f"MLE config has unknown keys {sorted(unknown)}", path=path)
        defaults = cls()
        phase_insensitive = data.get("phase_insensitive", defaults.phase_insensitive)
        if not isinstance(phase_insensitive, bool):
            raise InputFormatError(f"phase_insensitive must be true or false, got {phase_insensitive!r}", path=path)
        try:
            return cls(
                cutoff=FockCutoff(n_max if n_max is not None else int(data.get("n_max", defaults.cutoff.n_max))),
                max_iterations=int(data.get("max_iterations", defaults.max_iterations)),
                log_likelihood_tolerance=float(data.get("log_likelihood_tolerance", defaults.log_likelihood_tolerance)),
                phase_insensitive=phase_insensitive,
                bin_width=data.get("bin_width", defaults.bin_width),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, FockDomainError):
                raise
            raise InputFormatError(f"bad MLE config value: {e}", path=path)

    @classmethod
    def load(cls, path, n_max=None):
        path = Path(path)
        with open(path, "r", encoding="utf-8") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise InputFormatError(f"invalid JSON: {e.msg}", path=path, line_number=e.lineno)
        return cls.from_dict(data, n_max=n_max, path=path)

    def with_cutoff(self, n_max):
        return replace(self, cutoff=FockCutoff(n_max))


@dataclass(frozen=True)
class MleResult:
    rho: DensityMatrix
    iterations_used: int
    final_log_likelihood: float
    converged: bool
    log_likelihood_trace: tuple = ()

    def report(self, config, seed=None):
        """Run-report dict written next to the reconstructed state."""
        return {
            "iterations": self.iterations_used,
            "log_likelihood": self.final_log_likelihood,
            "converged": self.converged,
            "config": config.to_dict(),
            "seed": seed,
        }


def projector_weights(x, theta, cutoff, phase_insensitive=False):
    """
    Quadrature projector |x,theta><x,theta| in the Fock basis.

    The ket has components v_n = psi_n(x) e^{i n theta}; in phase-insensitive
    mode only the diagonal psi_n(x)^2 is returned (as a diagonal matrix).
    """
    cutoff = FockCutoff.coerce(cutoff)
    psi = hermite_functions(float(x), cutoff.n_max)
    if phase_insensitive:
        return np.diag(psi ** 2).astype(complex)
    v = psi * np.exp(1j * np.arange(cutoff.dim) * theta)
    return np.outer(v, v.conj())


@dataclass
class _Design:
    """Sample-side data of the likelihood: one row per (binned) sample."""

    psi: np.ndarray
    weights: np.ndarray

    @property
    def total(self):
        return float(np.sum(self.weights))


def _build_design(records, cfg):
    x = np.array([r.x for r in records], dtype=float)
    theta = np.array([r.theta for r in records], dtype=float)
    if cfg.phase_insensitive:
        theta = np.zeros_like(theta)
    weights = np.ones_like(x)
    if cfg.bin_width is not None:
        # histogram x per distinct phase, one row per occupied bin
        idx = np.floor(x / cfg.bin_width).astype(np.int64)
        keys = np.stack([np.round(theta, 12), idx.astype(float)], axis=1)
        unique, counts = np.unique(keys, axis=0, return_counts=True)
        theta = unique[:, 0]
        x = (unique[:, 1] + 0.5) * cfg.bin_width
        weights = counts.astype(float)
    psi = hermite_functions(x, cfg.cutoff.n_max).T
    if cfg.phase_insensitive:
        return _Design(psi=psi ** 2, weights=weights)
    phases = np.exp(1j * np.outer(theta, np.arange(cfg.cutoff.dim)))
    return _Design(psi=psi * phases, weights=weights)


def _probabilities(design, state, diagonal):
    if diagonal:
        return design.psi @ state
    v = design.psi
    return np.real(np.sum((v.conj() @ state) * v, axis=1))


def _per_sample_log_likelihood(design, state, diagonal):
    probs = np.clip(_probabilities(design, state, diagonal), 1e-300, None)
    return float(np.dot(design.weights, np.log(probs)) / design.total), probs


def _r_operator(design, probs, diagonal):
    scale = design.weights / probs / design.total
    if diagonal:
        return scale @ design.psi
    v = design.psi
    return (v * scale[:, None]).T @ v.conj()


def _normalize(state, diagonal):
    dim = state.shape[0]
    if diagonal:
        state = np.clip(state, 0.0, None)
        state = state / np.sum(state)
        return (state + MIXING_FLOOR) / (1.0 + dim * MIXING_FLOOR)
    state = 0.5 * (state + state.conj().T)
    state = state / np.trace(state).real
    return (state + MIXING_FLOOR * np.eye(dim)) / (1.0 + dim * MIXING_FLOOR)


def _step(state, r_op, eps, diagonal):
    """One (possibly diluted) update; eps = None means the plain R rho R step."""
    if diagonal:
        g = r_op if eps is None else (1.0 + eps * r_op) / (1.0 + eps)
        return _normalize(g * g * state, True)
    if eps is None:
        g = r_op
    else:
        g = (np.eye(state.shape[0]) + eps * r_op) / (1.0 + eps)
    return _normalize(g @ state @ g.conj().T, False)


def _validate_records(records, cfg):
    if len(records) < MIN_RECORDS:
        raise InsufficientDataError(f"tomography needs at least {MIN_RECORDS} records, got {len(records)}")
    half = CONVENTION.grid_half_width(cfg.cutoff.n_max)
    outside = sum(1 for r in records if abs(r.x) > half)
    if outside:
        raise FockDomainError(f"{outside} quadrature values lie outside the grid |x| <= {half:.3f}")


def log_likelihood(rho, records, phase_insensitive=False):
    """Per-sample log-likelihood (1/N) sum_j log tr(rho Pi_j)."""
    cfg = MleConfig(cutoff=rho.cutoff, phase_insensitive=phase_insensitive)
    design = _build_design(records, cfg)
    state = rho.probabilities() if phase_insensitive else np.array(rho.elements)
    value, _ = _per_sample_log_likelihood(design, state, phase_insensitive)
    return value


def mle_reconstruct(records, cfg=None, initial=None):
    """
    Maximum-likelihood density matrix from quadrature records.

    Args:
        records: Sequence of QuadratureRecord (at least 100)
        cfg (MleConfig): Settings; the default is phase-insensitive at n_max = 10
        initial (DensityMatrix, optional): Starting point; the maximally mixed
            state when omitted

    Returns:
        MleResult

    Raises:
        InsufficientDataError: With fewer than 100 records.
        FockDomainError: If a value lies outside the sampler grid, or the
            initial state has the wrong dimension.
    """
    cfg = MleConfig() if cfg is None else cfg
    records = list(records)
    _validate_records(records, cfg)
    diagonal = cfg.phase_insensitive
    dim = cfg.cutoff.dim
    design = _build_design(records, cfg)

    if initial is None:
        state = np.full(dim, 1.0 / dim) if diagonal else np.eye(dim, dtype=complex) / dim
    else:
        if initial.dim != dim:
            raise FockDomainError(f"initial state has dim {initial.dim}, config expects {dim}")
        state = initial.probabilities() if diagonal else np.array(initial.elements)
        state = _normalize(state, diagonal)

    ll, probs = _per_sample_log_likelihood(design, state, diagonal)
    trace = [ll]
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        r_op = _r_operator(design, probs, diagonal)
        eps = None
        candidate = _step(state, r_op, eps, diagonal)
        new_ll, new_probs = _per_sample_log_likelihood(design, candidate, diagonal)
        halvings = 0
        while new_ll < ll - MONOTONICITY_SLACK and halvings < MAX_DILUTION_HALVINGS:
            eps = 1.0 if eps is None else eps / 2.0
            halvings += 1
            candidate = _step(state, r_op, eps, diagonal)
            new_ll, new_probs = _per_sample_log_likelihood(design, candidate, diagonal)
        if new_ll < ll - MONOTONICITY_SLACK:
            # no dilution helps: the current state is a fixed point to working precision
            logger.debug("iteration %d: no ascent direction left, stopping", iterations)
            converged = True
            iterations -= 1
            break
        if eps is not None:
            logger.debug("iteration %d: diluted step eps=%.3g", iterations, eps)
        gain = new_ll - ll
        state, ll, probs = candidate, new_ll, new_probs
        trace.append(ll)
        logger.debug("iteration %d: log-likelihood %.12f (gain %.3e)", iterations, ll, gain)
        if gain < cfg.log_likelihood_tolerance:
            converged = True
            break

    steps = np.diff(trace)
    if steps.size and float(np.min(steps)) < -MONOTONICITY_SLACK:
        raise RuntimeError(f"log-likelihood decreased by {-float(np.min(steps)):.3e} during MLE")
    if not converged:
        logger.warning("MLE stopped at max_iterations=%d without converging", cfg.max_iterations)
    rho = DensityMatrix(np.diag(state) if diagonal else state, normalize=True)
    return MleResult(
        rho=rho,
        iterations_used=iterations,
        final_log_likelihood=ll,
        converged=converged,
        log_likelihood_trace=tuple(trace),
    )
