"""
Heralded Fock-state generation from two-mode squeezed vacuum.

The two-mode squeezed vacuum is kept as its Schmidt coefficients
c_n = tanh^n(r) / cosh(r), never as a dense two-mode matrix. The idler arm
(coupling, filtering, detector efficiency) collapses into one transmission
eta_i seen by a photon-number-resolving detector; the signal arm into one
transmission eta_s applied as a loss channel. Dark counts are not modeled.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import comb

from .errors import FockDomainError, InputFormatError, UnheraldableError
from .fock_core import DensityMatrix, FockCutoff, dm_from_diag

logger = logging.getLogger(__name__)

# squared TMSV weight allowed beyond the cutoff
MAX_TRUNCATION_RESIDUAL = 1e-6
MIN_HERALD_PROBABILITY = 1e-15


def _check_efficiency(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
        raise TypeError(f"{name} must be a real number")
    if not 0.0 <= float(value) <= 1.0:
        raise FockDomainError(f"{name} must lie in [0, 1], got {value}")
    return float(value)


def truncation_residual(r, cutoff):
    """TMSV weight beyond the cutoff: sum_{n > n_max} c_n^2 = tanh^(2(n_max+1)) r."""
    cutoff = FockCutoff.coerce(cutoff)
    return float(np.tanh(r) ** (2 * cutoff.dim))


@dataclass(frozen=True)
class HeraldScenario:
    """
    One heralding configuration.

    Args:
        r (float): Squeezing parameter (dimensionless, >= 0)
        eta_i (float): Idler transmission including detector efficiency
        eta_s (float): Signal transmission including homodyne efficiency
        herald_n (int): Photon number the PNR detector must report
        cutoff (FockCutoff): Truncation of both modes
        label (str): Free text naming the experimental condition

    Raises:
        FockDomainError: If a parameter is out of range, herald_n exceeds the
            cutoff, or more than 1e-6 of the TMSV weight lies beyond it.
    """

    r: float
    eta_i: float
    eta_s: float
    herald_n: int
    cutoff: FockCutoff
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if isinstance(self.r, bool) or not isinstance(self.r, (int, float, np.floating, np.integer)):
            raise TypeError("r must be a real number")
        if not (np.isfinite(self.r) and self.r >= 0.0):
            raise FockDomainError(f"squeezing parameter r must be finite and >= 0, got {self.r}")
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "eta_i", _check_efficiency("eta_i", self.eta_i))
        object.__setattr__(self, "eta_s", _check_efficiency("eta_s", self.eta_s))
        object.__setattr__(self, "cutoff", FockCutoff.coerce(self.cutoff))
        if isinstance(self.herald_n, bool) or not isinstance(self.herald_n, (int, np.integer)):
            raise TypeError("herald_n must be an integer")
        if not 0 <= self.herald_n <= self.cutoff.n_max:
            raise FockDomainError(f"herald_n={self.herald_n} outside cutoff n_max={self.cutoff.n_max}")
        object.__setattr__(self, "herald_n", int(self.herald_n))
        residual = truncation_residual(self.r, self.cutoff)
        if residual >= MAX_TRUNCATION_RESIDUAL:
            raise FockDomainError(
                f"cutoff n_max={self.cutoff.n_max} too small for r={self.r}: "
                f"residual TMSV weight {residual:.2e} >= {MAX_TRUNCATION_RESIDUAL}"
            )

    def to_dict(self):
        return {
            "r": self.r,
            "eta_i": self.eta_i,
            "eta_s": self.eta_s,
            "herald_n": self.herald_n,
            "n_max": self.cutoff.n_max,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, data, n_max=None, path=None):
        """
        Build a scenario from its JSON dict; ``n_max`` overrides the file value.

        Raises:
            InputFormatError: On missing or unknown keys.
        """
        required = {"r", "eta_i", "eta_s", "herald_n"}
        allowed = required | {"n_max", "label"}
        if not isinstance(data, dict):
            raise InputFormatError("scenario JSON must be an object", path=path)
        missing = required - set(data)
        unknown = set(data) - allowed
        if missing:
            raise InputFormatError(f"scenario is missing keys {sorted(missing)}", path=path)
        if unknown:
            raise InputFormatError(f"scenario has unknown keys {sorted(unknown)}", path=path)
        if n_max is None:
            if "n_max" not in data:
                raise InputFormatError("scenario needs 'n_max' (or a --cutoff override)", path=path)
            n_max = data["n_max"]
        try:
            return cls(
                r=data["r"],
                eta_i=data["eta_i"],
                eta_s=data["eta_s"],
                herald_n=data["herald_n"],
                cutoff=FockCutoff(n_max),
                label=str(data.get("label", "")),
            )
        except TypeError as e:
            raise InputFormatError(f"bad scenario value: {e}", path=path)

    @classmethod
    def load(cls, path, n_max=None):
        path = Path(path)
        with open(path, "r", encoding="utf-8") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise InputFormatError(f"invalid JSON: {e.msg}", path=path, line_number=e.lineno)
        return cls.from_dict(data, n_max=n_max, path=path)


@dataclass(frozen=True)
class PnrPovmElement:
    """Diagonal POVM element of a lossy photon-number-resolving detector."""

    herald_n: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def tmsv_coefficients(r, cutoff):
    """
    Schmidt coefficients c_n = tanh^n(r) / cosh(r) for n = 0..n_max.

    Raises:
        FockDomainError: If r < 0.
    """
    cutoff = FockCutoff.coerce(cutoff)
    if not r >= 0.0:
        raise FockDomainError(f"squeezing parameter r must be >= 0, got {r}")
    n = np.arange(cutoff.dim)
    return np.tanh(r) ** n / np.cosh(r)


def pnr_povm(herald_n, eta_i, cutoff):
    """
    POVM element for the detector reporting ``herald_n`` photons.

    weights[m] = C(m, n) eta^n (1 - eta)^(m - n) for m >= n, else 0.

    Examples:
        >>> pnr_povm(1, 0.5, FockCutoff(3)).weights
        array([0.   , 0.5  , 0.5  , 0.375])
    """
    cutoff = FockCutoff.coerce(cutoff)
    eta = _check_efficiency("eta_i", eta_i)
    if not 0 <= herald_n <= cutoff.n_max:
        raise FockDomainError(f"herald_n={herald_n} outside cutoff n_max={cutoff.n_max}")
    m = np.arange(cutoff.dim)
    weights = np.zeros(cutoff.dim)
    above = m >= herald_n
    weights[above] = (
        comb(m[above], herald_n, exact=False)
        * np.power(eta, herald_n)
        * np.power(1.0 - eta, m[above] - herald_n)
    )
    return PnrPovmElement(herald_n=int(herald_n), weights=weights)


def _joint_weights(scenario):
    c = tmsv_coefficients(scenario.r, scenario.cutoff)
    povm = pnr_povm(scenario.herald_n, scenario.eta_i, scenario.cutoff)
    return c ** 2 * povm.weights


def herald_probability(scenario):
    """
    Probability that the idler detector reports ``scenario.herald_n`` photons.

    Equals tanh^(2n)(r) / cosh^2(r) for a perfect idler arm.
    """
    return float(np.sum(_joint_weights(scenario)))


def herald_distribution(scenario):
    """Probabilities of every herald outcome 0..n_max (sums to 1 - truncation residual)."""
    c2 = tmsv_coefficients(scenario.r, scenario.cutoff) ** 2
    return np.array([
        float(np.sum(c2 * pnr_povm(n, scenario.eta_i, scenario.cutoff).weights))
        for n in range(scenario.cutoff.dim)
    ])


def apply_loss(rho, eta):
    """
    Beamsplitter-to-vacuum loss channel with transmission ``eta``.

    Uses Kraus operators E_k = sum_m sqrt(C(m, k) eta^(m-k) (1-eta)^k) |m-k><m|,
    which act on photon-number distributions as binomial thinning.

    Raises:
        FockDomainError: If eta is outside [0, 1].
    """
    eta = _check_efficiency("eta", eta)
    if eta == 1.0:
        return rho
    dim = rho.dim
    out = np.zeros((dim, dim), dtype=complex)
    for k in range(dim):
        i = np.arange(dim - k)
        amplitudes = np.sqrt(comb(i + k, k, exact=False) * np.power(eta, i) * np.power(1.0 - eta, k))
        kraus = np.diag(amplitudes, k=k)
        out += kraus @ rho.elements @ kraus.conj().T
    return DensityMatrix(out, normalize=True)


def conditional_signal_state(scenario):
    """
    Signal state heralded by the idler detector, after signal loss.

    Returns:
        tuple: (DensityMatrix, herald probability)

    Raises:
        UnheraldableError: If the herald probability is below 1e-15.

    Examples:
        >>> s = HeraldScenario(0.3, 1.0, 0.62, 1, FockCutoff(10))
        >>> rho, p = conditional_signal_state(s)
        >>> rho.probabilities()[:2].round(2)
        array([0.38, 0.62])
    """
    joint = _joint_weights(scenario)
    probability = float(np.sum(joint))
    if probability < MIN_HERALD_PROBABILITY:
        raise UnheraldableError(scenario.herald_n, probability)
    heralded = dm_from_diag(joint / probability, scenario.cutoff)
    rho = apply_loss(heralded, scenario.eta_s)
    logger.debug(
        "herald n=%d at r=%.4f eta_i=%.3f eta_s=%.3f: probability %.6e",
        scenario.herald_n, scenario.r, scenario.eta_i, scenario.eta_s, probability,
    )
    return rho, probability
