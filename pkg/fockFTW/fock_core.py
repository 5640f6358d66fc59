"""
Truncated Fock-space linear algebra.

Every other fockFTW module builds on the objects defined here: the explicit
cutoff, immutable density matrices and kets, ladder operators, fidelity and
photon-number moments. Nothing is ever re-truncated silently; matrices built
against one FockCutoff all share its dimension.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FockDomainError, InputFormatError

logger = logging.getLogger(__name__)

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-9
# eigenvalues in [EIGENVALUE_FLOOR, 0) are round-off and clamp to zero
EIGENVALUE_FLOOR = -1e-9
NORM_TOL = 1e-12


@dataclass(frozen=True)
class FockCutoff:
    """Highest retained Fock index; the truncated space has dimension n_max + 1."""

    n_max: int

    def __post_init__(self):
        if isinstance(self.n_max, bool) or not isinstance(self.n_max, (int, np.integer)):
            raise TypeError("n_max must be an integer")
        if self.n_max < 0:
            raise FockDomainError(f"n_max must be non-negative, got {self.n_max}")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def dim(self):
        return self.n_max + 1

    @classmethod
    def coerce(cls, value):
        """Accept either a FockCutoff or a plain integer n_max."""
        if isinstance(value, FockCutoff):
            return value
        return cls(value)


class DensityMatrix:
    """
    Hermitian, positive-semidefinite, unit-trace matrix on a truncated Fock basis.

    Instances are immutable: the element array is copied on construction and
    flagged read-only.

    Args:
        elements: Square array-like of complex values rho_mn
        normalize (bool): If True, any positive trace is accepted and divided
            out. If False (default), the trace must already be 1 within 1e-9.

    Raises:
        FockDomainError: If the matrix is not square, not Hermitian within
            1e-12, has a non-positive trace, or an eigenvalue below -1e-9.

    Examples:
        >>> rho = DensityMatrix([[0.5, 0.0], [0.0, 0.5]])
        >>> rho.probabilities()
        array([0.5, 0.5])
    """

    def __init__(self, elements, normalize=False):
        arr = np.array(elements, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise FockDomainError(f"density matrix must be square and non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise FockDomainError("density matrix contains non-finite values")
        skew = float(np.max(np.abs(arr - arr.conj().T)))
        if skew > HERMITICITY_TOL:
            raise FockDomainError(f"density matrix is not Hermitian (max deviation {skew:.3e})")
        arr = 0.5 * (arr + arr.conj().T)
        trace = float(np.trace(arr).real)
        if not trace > 0.0:
            raise FockDomainError(f"density matrix trace must be positive, got {trace}")
        if not normalize and abs(trace - 1.0) > TRACE_TOL:
            raise FockDomainError(f"density matrix trace must be 1 within {TRACE_TOL}, got {trace!r}")
        arr = arr / trace
        lowest = float(np.linalg.eigvalsh(arr)[0])
        if lowest < EIGENVALUE_FLOOR:
            raise FockDomainError(f"density matrix is not positive semidefinite (eigenvalue {lowest:.3e})")
        arr.setflags(write=False)
        self._elements = arr

    @property
    def dim(self):
        return self._elements.shape[0]

    @property
    def cutoff(self):
        return FockCutoff(self.dim - 1)

    @property
    def elements(self):
        """Read-only view of the complex matrix."""
        return self._elements

    def probabilities(self):
        """Photon-number distribution (the real diagonal, round-off negatives clipped to 0)."""
        return np.clip(np.real(np.diag(self._elements)), 0.0, None)

    def eigenvalues(self):
        """Ascending eigenvalues with values in [-1e-9, 0) clamped to zero."""
        values = np.linalg.eigvalsh(self._elements)
        values[(values < 0.0) & (values >= EIGENVALUE_FLOOR)] = 0.0
        return values

    def is_diagonal(self, atol=0.0):
        off = self._elements - np.diag(np.diag(self._elements))
        return bool(np.max(np.abs(off)) <= atol)

    def to_dict(self):
        """JSON-ready dict: {"dim", "re", "im"} with row-major flattened parts."""
        flat = self._elements.ravel(order="C")
        return {
            "dim": self.dim,
            "re": [float(v) for v in flat.real],
            "im": [float(v) for v in flat.imag],
        }

    @classmethod
    def from_dict(cls, data, path=None):
        """
        Rebuild a DensityMatrix from its JSON dict.

        Accepts flat row-major or nested "re"/"im" arrays.

        Raises:
            InputFormatError: If keys are missing or sizes disagree.
        """
        if not isinstance(data, dict) or not {"dim", "re", "im"} <= set(data):
            raise InputFormatError("density matrix JSON needs keys 'dim', 're', 'im'", path=path)
        try:
            dim = int(data["dim"])
            re = np.asarray(data["re"], dtype=float).reshape(dim, dim)
            im = np.asarray(data["im"], dtype=float).reshape(dim, dim)
        except (TypeError, ValueError) as e:
            raise InputFormatError(f"malformed density matrix JSON: {e}", path=path)
        return cls(re + 1j * im)

    def save(self, path):
        path = Path(path)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")
        logger.info("wrote density matrix (dim %d) to %s", self.dim, path)

    @classmethod
    def load(cls, path):
        path = Path(path)
        with open(path, "r", encoding="utf-8") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise InputFormatError(f"invalid JSON: {e.msg}", path=path, line_number=e.lineno)
        return cls.from_dict(data, path=path)

    def __repr__(self):
        return f"<DensityMatrix dim={self.dim} P={np.round(self.probabilities(), 4).tolist()}>"


class PureState:
    """
    Normalized ket on a truncated Fock basis.

    Args:
        amplitudes: 1-D array-like of complex amplitudes c_n

    Raises:
        FockDomainError: If the squared norm differs from 1 by more than 1e-12.
    """

    def __init__(self, amplitudes):
        arr = np.array(amplitudes, dtype=complex)
        if arr.ndim != 1 or arr.size == 0:
            raise FockDomainError("amplitudes must be a non-empty 1-D sequence")
        norm2 = float(np.vdot(arr, arr).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise FockDomainError(f"pure state squared norm must be 1, got {norm2!r}")
        arr.setflags(write=False)
        self._amplitudes = arr

    @property
    def dim(self):
        return self._amplitudes.size

    @property
    def amplitudes(self):
        return self._amplitudes

    def to_density_matrix(self):
        return DensityMatrix(np.outer(self._amplitudes, self._amplitudes.conj()), normalize=True)

    def __repr__(self):
        return f"<PureState dim={self.dim}>"


def fock_state(n, cutoff):
    """Fock ket |n> on the truncated space."""
    cutoff = FockCutoff.coerce(cutoff)
    if not 0 <= n <= cutoff.n_max:
        raise FockDomainError(f"Fock index {n} outside cutoff n_max={cutoff.n_max}")
    amplitudes = np.zeros(cutoff.dim, dtype=complex)
    amplitudes[n] = 1.0
    return PureState(amplitudes)


def annihilation_matrix(cutoff):
    """
    Truncated annihilation operator with entries [m, m+1] = sqrt(m+1).

    Examples:
        >>> annihilation_matrix(FockCutoff(2)).real
        array([[0.        , 1.        , 0.        ],
               [0.        , 0.        , 1.41421356],
               [0.        , 0.        , 0.        ]])
    """
    cutoff = FockCutoff.coerce(cutoff)
    return np.diag(np.sqrt(np.arange(1, cutoff.dim, dtype=float)), k=1).astype(complex)


def number_matrix(cutoff):
    cutoff = FockCutoff.coerce(cutoff)
    return np.diag(np.arange(cutoff.dim, dtype=float)).astype(complex)


def dm_from_diag(probs, cutoff, sum_tolerance=1e-6):
    """
    Diagonal density matrix with a given photon-number distribution.

    Parameters:
        probs: sequence of non-negative reals, length <= n_max + 1 (zero padded).
        cutoff: FockCutoff or int n_max.
        sum_tolerance: float, how far the sum may sit from 1 before it is
            rejected (default 1e-6). The distribution is renormalized exactly.

    Returns:
        DensityMatrix: diag(probs) / sum(probs)

    Raises:
        FockDomainError: On negative entries, zero sum, a sum outside tolerance
            or more entries than the cutoff holds.
    """
    cutoff = FockCutoff.coerce(cutoff)
    p = np.asarray(probs, dtype=float).ravel()
    if p.size > cutoff.dim:
        raise FockDomainError(f"{p.size} probabilities do not fit cutoff n_max={cutoff.n_max}")
    if not np.all(np.isfinite(p)):
        raise FockDomainError("probabilities must be finite")
    if np.any(p < 0.0):
        raise FockDomainError("probabilities must be non-negative")
    total = float(np.sum(p))
    if total <= 0.0:
        raise FockDomainError("probabilities sum to zero")
    if abs(total - 1.0) > sum_tolerance:
        raise FockDomainError(f"probabilities sum to {total!r}, not 1 within {sum_tolerance}")
    padded = np.zeros(cutoff.dim)
    padded[: p.size] = p / total
    return DensityMatrix(np.diag(padded), normalize=True)


def fidelity(a, b):
    """
    Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2, clipped to [0, 1].

    For two diagonal inputs this is evaluated in closed form as
    (sum_n sqrt(p_n q_n))^2.

    Raises:
        FockDomainError: If the dimensions differ.
    """
    if a.dim != b.dim:
        raise FockDomainError(f"fidelity needs equal dimensions, got {a.dim} and {b.dim}")
    if a.is_diagonal() and b.is_diagonal():
        value = float(np.sum(np.sqrt(a.probabilities() * b.probabilities()))) ** 2
    else:
        w, v = np.linalg.eigh(a.elements)
        sqrt_a = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
        inner = sqrt_a @ b.elements @ sqrt_a
        mu = np.clip(np.linalg.eigvalsh(0.5 * (inner + inner.conj().T)), 0.0, None)
        value = float(np.sum(np.sqrt(mu))) ** 2
    return min(max(value, 0.0), 1.0)


def mean_photon(rho):
    """trace(rho n)."""
    return float(np.dot(np.arange(rho.dim), np.real(np.diag(rho.elements))))


def derive_rng(seed, *keys):
    """
    Seeded generator for one named random stream.

    All randomness in fockFTW flows from a single integer seed; independent
    streams are told apart by integer keys, e.g. derive_rng(seed, 1, i) for
    bootstrap replicate i. The same (seed, keys) always gives the same stream.
    """
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError("seed must be an integer")
    if seed < 0 or any(int(k) < 0 for k in keys):
        raise FockDomainError("seed and stream keys must be non-negative")
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(k) for k in keys)]))
