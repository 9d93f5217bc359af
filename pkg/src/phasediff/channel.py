"""Phase shift and phase diffusion acting on truncated density matrices.

Both maps are diagonal in the Fock-basis "band" index ``d = n - m``: the
phase shift multiplies band ``d`` by ``exp(-i phi d)`` and phase diffusion
multiplies it by ``exp(-Delta^2 d^2)``.  Neither touches the diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import toeplitz

from .errors import DomainError
from .fock import FockVector

# dephasing factors below this are flushed to zero
UNDERFLOW_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Square matrix ``rho[n, m] = <n|rho|m>`` in the truncated Fock basis."""

    entries: np.ndarray

    def __post_init__(self):
        rho = np.array(self.entries, copy=True)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DomainError(f"density matrix must be square, got shape {rho.shape}")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @property
    def n_max(self) -> int:
        return self.entries.shape[0] - 1

    @property
    def trace(self) -> float:
        return math.fsum(np.real(np.diagonal(self.entries)))

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.entries)

    def hermiticity_error(self) -> float:
        rho = self.entries
        return float(np.max(np.abs(rho - rho.conj().T))) if rho.size else 0.0

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    def check(self, epsilon_tail: float = 1e-10) -> None:
        """Raise :class:`DomainError` unless Hermitian, near unit trace and PSD."""
        if self.hermiticity_error() > 1e-14:
            raise DomainError("density matrix is not Hermitian")
        if abs(1.0 - self.trace) > epsilon_tail:
            raise DomainError(f"trace {self.trace!r} deviates from 1 by more than {epsilon_tail}")
        if self.min_eigenvalue() < -1e-10:
            raise DomainError("density matrix has a negative eigenvalue")


@dataclass(frozen=True)
class NoiseParams:
    """Dimensionless phase-diffusion amplitude ``Delta = Gamma t``."""

    Delta: float

    def __post_init__(self):
        if not (math.isfinite(self.Delta) and self.Delta >= 0.0):
            raise DomainError(f"Delta must be finite and >= 0, got {self.Delta!r}")


def outer_product(psi: FockVector) -> DensityMatrix:
    c = psi.amplitudes
    return DensityMatrix(np.outer(c, c.conj()))


@lru_cache(maxsize=256)
def dephasing_bands(Delta: float, n_max: int) -> np.ndarray:
    """Factors ``exp(-Delta^2 d^2)`` for ``d = 0..n_max`` (read-only)."""
    d = np.arange(n_max + 1, dtype=float)
    f = np.exp(-(Delta * Delta) * d * d)
    f[f < UNDERFLOW_FLOOR] = 0.0
    f.setflags(write=False)
    return f


def _delta(noise) -> float:
    if isinstance(noise, NoiseParams):
        return noise.Delta
    return NoiseParams(float(noise)).Delta


def dephase(rho: DensityMatrix, noise) -> DensityMatrix:
    """Phase diffusion: ``rho[n, m] -> exp(-Delta^2 (n-m)^2) rho[n, m]``.

    ``noise`` is a :class:`NoiseParams` or a plain non-negative float.
    """
    delta = _delta(noise)
    if delta == 0.0:
        return rho
    f = dephasing_bands(delta, rho.n_max)
    return DensityMatrix(rho.entries * toeplitz(f))


def _band_index(n_max: int) -> np.ndarray:
    k = np.arange(n_max + 1)
    return k[:, None] - k[None, :]


def phase_shift(rho: DensityMatrix, phi: float) -> DensityMatrix:
    """``U rho U^dag`` with ``U = exp(-i phi a^dag a)``, i.e. band ``d`` gets ``exp(-i phi d)``."""
    phi = math.remainder(float(phi), 2.0 * math.pi)
    if phi == 0.0:
        return rho
    phases = np.exp(-1j * phi * _band_index(rho.n_max))
    return DensityMatrix(rho.entries * phases)


def dephased_probe(psi: FockVector, Delta: float) -> DensityMatrix:
    """Shortcut for ``dephase(outer_product(psi), Delta)``."""
    return dephase(outer_product(psi), Delta)
