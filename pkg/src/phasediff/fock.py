"""Truncated Fock-space representation of pure single-mode Gaussian probes.

A probe is ``D(alpha) S(r) |0>`` with ``S(r) = exp{(r/2)(a^2 - a^dag^2)}`` and
``D(alpha) = exp{alpha (a^dag - a)}``, both real.  Probes are usually
specified by their energy ``N = sinh^2 r + alpha^2`` and squeezing fraction
``beta = sinh^2 r / N``.

Under the operator convention above a positive ``r`` squeezes the same
quadrature the displacement points along (amplitude squeezing); a negative
``r`` squeezes the orthogonal one (phase squeezing).  The sign of ``r`` is
not fixed by ``(N, beta)``, so :func:`params_from_energy` takes an
``orientation``; ``"phase"`` is the default because it is the orientation
that maximizes the phase sensitivity of displaced squeezed probes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import CutoffLimitError, DomainError, TruncationError

DEFAULT_TAIL_TOL = 1e-10
DEFAULT_CUTOFF_LIMIT = 4096

ORIENTATIONS = ("phase", "amplitude")


@dataclass(frozen=True)
class GaussianParams:
    """Real displacement ``alpha`` and squeezing parameter ``r``."""

    alpha: float
    r: float

    def __post_init__(self):
        for name in ("alpha", "r"):
            value = getattr(self, name)
            if isinstance(value, complex) or not math.isfinite(value):
                raise DomainError(f"{name} must be a finite real number, got {value!r}")

    @property
    def mean_photon(self) -> float:
        return math.sinh(self.r) ** 2 + self.alpha**2


@dataclass(frozen=True)
class ProbeSpec:
    """Probe energy ``N``, squeezing fraction ``beta`` and phase-noise ``Delta``."""

    N: float
    beta: float
    Delta: float = 0.0
    epsilon_tail: float = DEFAULT_TAIL_TOL
    orientation: str = "phase"

    def __post_init__(self):
        _check_energy(self.N, self.beta)
        if not (math.isfinite(self.Delta) and self.Delta >= 0.0):
            raise DomainError(f"Delta must be finite and >= 0, got {self.Delta!r}")
        if not 0.0 < self.epsilon_tail < 1.0:
            raise DomainError(f"epsilon_tail must lie in (0, 1), got {self.epsilon_tail!r}")
        if self.orientation not in ORIENTATIONS:
            raise DomainError(f"orientation must be one of {ORIENTATIONS}")

    @property
    def params(self) -> GaussianParams:
        return params_from_energy(self.N, self.beta, self.orientation)


@dataclass(frozen=True, eq=False)
class FockVector:
    """Amplitudes ``c_n = <n|psi>`` for ``n = 0..n_max``.

    No renormalization is applied after truncation; ``tail`` is the
    probability mass missing beyond ``n_max``.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, copy=True)
        if amps.ndim != 1 or amps.size == 0:
            raise DomainError("amplitudes must be a non-empty 1-d array")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_max(self) -> int:
        return self.amplitudes.size - 1

    @property
    def norm2(self) -> float:
        return math.fsum(np.abs(self.amplitudes) ** 2)

    @property
    def tail(self) -> float:
        return max(0.0, 1.0 - self.norm2)

    def __len__(self) -> int:
        return self.amplitudes.size


def _check_energy(N: float, beta: float) -> None:
    if not (math.isfinite(N) and N >= 0.0):
        raise DomainError(f"N must be finite and >= 0, got {N!r}")
    if not (math.isfinite(beta) and 0.0 <= beta <= 1.0):
        raise DomainError(f"beta must lie in [0, 1], got {beta!r}")


def params_from_energy(N: float, beta: float, orientation: str = "phase") -> GaussianParams:
    """Invert ``N = sinh^2 r + alpha^2`` and ``beta = sinh^2 r / N``.

    ``|r| = asinh(sqrt(beta N))`` and ``alpha = sqrt((1 - beta) N)``; the sign
    of ``r`` follows ``orientation`` (``"amplitude"`` gives ``r >= 0``).
    """
    _check_energy(N, beta)
    if orientation not in ORIENTATIONS:
        raise DomainError(f"orientation must be one of {ORIENTATIONS}")
    r = math.asinh(math.sqrt(beta * N))
    if orientation == "phase":
        r = -r
    return GaussianParams(alpha=math.sqrt((1.0 - beta) * N), r=r)


def _amplitudes(params: GaussianParams, n_max: int) -> np.ndarray:
    return kernels.displaced_squeezed_amplitudes(float(params.alpha), float(params.r), int(n_max))


def build_probe(params: GaussianParams, n_max: int,
                epsilon_tail: float = DEFAULT_TAIL_TOL) -> FockVector:
    """Fock amplitudes of ``D(alpha) S(r)|0>`` truncated at ``n_max``.

    Raises :class:`TruncationError` if the missing tail exceeds ``epsilon_tail``.
    """
    if int(n_max) != n_max or n_max < 0:
        raise DomainError(f"n_max must be a non-negative integer, got {n_max!r}")
    psi = FockVector(_amplitudes(params, int(n_max)))
    tail = psi.tail
    if tail > epsilon_tail:
        raise TruncationError(tail, epsilon_tail, int(n_max))
    return psi


def mean_photon(psi: FockVector) -> float:
    p = np.abs(psi.amplitudes) ** 2
    return math.fsum(np.arange(p.size) * p)


def _tail_profile(params: GaussianParams, hard_limit: int, start: int, epsilon_tail: float) -> np.ndarray:
    """``tail[n]`` = probability beyond Fock level n, for a buffer long enough to trust it."""
    n = start
    while True:
        amps = _amplitudes(params, n)
        p = amps * amps
        missing = max(0.0, 1.0 - math.fsum(p))
        # the buffer's own unresolved tail must sit well below the tolerance
        if missing < 1e-3 * epsilon_tail or n >= hard_limit:
            break
        n = min(2 * n, hard_limit)
    suffix = np.cumsum(p[::-1])[::-1]
    tail = np.empty_like(p)
    tail[:-1] = suffix[1:]
    tail[-1] = 0.0
    return tail + missing


def probe_cutoff(params: GaussianParams, epsilon_tail: float = DEFAULT_TAIL_TOL,
                 hard_limit: int = DEFAULT_CUTOFF_LIMIT) -> int:
    """Smallest ``n_max`` whose tail for this particular probe is below ``epsilon_tail``."""
    N = params.mean_photon
    start = min(int(math.ceil(N + 10.0 * math.sqrt(N + 1.0) + 20.0)), hard_limit)
    tail = _tail_profile(params, hard_limit, start, epsilon_tail)
    # margin absorbs rounding in the 1 - sum|c|^2 check done by build_probe
    below = np.nonzero(tail < epsilon_tail - 1e-15)[0]
    if below.size == 0:
        raise CutoffLimitError(
            f"probe with N={N:.6g} needs a cutoff above the hard limit {hard_limit}"
        )
    return int(below[0])


# fractions probed when one cutoff must serve every beta at a given energy
_CUTOFF_BETAS = (0.0, 0.25, 0.5, 0.75, 1.0)


@lru_cache(maxsize=4096)
def choose_cutoff(N: float, Delta: float = 0.0, epsilon_tail: float = DEFAULT_TAIL_TOL,
                  hard_limit: int = DEFAULT_CUTOFF_LIMIT, orientation: str = "phase") -> int:
    """Cutoff for every probe of energy ``N`` at noise ``Delta``.

    The same cutoff is shared by all squeezing fractions so the QFI is a
    smooth function of ``beta`` during optimization.  Dephasing leaves the
    photon-number distribution unchanged, so ``Delta`` does not move the
    cutoff; it stays in the signature because cutoffs are keyed per grid point.
    """
    _check_energy(N, 0.0)
    if Delta < 0:
        raise DomainError("Delta must be >= 0")
    return max(
        probe_cutoff(params_from_energy(N, b, orientation), epsilon_tail, hard_limit)
        for b in _CUTOFF_BETAS
    )


def probe_for(spec: ProbeSpec, n_max: int | None = None, hard_limit: int = DEFAULT_CUTOFF_LIMIT) -> FockVector:
    """Build the probe described by ``spec`` at its default cutoff (or ``n_max``)."""
    if n_max is None:
        n_max = choose_cutoff(spec.N, spec.Delta, spec.epsilon_tail, hard_limit, spec.orientation)
    params = spec.params
    try:
        return build_probe(params, n_max, spec.epsilon_tail)
    except TruncationError:
        # the shared cutoff missed an intermediate beta; fall back to this probe's own
        own = probe_cutoff(params, spec.epsilon_tail, hard_limit)
        return build_probe(params, max(own, n_max), spec.epsilon_tail)


def annihilation(n_max: int) -> np.ndarray:
    """Truncated lowering operator ``a`` as a dense matrix."""
    return np.diag(np.sqrt(np.arange(1.0, n_max + 1.0)), 1)
