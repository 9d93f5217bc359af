"""Quantum Fisher information of phase-shifted, dephased probes.

For a unitary family ``rho_phi = U_phi rho_0 U_phi^dag`` generated by the
number operator, the QFI is independent of ``phi`` and follows from the
spectrum of ``rho_0``::

    H = 2 sum_{n != m} (l_n - l_m)^2 / (l_n + l_m) |<l_n| a^dag a |l_m>|^2

with ``<l_n| a^dag a |l_m> = sum_k k r_nk r_mk`` in the Fock basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh

from . import kernels
from .channel import DensityMatrix, dephased_probe
from .errors import ConventionError, CutoffLimitError, PositivityError
from .fock import DEFAULT_CUTOFF_LIMIT, FockVector, ProbeSpec, choose_cutoff, probe_for

# pairs with l_n + l_m below this are numerical noise and are skipped
DEGENERACY_THRESHOLD = 1e-12
EIGENVALUE_FLOOR = -1e-10
IMAG_TOL = 1e-13
CONVERGENCE_RTOL = 1e-3


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigenvalues (descending) and eigenvector rows ``r[n, k] = <k|l_n>``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n_max(self) -> int:
        return self.eigenvalues.size - 1


@dataclass(frozen=True)
class QfiResult:
    H: float
    n_terms_used: int
    degeneracy_skipped: int
    n_max: int = -1
    tail: float = float("nan")


def eigendecompose(rho: DensityMatrix, hermitian: bool = False) -> SpectralData:
    """Full spectrum of ``rho``.

    The default path expects a real symmetric matrix (unshifted probes with
    real parameters): imaginary parts up to 1e-13 are stripped, anything
    larger raises :class:`ConventionError`.  ``hermitian=True`` selects the
    complex Hermitian solver for phase-shifted inputs.
    """
    m = rho.entries
    if hermitian:
        m = np.asarray(m, dtype=complex)
    elif np.iscomplexobj(m):
        if m.size and np.max(np.abs(m.imag)) > IMAG_TOL:
            raise ConventionError(
                "density matrix has imaginary entries; diagonalize the unshifted "
                "state or pass hermitian=True"
            )
        m = np.ascontiguousarray(m.real)
    lam, vecs = eigh(m, check_finite=False)
    if lam[0] < EIGENVALUE_FLOOR:
        raise PositivityError(f"eigenvalue {lam[0]:.3e} below the floor {EIGENVALUE_FLOOR}")
    lam = np.clip(lam[::-1], 0.0, None)
    rows = vecs[:, ::-1].T.copy()
    lam.setflags(write=False)
    rows.setflags(write=False)
    return SpectralData(lam, rows)


def qfi_phase(spec: SpectralData) -> QfiResult:
    """QFI for the phase-shift family generated by ``a^dag a``."""
    lam = spec.eigenvalues
    r = spec.eigenvectors
    k = np.arange(lam.size, dtype=float)
    g = (r * k) @ r.conj().T
    g2 = np.ascontiguousarray(np.abs(g) ** 2) if np.iscomplexobj(g) else np.ascontiguousarray(g * g)
    h, used, skipped = kernels.qfi_pair_sum(np.ascontiguousarray(lam), g2, DEGENERACY_THRESHOLD)
    return QfiResult(H=max(h, 0.0), n_terms_used=used, degeneracy_skipped=skipped, n_max=spec.n_max)


def pure_qfi(psi: FockVector) -> float:
    """``4 (<n^2> - <n>^2)`` for a pure state."""
    p = np.abs(psi.amplitudes) ** 2
    norm = math.fsum(p)
    k = np.arange(p.size, dtype=float)
    mean = math.fsum(k * p) / norm
    second = math.fsum((k - mean) ** 2 * p) / norm
    return 4.0 * second


def qfi_at_cutoff(spec: ProbeSpec, n_max: int) -> QfiResult:
    psi = probe_for(spec, n_max)
    res = qfi_phase(eigendecompose(dephased_probe(psi, spec.Delta)))
    return QfiResult(res.H, res.n_terms_used, res.degeneracy_skipped, psi.n_max, psi.tail)


@lru_cache(maxsize=8192)
def _qfi_cached(spec: ProbeSpec, verify: bool, hard_limit: int) -> QfiResult:
    n_max = choose_cutoff(spec.N, spec.Delta, spec.epsilon_tail, hard_limit, spec.orientation)
    res = qfi_at_cutoff(spec, n_max)
    if not verify:
        return res
    while True:
        doubled = 2 * res.n_max
        if doubled > 2 * hard_limit:
            raise CutoffLimitError(f"QFI not converged below cutoff limit {hard_limit}")
        check = qfi_at_cutoff(spec, doubled)
        scale = max(abs(check.H), 1e-300)
        if abs(check.H - res.H) <= CONVERGENCE_RTOL * scale or check.H < 1e-12:
            return res
        res = check


def qfi_of_probe(spec: ProbeSpec, verify: bool = True,
                 hard_limit: int = DEFAULT_CUTOFF_LIMIT) -> QfiResult:
    """Full pipeline: probe -> density matrix -> dephasing -> spectrum -> QFI.

    With ``verify`` the cutoff is doubled once and the result accepted only if
    H moves by less than 0.1%; otherwise the doubled cutoff becomes the new
    baseline.  Results are memoized per ``spec``.
    """
    return _qfi_cached(spec, bool(verify), int(hard_limit))
