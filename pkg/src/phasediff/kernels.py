"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
reference kernels are used.  Set ``PHASEDIFF_PURE_PYTHON=1`` to force the
fallback (useful for benchmarking and for checking the two agree).
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

if os.environ.get("PHASEDIFF_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

displaced_squeezed_amplitudes = _impl.displaced_squeezed_amplitudes
hermite_functions = _impl.hermite_functions
qfi_pair_sum = _impl.qfi_pair_sum
harmonic_loglik = _impl.harmonic_loglik


def harmonic_table(rho: np.ndarray, psi: np.ndarray):
    """Split ``rho`` into real/imaginary parts and run the band contraction."""
    rho = np.asarray(rho)
    rho_im = rho.imag if np.iscomplexobj(rho) else np.zeros(rho.shape)
    return _impl.harmonic_table(np.ascontiguousarray(rho.real), np.ascontiguousarray(rho_im), psi)


__all__ = [
    "BACKEND",
    "displaced_squeezed_amplitudes",
    "hermite_functions",
    "harmonic_table",
    "qfi_pair_sum",
    "harmonic_loglik",
]
