"""Reference numpy implementations of the hot kernels.

These are the fallback when the compiled ``_kernels`` extension is not
available, and the oracle the compiled versions are tested against.  Each
function here has an identically named counterpart in ``_kernels.pyx``.
"""

from __future__ import annotations

import math

import numpy as np

# rescale threshold for scaled recurrences; leaves ~150 decades of headroom
_BIG = 1e150
_LOG_BIG = math.log(_BIG)


def displaced_squeezed_amplitudes(alpha: float, r: float, n_max: int) -> np.ndarray:
    """Fock amplitudes <n|D(alpha) S(r)|0> for real alpha, r and n = 0..n_max.

    Uses the three-term recurrence obtained from the annihilation condition
    ``[(a - alpha) cosh r + (a^dag - alpha) sinh r] |psi> = 0``::

        cosh(r) sqrt(n+1) c[n+1] = alpha e^r c[n] - sinh(r) sqrt(n) c[n-1]

    with a running log-scale so that neither large displacements nor long
    tails overflow or flush to zero early.
    """
    ch, sh = math.cosh(r), math.sinh(r)
    drive = alpha * math.exp(r)
    log_c0 = -0.5 * alpha * alpha * (1.0 + math.tanh(r)) - 0.5 * math.log(ch)

    out = np.zeros(n_max + 1)
    prev, cur = 0.0, 1.0
    log_scale = log_c0
    out[0] = math.exp(log_c0)
    for n in range(n_max):
        nxt = (drive * cur - sh * math.sqrt(n) * prev) / (ch * math.sqrt(n + 1))
        prev, cur = cur, nxt
        if abs(cur) > _BIG:
            prev /= _BIG
            cur /= _BIG
            log_scale += _LOG_BIG
        if cur != 0.0:
            out[n + 1] = math.copysign(math.exp(math.log(abs(cur)) + log_scale), cur)
    return out


def hermite_functions(x: np.ndarray, n_max: int) -> np.ndarray:
    """Oscillator eigenfunctions psi_n(x) for the quadrature X = (a + a^dag)/2.

    Returns an array of shape ``(n_max + 1, len(x))``.  With this scaling
    ``psi_0(x) = (2/pi)^(1/4) exp(-x^2)`` and the recurrence is::

        psi[n+1] = (2 x psi[n] - sqrt(n) psi[n-1]) / sqrt(n+1)

    Each point carries its own log-scale so the Gaussian prefactor never
    underflows before the polynomial growth catches up.
    """
    x = np.asarray(x, dtype=float)
    table = np.empty((n_max + 1, x.size))
    log_scale = 0.25 * math.log(2.0 / math.pi) - x * x
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    table[0] = np.exp(log_scale)
    for n in range(n_max):
        nxt = (2.0 * x * cur - math.sqrt(n) * prev) / math.sqrt(n + 1)
        prev, cur = cur, nxt
        big = np.abs(cur) > _BIG
        if big.any():
            prev[big] /= _BIG
            cur[big] /= _BIG
            log_scale[big] += _LOG_BIG
        table[n + 1] = cur * np.exp(log_scale)
    return table


def harmonic_table(rho_re: np.ndarray, rho_im: np.ndarray, psi: np.ndarray):
    """Band contractions ``C[d](x) = sum_m rho[m+d, m] psi[m+d](x) psi[m](x)``.

    Returns ``(C_re, C_im)`` each of shape ``(n_max + 1, K)``.  A homodyne
    density at combined angle ``v`` is then
    ``C[0] + 2 sum_{d>0} Re(exp(-i d v) C[d])``.
    """
    dim, k = psi.shape
    c_re = np.empty((dim, k))
    c_im = np.empty((dim, k))
    for d in range(dim):
        prod = psi[d:] * psi[: dim - d]
        c_re[d] = np.diagonal(rho_re, -d) @ prod
        c_im[d] = np.diagonal(rho_im, -d) @ prod
    return c_re, c_im


def qfi_pair_sum(lam: np.ndarray, g2: np.ndarray, delta_deg: float):
    """``2 sum_{n != m} (l_n - l_m)^2 / (l_n + l_m) * g2[n, m]``.

    Ordered pairs with ``l_n + l_m <= delta_deg`` are skipped.  Terms are
    summed in ascending order with an exactly rounded sum.  Returns
    ``(H, n_used, n_skipped)`` where the counts are over ordered pairs.
    """
    lam = np.asarray(lam, dtype=float)
    iu, ju = np.triu_indices(lam.size, k=1)
    s = lam[iu] + lam[ju]
    keep = s > delta_deg
    diff = lam[iu][keep] - lam[ju][keep]
    terms = diff * diff / s[keep] * g2[iu[keep], ju[keep]]
    terms.sort()
    h = 4.0 * math.fsum(terms)
    n_used = 2 * int(keep.sum())
    return h, n_used, 2 * iu.size - n_used


def harmonic_loglik(counts: np.ndarray, b0: np.ndarray, b_re: np.ndarray,
                    b_im: np.ndarray, phi: float) -> float:
    """Multinomial log-likelihood ``sum_j counts[j] log P_j(phi)``.

    ``P_j(phi) = b0[j] + 2 sum_{d>=1} (cos(d phi) b_re[d-1, j] + sin(d phi) b_im[d-1, j])``.
    Returns ``-inf`` when any occupied cell has non-positive probability.
    """
    d = np.arange(1, b_re.shape[0] + 1)
    p = b0 + 2.0 * (np.cos(d * phi) @ b_re + np.sin(d * phi) @ b_im)
    if np.any(p <= 0.0):
        return -math.inf
    return float(counts @ np.log(p))
