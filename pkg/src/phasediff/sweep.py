"""Squeezing-fraction optimization, (N, Delta) sweeps and scaling-law checks."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import DomainError, FitError, PhaseDiffError
from .fock import DEFAULT_CUTOFF_LIMIT, DEFAULT_TAIL_TOL, ProbeSpec
from .qfi import qfi_of_probe

log = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
BETA_TOL = 1e-3
COARSE_POINTS = 11
FINE_POINTS = 101

# Delta^2 values per panel of the optimal-squeezing figure, keyed by N_max
FIG1_PANELS = {
    10: (4.5e-5, 4.5e-4, 4.5e-3, 4.5e-2),
    15: (2.0e-5, 2.0e-4, 2.0e-3, 2.0e-2),
    20: (1.125e-5, 1.125e-4, 1.125e-3, 1.125e-2),
    30: (5.0e-6, 5.0e-5, 5.0e-4, 5.0e-3),
}


def energy_grid(n_max_energy: float, steps: int = 10) -> list[float]:
    """Linear energy grid ``N_max/steps .. N_max``."""
    return [n_max_energy * (i + 1) / steps for i in range(steps)]


@dataclass(frozen=True)
class BetaOptimum:
    beta_opt: float
    H_opt: float
    n_max: int
    tail: float
    n_evaluations: int


@dataclass(frozen=True)
class SweepRecord:
    N: float
    Delta: float
    beta_opt: float
    H_opt: float
    xi: float
    gamma: float
    F_homodyne: float = float("nan")
    n_max: int = -1
    tail: float = float("nan")
    error: str = ""

    @classmethod
    def from_optimum(cls, N: float, Delta: float, opt: BetaOptimum) -> "SweepRecord":
        return cls(N=N, Delta=Delta, beta_opt=opt.beta_opt, H_opt=opt.H_opt,
                   xi=N * Delta, gamma=opt.H_opt * Delta / N if N > 0 else float("nan"),
                   n_max=opt.n_max, tail=opt.tail)

    @classmethod
    def failed(cls, N: float, Delta: float, message: str) -> "SweepRecord":
        nan = float("nan")
        return cls(N=N, Delta=Delta, beta_opt=nan, H_opt=nan, xi=N * Delta, gamma=nan, error=message)


@dataclass(frozen=True)
class FitResult:
    """``ln gamma = c - b ln xi - a ln^2 xi``."""

    a: float
    b: float
    c: float
    residual_rms: float
    n_points: int

    def gamma(self, xi):
        lx = np.log(xi)
        return np.exp(self.c - self.b * lx - self.a * lx * lx)


@dataclass(frozen=True)
class CrbBound:
    variance: float
    gamma_form: float


def golden_section_max(f, lo: float, hi: float, tol: float):
    """Maximize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x), n_evals)``."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    n = 2
    while b - a > tol:
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        else:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        n += 1
    return (c, fc, n) if fc > fd else (d, fd, n)


def _local_maxima(vals: np.ndarray) -> int:
    padded = np.concatenate(([-np.inf], vals, [-np.inf]))
    return int(np.sum((padded[1:-1] > padded[:-2]) & (padded[1:-1] >= padded[2:])))


def _best_index(vals) -> int:
    vals = np.asarray(vals)
    return int(np.flatnonzero(vals == vals.max())[-1])


@lru_cache(maxsize=4096)
def optimize_beta(N: float, Delta: float, tol: float = BETA_TOL,
                  epsilon_tail: float = DEFAULT_TAIL_TOL, orientation: str = "phase",
                  verify: bool = True, hard_limit: int = DEFAULT_CUTOFF_LIMIT) -> BetaOptimum:
    """Squeezing fraction maximizing the QFI at fixed energy and noise.

    An 11-point scan locates the maximum; if it shows more than one local
    maximum a 101-point scan replaces it.  Golden-section search then refines
    within the neighbouring grid cells, and the bracket endpoints compete
    with the refined point so a maximum on the boundary is returned exactly.
    Ties go to the larger beta.
    """
    if not N > 0:
        raise DomainError("N must be > 0")
    if Delta < 0:
        raise DomainError("Delta must be >= 0")

    def h(beta: float) -> float:
        spec = ProbeSpec(N, float(beta), Delta, epsilon_tail, orientation)
        return qfi_of_probe(spec, verify=False, hard_limit=hard_limit).H

    betas = np.linspace(0.0, 1.0, COARSE_POINTS)
    vals = np.array([h(b) for b in betas])
    n_evals = betas.size
    if _local_maxima(vals) > 1:
        log.info("multiple local maxima in H(beta) at N=%g Delta=%g; fine scan", N, Delta)
        betas = np.linspace(0.0, 1.0, FINE_POINTS)
        vals = np.array([h(b) for b in betas])
        n_evals += betas.size
    i = _best_index(vals)
    lo, hi = betas[max(i - 1, 0)], betas[min(i + 1, betas.size - 1)]
    x, fx, n = golden_section_max(h, lo, hi, tol)
    n_evals += n
    cands = [(x, fx)] + [(betas[j], vals[j]) for j in range(max(i - 1, 0), min(i + 2, betas.size))]
    cands.sort(key=lambda t: (t[1], t[0]))
    beta_opt = float(cands[-1][0])
    final = qfi_of_probe(ProbeSpec(N, beta_opt, Delta, epsilon_tail, orientation), verify=verify,
                         hard_limit=hard_limit)
    return BetaOptimum(beta_opt, final.H, final.n_max, final.tail, n_evals)


def _sweep_point(args) -> SweepRecord:
    N, Delta, tol, epsilon_tail, orientation, with_homodyne, hard_limit = args
    try:
        opt = optimize_beta(N, Delta, tol, epsilon_tail, orientation, hard_limit=hard_limit)
        rec = SweepRecord.from_optimum(N, Delta, opt)
        if with_homodyne:
            from .homodyne import best_homodyne_fisher
            spec = ProbeSpec(N, rec.beta_opt, Delta, epsilon_tail, orientation)
            rec = replace(rec, F_homodyne=best_homodyne_fisher(spec, hard_limit=hard_limit).F)
        return rec
    except PhaseDiffError as exc:
        return SweepRecord.failed(N, Delta, f"{type(exc).__name__}: {exc}")


def qfi_surface(N_grid, Delta_grid, tol: float = BETA_TOL, epsilon_tail: float = DEFAULT_TAIL_TOL,
                orientation: str = "phase", workers: int = 1,
                with_homodyne: bool = False,
                hard_limit: int = DEFAULT_CUTOFF_LIMIT) -> list[SweepRecord]:
    """Optimized QFI on every (N, Delta) pair, N-major order.

    Failures are recorded in the ``error`` field rather than raised.
    """
    N_grid, Delta_grid = list(N_grid), list(Delta_grid)
    if not N_grid or not Delta_grid:
        raise DomainError("N and Delta grids must be non-empty")
    jobs = [(float(N), float(D), tol, epsilon_tail, orientation, with_homodyne, int(hard_limit))
            for N in N_grid for D in Delta_grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, jobs))
    out = []
    for job in jobs:
        out.append(_sweep_point(job))
        log.info("N=%g Delta=%g done", job[0], job[1])
    return out


def _check_k(N: float, k: float) -> None:
    if not k > 0 or N / k < 1.0:
        raise DomainError(f"need k > 0 and N/k >= 1, got N={N}, k={k}")


def check_qfi_scaling(N: float, Delta: float, k: float, **kw) -> float:
    """Relative deviation ``|H(N, D) - k^2 H(N/k, k D)| / H(N, D)``."""
    _check_k(N, k)
    h = optimize_beta(N, Delta, **kw).H_opt
    hk = optimize_beta(N / k, k * Delta, **kw).H_opt
    return abs(h - k * k * hk) / h


def check_beta_scaling(N: float, Delta: float, k: float, **kw) -> float:
    """Absolute deviation ``|beta_opt(N, D) - beta_opt(N/k, k D)|``."""
    _check_k(N, k)
    return abs(optimize_beta(N, Delta, **kw).beta_opt - optimize_beta(N / k, k * Delta, **kw).beta_opt)


def fit_gamma(records) -> FitResult:
    """Least squares of ``ln gamma`` on ``{1, ln xi, ln^2 xi}``."""
    pts = [(r.xi, r.gamma) for r in records
           if math.isfinite(r.gamma) and r.gamma > 0 and math.isfinite(r.xi) and r.xi > 0]
    if len(pts) < 10:
        raise DomainError(f"need at least 10 records with gamma > 0, got {len(pts)}")
    lx = np.log([p[0] for p in pts])
    lg = np.log([p[1] for p in pts])
    design = np.column_stack([np.ones_like(lx), lx, lx * lx])
    coef, _, rank, _ = np.linalg.lstsq(design, lg, rcond=None)
    if rank < 3:
        raise FitError("design matrix is rank deficient (need at least three distinct xi)")
    resid = lg - design @ coef
    return FitResult(a=float(-coef[2]), b=float(-coef[1]), c=float(coef[0]),
                     residual_rms=float(np.sqrt(np.mean(resid * resid))), n_points=len(pts))


def crb_bound(record: SweepRecord, M: int = 1) -> CrbBound:
    """Quantum Cramer-Rao variance bound, directly and through gamma.

    A vanishing QFI gives an infinite bound.
    """
    if M < 1:
        raise DomainError("M must be >= 1")
    if not record.H_opt > 0:
        return CrbBound(math.inf, math.inf)
    direct = 1.0 / (M * record.H_opt)
    gamma_form = record.Delta / (record.gamma * record.N) / M if record.gamma > 0 else direct
    return CrbBound(direct, gamma_form)
