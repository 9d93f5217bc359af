"""Homodyne detection of the dephased probe.

Quadratures follow ``X_theta = (a e^{-i theta} + a^dag e^{i theta}) / 2`` so the
vacuum variance is 1/4.  Measuring ``X_theta`` on ``rho`` is the same as
measuring ``X`` on ``rho`` with band ``d`` multiplied by ``exp(-i theta d)``;
a phase shift ``phi`` contributes the same band phase, so outcome statistics
depend on ``phi + theta`` only.

Densities are evaluated through the band contractions
``C[d](x) = sum_m rho[m+d, m] psi_{m+d}(x) psi_m(x)``::

    p(x | v)      = C[0] + 2 sum_{d>0} Re(exp(-i d v) C[d])
    dp/dphi (x|v) = 2 sum_{d>0} d Re(-i exp(-i d v) C[d])

which is the exact commutator derivative ``-i [a^dag a, rho]``; one table
serves every angle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import minimize_scalar

from . import kernels
from .channel import DensityMatrix, dephased_probe
from .errors import DomainError, EstimationError, GridCoverageError, NoCrossingError, RangeError
from .fock import DEFAULT_CUTOFF_LIMIT, ProbeSpec, params_from_energy, probe_for

log = logging.getLogger(__name__)

PANEL_WIDTH = 0.25
PANEL_NODES = 20
COVERAGE_TOL = 1e-6
PROB_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Integration nodes and positive weights on ``[-L, L]``."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.shape != w.shape or pts.ndim != 1:
            raise DomainError("points and weights must be 1-d arrays of equal length")
        if np.any(np.diff(pts) <= 0) or np.any(w <= 0):
            raise DomainError("grid points must increase strictly and weights be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ values)


@dataclass(frozen=True)
class FisherResult:
    F: float
    phi0: float
    theta: float


@dataclass(frozen=True, eq=False)
class VarianceMap:
    """``values[i, j]`` is the quadrature variance at ``betas[i]``, ``thetas[j]``."""

    N: float
    Delta: float
    betas: np.ndarray
    thetas: np.ndarray
    values: np.ndarray

    @property
    def argmin(self) -> tuple[float, float]:
        i, j = np.unravel_index(np.argmin(self.values), self.values.shape)
        return float(self.betas[i]), float(self.thetas[j])


@dataclass(frozen=True)
class ThresholdResult:
    Delta_star: float
    lower: float
    upper: float


@dataclass(frozen=True, eq=False)
class MonteCarloResult:
    phi_hat: float
    variance: float
    estimates: np.ndarray = field(repr=False)
    fisher: float
    crb: float
    M: int
    n_batches: int


def grid_half_width(N: float) -> float:
    """Half-width L covering displaced and anti-squeezed probes of energy N."""
    anti_squeezed_std = 0.5 * (math.sqrt(N) + math.sqrt(N + 1.0))
    return max(6.0, 4.0 * math.sqrt(N) + 6.0, 6.5 * anti_squeezed_std)


def panel_grid(half_width: float, panel_width: float = PANEL_WIDTH,
               nodes: int = PANEL_NODES) -> QuadratureGrid:
    n_panels = max(1, int(math.ceil(2.0 * half_width / panel_width)))
    edges = np.linspace(-half_width, half_width, n_panels + 1)
    t, w = leggauss(nodes)
    h = np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    pts = (mid[:, None] + 0.5 * h[:, None] * t[None, :]).ravel()
    wts = (0.5 * h[:, None] * w[None, :]).ravel()
    return QuadratureGrid(pts, wts)


@lru_cache(maxsize=64)
def make_grid(N: float, panel_width: float = PANEL_WIDTH, nodes: int = PANEL_NODES) -> QuadratureGrid:
    """Gauss-Legendre panels on ``[-L, L]`` with L from :func:`grid_half_width`."""
    return panel_grid(grid_half_width(N), panel_width, nodes)


def oscillator_wavefunctions(grid: QuadratureGrid, n_max: int) -> np.ndarray:
    """Table ``psi[n, k] = <x_k|n>`` for ``n = 0..n_max``; vacuum variance 1/4."""
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    table = kernels.hermite_functions(grid.points, int(n_max))
    if not np.all(np.isfinite(table)):
        raise RangeError("oscillator recurrence overflowed")
    return table


class HomodyneModel:
    """Outcome density of ``rho`` for every combined angle ``phi + theta``."""

    def __init__(self, rho: DensityMatrix, grid: QuadratureGrid):
        self.grid = grid
        self.trace = rho.trace
        psi = oscillator_wavefunctions(grid, rho.n_max)
        c_re, c_im = kernels.harmonic_table(rho.entries, psi)
        self.c0 = c_re[0]
        self.c_re = c_re[1:]
        self.c_im = c_im[1:]
        self.orders = np.arange(1, rho.n_max + 1, dtype=float)

    def raw_pdf(self, angle: float) -> np.ndarray:
        ca, sa = np.cos(self.orders * angle), np.sin(self.orders * angle)
        return self.c0 + 2.0 * (ca @ self.c_re + sa @ self.c_im)

    def pdf(self, angle: float) -> np.ndarray:
        return np.clip(self.raw_pdf(angle), 0.0, None)

    def dpdf(self, angle: float) -> np.ndarray:
        ca, sa = np.cos(self.orders * angle), np.sin(self.orders * angle)
        return 2.0 * ((self.orders * ca) @ self.c_im - (self.orders * sa) @ self.c_re)

    def fisher(self, angle: float) -> float:
        p = self.pdf(angle)
        dp = self.dpdf(angle)
        keep = p > PROB_FLOOR * p.max()
        return float(self.grid.weights[keep] @ (dp[keep] ** 2 / p[keep]))

    def coverage(self, angle: float) -> float:
        return self.grid.integrate(self.pdf(angle))

    def check_coverage(self, angle: float) -> float:
        total = self.coverage(angle)
        if abs(total - self.trace) > COVERAGE_TOL:
            raise GridCoverageError(
                f"grid captures {total:.12f} of probability {self.trace:.12f}"
            )
        return total

    def best_angle(self, n_coarse: int = 256) -> tuple[float, float]:
        """Angle in [0, pi) maximizing the Fisher information, and the maximum.

        The density at ``v + pi`` is the mirror image of the one at ``v`` so
        the Fisher information has period pi.
        """
        angles = np.linspace(0.0, math.pi, n_coarse, endpoint=False)
        values = np.array([self.fisher(v) for v in angles])
        i = int(np.argmax(values))
        step = math.pi / n_coarse
        res = minimize_scalar(lambda v: -self.fisher(v),
                              bounds=(angles[i] - step, angles[i] + step),
                              method="bounded", options={"xatol": 1e-10})
        if -res.fun > values[i]:
            return float(res.x) % math.pi, float(-res.fun)
        return float(angles[i]), float(values[i])


def homodyne_pdf(rho: DensityMatrix, theta: float, grid: QuadratureGrid) -> np.ndarray:
    """``p(x_k) = Tr[|x_k><x_k|_theta rho]`` on the grid nodes."""
    model = HomodyneModel(rho, grid)
    model.check_coverage(theta)
    return model.pdf(theta)


def probe_model(spec: ProbeSpec, grid: QuadratureGrid | None = None,
                hard_limit: int = DEFAULT_CUTOFF_LIMIT) -> HomodyneModel:
    """Homodyne model of the dephased (unshifted) probe described by ``spec``."""
    rho = dephased_probe(probe_for(spec, hard_limit=hard_limit), spec.Delta)
    model = HomodyneModel(rho, grid if grid is not None else make_grid(spec.N))
    model.check_coverage(0.0)
    return model


def homodyne_fisher(spec: ProbeSpec, phi0: float, theta: float = 0.0,
                    grid: QuadratureGrid | None = None,
                    hard_limit: int = DEFAULT_CUTOFF_LIMIT) -> FisherResult:
    """Fisher information of an X_theta measurement about the phase at ``phi0``."""
    model = probe_model(spec, grid, hard_limit)
    return FisherResult(F=model.fisher(phi0 + theta), phi0=phi0, theta=theta)


def best_homodyne_fisher(spec: ProbeSpec, theta: float = 0.0,
                         grid: QuadratureGrid | None = None,
                         hard_limit: int = DEFAULT_CUTOFF_LIMIT) -> FisherResult:
    """Homodyne Fisher information maximized over the operating phase ``phi0``."""
    model = probe_model(spec, grid, hard_limit)
    angle, f = model.best_angle()
    phi0 = (angle - theta) % math.pi
    return FisherResult(F=f, phi0=phi0, theta=theta)


# --- quadrature moments -----------------------------------------------------

def _ladder_moments(rho: np.ndarray):
    """``(tr, <a>, <a^2>, <a^dag a>)`` from the diagonal and first two lower bands."""
    k = np.arange(rho.shape[0], dtype=float)
    tr = float(np.real(np.trace(rho)))
    a1 = np.diagonal(rho, -1) @ np.sqrt(k[1:])
    a2 = np.diagonal(rho, -2) @ np.sqrt(k[1:-1] * k[2:])
    n = float(np.real(np.diagonal(rho) @ k))
    return tr, complex(a1), complex(a2), n


def _variance_from_moments(tr, a1, a2, n, theta):
    theta = np.asarray(theta, dtype=float)
    mean = np.real(a1 * np.exp(-1j * theta)) / tr
    second = (2.0 * np.real(a2 * np.exp(-2j * theta)) + 2.0 * n + tr) / (4.0 * tr)
    return second - mean * mean


def quadrature_variance(rho: DensityMatrix, theta: float) -> float:
    """``<X_theta^2> - <X_theta>^2`` from ladder-operator matrix elements."""
    return float(_variance_from_moments(*_ladder_moments(rho.entries), theta))


@lru_cache(maxsize=4096)
def _pure_moments(N: float, beta: float, epsilon_tail: float, orientation: str, hard_limit: int):
    spec = ProbeSpec(N, beta, 0.0, epsilon_tail, orientation)
    c = probe_for(spec, hard_limit=hard_limit).amplitudes
    k = np.arange(c.size, dtype=float)
    tr = float(c @ c)
    a1 = float(c[:-1] * c[1:] @ np.sqrt(k[1:]))
    a2 = float(c[:-2] * c[2:] @ np.sqrt(k[1:-1] * k[2:]))
    n = float(k @ (c * c))
    return tr, a1, a2, n


def dephased_variances(N: float, Delta: float, beta: float, thetas,
                       epsilon_tail: float = 1e-10, orientation: str = "phase",
                       hard_limit: int = DEFAULT_CUTOFF_LIMIT) -> np.ndarray:
    """Quadrature variances of the dephased probe for each angle.

    Dephasing scales band 1 by ``exp(-Delta^2)`` and band 2 by
    ``exp(-4 Delta^2)``; the diagonal is untouched.
    """
    tr, a1, a2, n = _pure_moments(float(N), float(beta), epsilon_tail, orientation, int(hard_limit))
    d2 = Delta * Delta
    return _variance_from_moments(tr, a1 * math.exp(-d2), a2 * math.exp(-4.0 * d2), n, thetas)


DEFAULT_BETAS = np.linspace(0.0, 1.0, 21)
DEFAULT_THETAS = np.linspace(0.0, math.pi, 72, endpoint=False)


def variance_map(N: float, Delta: float, beta_grid=None, theta_grid=None,
                 epsilon_tail: float = 1e-10, orientation: str = "phase",
                 hard_limit: int = DEFAULT_CUTOFF_LIMIT) -> VarianceMap:
    """Quadrature variance over a (beta, theta) grid at fixed energy and noise."""
    betas = np.asarray(DEFAULT_BETAS if beta_grid is None else beta_grid, dtype=float)
    thetas = np.asarray(DEFAULT_THETAS if theta_grid is None else theta_grid, dtype=float)
    if betas.size == 0 or thetas.size == 0:
        raise DomainError("beta and theta grids must be non-empty")
    values = np.array([dephased_variances(N, Delta, b, thetas, epsilon_tail, orientation, hard_limit)
                       for b in betas])
    return VarianceMap(N, Delta, betas, thetas, values)


def squeezed_regime(N: float, Delta: float, beta_grid=None, theta_grid=None, **kw) -> bool:
    """True when the variance minimum sits at the squeezed-vacuum end (beta >= 1/2)."""
    return variance_map(N, Delta, beta_grid, theta_grid, **kw).argmin[0] >= 0.5


def noise_threshold(N: float, interval=(0.01, 1.5), tol: float = 1e-3,
                    beta_grid=None, theta_grid=None, **kw) -> ThresholdResult:
    """Bisect the noise level where the minimum-variance probe jumps regime."""
    lo, hi = map(float, interval)
    if not lo < hi:
        raise DomainError("interval must be increasing")
    r_lo = squeezed_regime(N, lo, beta_grid, theta_grid, **kw)
    r_hi = squeezed_regime(N, hi, beta_grid, theta_grid, **kw)
    if r_lo == r_hi:
        raise NoCrossingError(f"same regime at Delta={lo} and Delta={hi} for N={N}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if squeezed_regime(N, mid, beta_grid, theta_grid, **kw) == r_lo:
            lo = mid
        else:
            hi = mid
    return ThresholdResult(0.5 * (lo + hi), lo, hi)


# --- Monte Carlo estimation -----------------------------------------------------

CELL_WIDTH = 1.0 / 32.0
CELL_NODES = 6


class CellModel:
    """Homodyne outcomes binned into uniform cells of width ``CELL_WIDTH``.

    Samples are drawn by inverting the piecewise-linear CDF through the cell
    probabilities, so the cell index is a sufficient statistic and the cell
    likelihood below is the exact likelihood of the sampling model.
    """

    def __init__(self, rho: DensityMatrix, half_width: float, cell_width: float = CELL_WIDTH):
        n_cells = int(math.ceil(2.0 * half_width / cell_width))
        self.edges = np.linspace(-half_width, half_width, n_cells + 1)
        grid = panel_grid(half_width, (2.0 * half_width) / n_cells, CELL_NODES)
        psi = oscillator_wavefunctions(grid, rho.n_max)
        c_re, c_im = kernels.harmonic_table(rho.entries, psi)
        w = grid.weights.reshape(n_cells, CELL_NODES)
        b_re = (c_re.reshape(-1, n_cells, CELL_NODES) * w).sum(axis=2)
        b_im = (c_im.reshape(-1, n_cells, CELL_NODES) * w).sum(axis=2)
        self.b0 = np.ascontiguousarray(b_re[0])
        self.b_re = np.ascontiguousarray(b_re[1:])
        self.b_im = np.ascontiguousarray(b_im[1:])
        self.orders = np.arange(1, rho.n_max + 1, dtype=float)

    def probabilities(self, angle: float) -> np.ndarray:
        ca, sa = np.cos(self.orders * angle), np.sin(self.orders * angle)
        return np.clip(self.b0 + 2.0 * (ca @ self.b_re + sa @ self.b_im), 0.0, None)

    def fisher(self, angle: float) -> float:
        p = self.probabilities(angle)
        ca, sa = np.cos(self.orders * angle), np.sin(self.orders * angle)
        dp = 2.0 * ((self.orders * ca) @ self.b_im - (self.orders * sa) @ self.b_re)
        keep = p > PROB_FLOOR * p.max()
        return float(np.sum(dp[keep] ** 2 / p[keep]))

    def sample(self, angle: float, M: int, rng: np.random.Generator):
        """Inverse-CDF draws; returns ``(x, cell_index)``."""
        p = self.probabilities(angle)
        cdf = np.cumsum(p)
        cdf /= cdf[-1]
        u = rng.random(M)
        j = np.minimum(np.searchsorted(cdf, u, side="right"), p.size - 1)
        lower = np.where(j > 0, cdf[j - 1], 0.0)
        frac = (u - lower) / np.maximum(cdf[j] - lower, 1e-300)
        x = self.edges[j] + frac * (self.edges[j + 1] - self.edges[j])
        return x, j


def ml_phase(model: CellModel, cells: np.ndarray, theta: float, lo: float, hi: float,
             n_coarse: int = 33) -> float:
    """Maximum-likelihood phase on ``[lo, hi]``: coarse scan then bounded Brent."""
    idx, counts = np.unique(cells, return_counts=True)
    idx = np.ascontiguousarray(idx)
    b0 = model.b0[idx]
    b_re = np.ascontiguousarray(model.b_re[:, idx])
    b_im = np.ascontiguousarray(model.b_im[:, idx])
    counts = counts.astype(float)

    def nll(phi):
        return -kernels.harmonic_loglik(counts, b0, b_re, b_im, phi + theta)

    grid = np.linspace(lo, hi, n_coarse)
    vals = np.array([nll(p) for p in grid])
    i = int(np.argmin(vals))
    step = grid[1] - grid[0]
    a, b = max(lo, grid[i] - step), min(hi, grid[i] + step)
    res = minimize_scalar(nll, bounds=(a, b), method="bounded", options={"xatol": 1e-9})
    return float(res.x) if res.fun <= vals[i] else float(grid[i])


def sample_and_estimate(spec: ProbeSpec, phi_true: float, theta: float = 0.0, M: int = 10_000,
                        seed: int = 0, n_batches: int = 200, window: float = math.pi / 4,
                        workers: int = 1, hard_limit: int = DEFAULT_CUTOFF_LIMIT) -> MonteCarloResult:
    """Repeated ML phase estimation from M homodyne outcomes per batch.

    Each batch draws its own generator from ``SeedSequence(seed)`` so results
    do not depend on batch scheduling.  The ML search is restricted to
    ``phi_true +/- window``, inside which the homodyne likelihood is
    identifiable.
    """
    if M < 100:
        raise DomainError("M must be at least 100")
    if n_batches < 2:
        raise DomainError("need at least two batches for a variance")
    rho = dephased_probe(probe_for(spec, hard_limit=hard_limit), spec.Delta)
    model = CellModel(rho, grid_half_width(spec.N))
    angle = phi_true + theta
    if model.fisher(angle) < 1e-10:
        raise EstimationError("homodyne likelihood does not depend on the phase")
    fisher = HomodyneModel(rho, make_grid(spec.N)).fisher(angle)

    children = np.random.SeedSequence(seed).spawn(n_batches)
    jobs = [(c, M) for c in children]

    def run(job):
        child, m = job
        rng = np.random.default_rng(child)
        _, cells = model.sample(angle, m, rng)
        return ml_phase(model, cells, theta, phi_true - window, phi_true + window)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as pool:
            estimates = np.array(list(pool.map(run, jobs)))
    else:
        estimates = np.array([run(j) for j in jobs])
    log.debug("ML estimates: mean %.6g, var %.6g", estimates.mean(), estimates.var(ddof=1))
    return MonteCarloResult(
        phi_hat=float(estimates.mean()),
        variance=float(estimates.var(ddof=1)),
        estimates=estimates,
        fisher=fisher,
        crb=1.0 / (M * fisher),
        M=M,
        n_batches=n_batches,
    )


def squeezed_angle(orientation: str = "phase") -> float:
    """Quadrature angle squeezed by beta = 1 probes of the given orientation."""
    r = params_from_energy(1.0, 1.0, orientation).r
    return math.pi / 2 if r < 0 else 0.0
