"""Acceptance gate: one test per criterion, each reporting a pass/fail line."""

import json
import math
import subprocess
import sys

import numpy as np

from conftest import random_density, record_criterion
from phasediff.channel import DensityMatrix, dephase, phase_shift
from phasediff.cli import table_body
from phasediff.fock import ProbeSpec, probe_for
from phasediff.homodyne import (
    best_homodyne_fisher,
    noise_threshold,
    sample_and_estimate,
    squeezed_angle,
    variance_map,
)
from phasediff.qfi import pure_qfi, qfi_of_probe
from phasediff.sweep import (
    BETA_TOL,
    FIG1_PANELS,
    SweepRecord,
    check_qfi_scaling,
    energy_grid,
    fit_gamma,
    optimize_beta,
    qfi_surface,
)


def test_c01_noiseless_squeezed_vacuum_anchor():
    worst = 0.0
    for N in (1.0, 2.0, 5.0, 10.0):
        h = qfi_of_probe(ProbeSpec(N, 1.0, 0.0)).H
        worst = max(worst, abs(h - 8 * (N * N + N)) / (8 * (N * N + N)))
    record_criterion(1, worst <= 1e-3, f"max rel. error vs 8(N^2+N) = {worst:.2e} (limit 1e-3)")


def test_c02_coherent_anchor():
    worst = 0.0
    for N in (1.0, 5.0):
        spec = ProbeSpec(N, 0.0, 0.0)
        h = qfi_of_probe(spec).H
        oracle = pure_qfi(probe_for(spec))
        worst = max(worst, abs(h - 4 * N) / (4 * N), abs(oracle - 4 * N) / (4 * N))
    record_criterion(2, worst <= 1e-3, f"max rel. error vs 4N = {worst:.2e} (limit 1e-3)")


def test_c03_channel_exactness():
    rng = np.random.default_rng(3)
    worst = {"trace": 0.0, "semigroup": 0.0, "commute": 0.0}
    diag_ok = True
    for _ in range(1000):
        dim = int(rng.integers(1, 42))
        rho = DensityMatrix(random_density(rng, dim))
        d1, d2 = rng.uniform(0, 3, size=2)
        phi = rng.uniform(-2 * math.pi, 2 * math.pi)
        out = dephase(rho, d1)
        diag_ok &= np.array_equal(np.diagonal(out.entries), np.diagonal(rho.entries))
        worst["trace"] = max(worst["trace"], abs(out.trace - rho.trace))
        semi = dephase(out, d2).entries - dephase(rho, math.hypot(d1, d2)).entries
        worst["semigroup"] = max(worst["semigroup"], float(np.abs(semi).max()))
        comm = dephase(phase_shift(rho, phi), d1).entries - phase_shift(out, phi).entries
        worst["commute"] = max(worst["commute"], float(np.abs(comm).max()))
    ok = diag_ok and all(v <= 1e-14 for v in worst.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    record_criterion(3, ok, f"1000 matrices: {detail}; diagonal bitwise {diag_ok} (limit 1e-14)")


def test_c04_homodyne_optimal_for_squeezed_vacuum():
    worst = 0.0
    for N in (1.0, 2.0, 5.0):
        spec = ProbeSpec(N, 1.0, 0.0)
        f = best_homodyne_fisher(spec).F
        h = qfi_of_probe(spec).H
        worst = max(worst, abs(f - h) / h)
    record_criterion(4, worst <= 1e-2, f"max |F-H|/H = {worst:.2e} (limit 1e-2)")


def test_c05_fisher_bounded_by_qfi():
    worst = -math.inf
    count = 0
    for N in np.linspace(0.5, 10.0, 5):
        for beta in np.linspace(0.0, 1.0, 5):
            for Delta in np.linspace(0.0, 2.0, 5):
                spec = ProbeSpec(float(N), float(beta), float(Delta))
                h = qfi_of_probe(spec).H
                f = best_homodyne_fisher(spec).F
                worst = max(worst, (f - h) / max(h, 1e-300) if h > 0 else f)
                count += 1
    record_criterion(5, worst <= 1e-6 and count == 125,
                     f"{count} points, max (F-H)/H = {worst:.2e} (limit 1e-6)")


def _panel(n_max_energy):
    Ns = energy_grid(n_max_energy)
    deltas = [math.sqrt(d2) for d2 in FIG1_PANELS[n_max_energy]]
    table = np.array([[optimize_beta(N, d).beta_opt for N in Ns] for d in deltas])
    return Ns, deltas, table


def _non_increasing(seq, slack):
    return all(b <= a + slack for a, b in zip(seq, seq[1:]))


def test_c06_optimal_squeezing_fraction():
    parts, ok = [], True
    for n_max_energy in (10, 15):
        Ns, deltas, table = _panel(n_max_energy)
        low_noise = bool(np.all(table[0] == 1.0))
        # beta_opt is resolved to BETA_TOL, so monotonicity allows that slack
        in_delta = all(_non_increasing(table[:, j], BETA_TOL) for j in range(len(Ns)))
        in_n = True
        for row in table[1:3]:
            peak = int(np.flatnonzero(row == row.max())[-1])
            in_n &= _non_increasing(list(row[peak:]), BETA_TOL)
        ok &= low_noise and in_delta and in_n
        parts.append(f"N_max={n_max_energy}: low-noise {low_noise}, Delta-monotone {in_delta}, "
                     f"N-monotone {in_n}")
    record_criterion(6, ok, "; ".join(parts))


def test_c07_qfi_decreasing_in_noise():
    deltas = np.geomspace(0.01, 1.0, 8)
    ok = True
    for N in (2.0, 5.0, 10.0):
        hs = [optimize_beta(N, float(d)).H_opt for d in deltas]
        ok &= all(b < a for a, b in zip(hs, hs[1:]))
    record_criterion(7, ok, "optimized H strictly decreasing over 8 log-spaced Delta in [0.01, 1]")


def test_c08_scaling_law():
    main = check_qfi_scaling(20.0, 0.1, 2.0)
    # matched k and N, xi = N Delta
    large_xi = check_qfi_scaling(20.0, 0.5, 2.0)
    small_xi = check_qfi_scaling(20.0, 0.01, 2.0)
    ok = main <= 0.1 and large_xi < small_xi
    record_criterion(8, ok, f"dev(20, 0.1, k=2) = {main:.4f} (limit 0.1); "
                            f"dev at xi=10 {large_xi:.4f} vs xi=0.2 {small_xi:.4f} (need smaller)")


def test_c09_gamma_fit():
    Ns = energy_grid(15.0)
    deltas = np.geomspace(1e-2, 1.0, 8)
    records = qfi_surface(Ns, deltas)
    failed = [r for r in records if r.error]
    fit = fit_gamma(records)
    xis = np.geomspace(1e-2, 30.0, 20)
    synth = [SweepRecord(1.0, x, 0.0, 1.0, x, math.exp(-0.1 - 0.8 * math.log(x) - 0.3 * math.log(x) ** 2))
             for x in xis]
    exact = fit_gamma(synth)
    rec_err = max(abs(exact.a - 0.3), abs(exact.b - 0.8), abs(exact.c + 0.1))
    ok = not failed and fit.residual_rms <= 0.2 and rec_err <= 1e-8
    record_criterion(9, ok, f"{fit.n_points} points: a={fit.a:.4f} b={fit.b:.4f} c={fit.c:.4f}, "
                            f"rms {fit.residual_rms:.4f} (limit 0.2); synthetic error {rec_err:.1e}")


def test_c10_variance_map_regimes():
    low = variance_map(10.0, 0.1).argmin
    high = variance_map(10.0, 0.6).argmin
    thr = noise_threshold(10.0, (0.1, 0.6), 1e-3)
    ok = (low[0] == 1.0 and math.isclose(low[1], squeezed_angle())
          and high == (0.0, 0.0)
          and 0.1 < thr.Delta_star < 0.6 and thr.upper - thr.lower <= 1e-3)
    record_criterion(10, ok, f"argmin {low} at Delta=0.1, {high} at Delta=0.6; "
                             f"Delta*(10) = {thr.Delta_star:.4f} in [{thr.lower:.4f}, {thr.upper:.4f}]")


def test_c11_heisenberg_slope():
    xi = 0.1
    Ns = np.array([5.0, 10.0, 20.0, 30.0])
    crb = np.array([1.0 / optimize_beta(N, xi / N).H_opt for N in Ns])
    slope = np.polyfit(np.log(Ns), np.log(crb), 1)[0]
    record_criterion(11, -2.2 <= slope <= -1.8, f"slope of log(1/H) vs log N at xi={xi}: {slope:.4f}")


def test_c12_monte_carlo_crb():
    spec = ProbeSpec(4.0, 0.0, 0.1)
    phi0 = best_homodyne_fisher(spec).phi0
    res = sample_and_estimate(spec, phi0, M=100_000, seed=1, n_batches=200)
    sigma = res.crb * math.sqrt(2.0 / (res.n_batches - 1))
    ratio = res.variance / res.crb
    ok = res.variance >= res.crb - 3 * sigma and abs(ratio - 1.0) <= 0.15
    record_criterion(12, ok, f"variance/CRB = {ratio:.4f} (within 0.15, not below 3 sigma = "
                             f"{3 * sigma / res.crb:.3f})")


COMMANDS = [
    ["qfi", "--N", "1,2", "--beta", "0.5", "--Delta", "0.2"],
    ["sweep", "--N", "2", "--Delta", "0.1,0.5", "--scaling-k", "2"],
    ["homodyne", "--N", "2", "--beta", "0,1", "--Delta", "0.3"],
    ["variance-map", "--N", "5", "--Delta", "0.2", "--beta", "lin:0:1:5", "--threshold-N", "5"],
    ["crb-mc", "--M", "500", "--batches", "5", "--seed", "11"],
    ["qfi", "--N", "1", "--format", "json"],
]


def _run(argv):
    out = subprocess.run([sys.executable, "-m", "phasediff.cli", *argv],
                         capture_output=True, text=True, check=True).stdout
    if "--format" in argv:
        doc = json.loads(out)
        doc["provenance"].pop("generated")
        return json.dumps(doc, sort_keys=True)
    return table_body(out)


def test_c13_cli_determinism():
    same = [_run(argv) == _run(argv) for argv in COMMANDS]
    record_criterion(13, all(same), f"{sum(same)}/{len(same)} commands byte-identical on rerun")
