import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import solve_sylvester

from conftest import random_density
from phasediff.channel import DensityMatrix, dephased_probe, phase_shift
from phasediff.errors import ConventionError, PositivityError
from phasediff.fock import FockVector, GaussianParams, ProbeSpec, build_probe, params_from_energy, probe_for
from phasediff.qfi import eigendecompose, pure_qfi, qfi_at_cutoff, qfi_of_probe, qfi_phase


def brute_force_qfi(rho):
    """Double loop over eigenpairs with an independent eigensolver."""
    lam, vec = np.linalg.eig(rho)
    lam = lam.real
    k = np.arange(rho.shape[0])
    h = 0.0
    for n in range(lam.size):
        for m in range(lam.size):
            s = lam[n] + lam[m]
            if n == m or s < 1e-12:
                continue
            g = np.vdot(vec[:, n], k * vec[:, m])
            h += 2.0 * (lam[n] - lam[m]) ** 2 / s * abs(g) ** 2
    return h


def sld_qfi(rho):
    """QFI from the symmetric logarithmic derivative (full-rank rho only)."""
    k = np.arange(rho.shape[0])
    drho = -1j * (k[:, None] - k[None, :]) * rho
    L = solve_sylvester(rho, rho, 2.0 * drho)
    return float(np.real(np.trace(rho @ L @ L)))


def test_pure_state_spectrum():
    psi = build_probe(GaussianParams(0.8, -0.3), 40)
    sd = eigendecompose(dephased_probe(psi, 0.0))
    assert sd.eigenvalues[0] == pytest.approx(psi.norm2, abs=1e-12)
    assert np.all(sd.eigenvalues[1:] <= 1e-12)


def test_diagonal_state_spectrum(rng):
    p = rng.random(8)
    p /= p.sum()
    sd = eigendecompose(DensityMatrix(np.diag(p)))
    np.testing.assert_allclose(sd.eigenvalues, np.sort(p)[::-1], atol=1e-15)
    np.testing.assert_allclose(np.abs(sd.eigenvectors), np.eye(8)[np.argsort(p)[::-1]], atol=1e-15)
    assert qfi_phase(sd).H == 0.0


def test_spectrum_against_general_eigensolver():
    spec = ProbeSpec(2.0, 1.0, 0.3)
    rho = dephased_probe(probe_for(spec), spec.Delta)
    sd = eigendecompose(rho)
    oracle = np.sort(np.linalg.eigvals(rho.entries).real)[::-1]
    np.testing.assert_allclose(sd.eigenvalues, np.clip(oracle, 0, None), atol=1e-10)
    rows = sd.eigenvectors
    np.testing.assert_allclose(rows @ rows.T, np.eye(rows.shape[0]), atol=1e-10)
    recon = (rows.T * sd.eigenvalues) @ rows
    assert np.linalg.norm(recon - rho.entries) <= 1e-10


def test_complex_input_needs_hermitian_flag(rng):
    rho = DensityMatrix(random_density(rng, 6))
    with pytest.raises(ConventionError):
        eigendecompose(rho)
    eigendecompose(rho, hermitian=True)


def test_tiny_imaginary_parts_are_stripped():
    rho = DensityMatrix(np.diag([0.7, 0.3]).astype(complex) + 1e-15j * np.array([[0, 1], [-1, 0]]))
    assert eigendecompose(rho).eigenvectors.dtype == float


def test_positivity_floor():
    eigendecompose(DensityMatrix(np.diag([1.0, -5e-11])))
    with pytest.raises(PositivityError):
        eigendecompose(DensityMatrix(np.diag([1.0, -1e-8])))


def test_real_and_hermitian_paths_agree():
    spec = ProbeSpec(3.0, 0.6, 0.2)
    rho = dephased_probe(probe_for(spec), spec.Delta)
    a = qfi_phase(eigendecompose(rho)).H
    b = qfi_phase(eigendecompose(rho, hermitian=True)).H
    assert a == pytest.approx(b, rel=1e-10)


def test_pure_qfi_examples():
    assert pure_qfi(FockVector([1.0])) == 0.0
    sv = build_probe(params_from_energy(3.0, 1.0), 200)
    assert pure_qfi(sv) == pytest.approx(96.0, rel=1e-6)
    coh = build_probe(params_from_energy(3.0, 0.0), 200)
    assert pure_qfi(coh) == pytest.approx(12.0, rel=1e-6)


@pytest.mark.parametrize("N", [2.0, 5.0])
def test_squeezed_vacuum_anchor(N):
    assert qfi_of_probe(ProbeSpec(N, 1.0)).H == pytest.approx(8 * (N * N + N), rel=1e-3)


def test_coherent_anchor():
    assert qfi_of_probe(ProbeSpec(5.0, 0.0)).H == pytest.approx(20.0, rel=1e-3)


def test_large_noise_kills_qfi():
    assert qfi_of_probe(ProbeSpec(2.0, 1.0, 5.0)).H < 1e-6


def test_against_brute_force_at_quadrupled_cutoff():
    spec = ProbeSpec(2.0, 0.5, 0.1)
    res = qfi_of_probe(spec)
    psi = probe_for(spec, 4 * res.n_max)
    oracle = brute_force_qfi(dephased_probe(psi, spec.Delta).entries)
    assert res.H == pytest.approx(oracle, rel=1e-3)
    assert res.tail <= spec.epsilon_tail


def test_doubling_is_stable():
    spec = ProbeSpec(4.0, 0.3, 0.2)
    res = qfi_of_probe(spec)
    assert qfi_at_cutoff(spec, 2 * res.n_max).H == pytest.approx(res.H, rel=1e-3)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 12))
def test_pair_sum_matches_sld(seed, dim):
    rho = random_density(np.random.default_rng(seed), dim)
    h = qfi_phase(eigendecompose(DensityMatrix(rho), hermitian=True)).H
    assert h == pytest.approx(sld_qfi(rho), rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 12), phi=st.floats(-7, 7))
def test_phase_covariance(seed, dim, phi):
    rho = DensityMatrix(random_density(np.random.default_rng(seed), dim, complex_=False))
    base = qfi_phase(eigendecompose(rho)).H
    shifted = qfi_phase(eigendecompose(phase_shift(rho, phi), hermitian=True)).H
    assert shifted == pytest.approx(base, rel=1e-4)


@settings(max_examples=30, deadline=None)
@given(N=st.floats(0.1, 10.0), beta=st.floats(0.0, 1.0))
def test_noiseless_matches_pure_qfi(N, beta):
    spec = ProbeSpec(N, beta)
    assert qfi_of_probe(spec, verify=False).H == pytest.approx(pure_qfi(probe_for(spec)), rel=1e-3)


@pytest.mark.parametrize("N,beta", [(2.0, 1.0), (5.0, 0.0), (5.0, 0.5)])
def test_monotone_in_noise(N, beta):
    hs = [qfi_of_probe(ProbeSpec(N, beta, d), verify=False).H for d in np.linspace(0, 1.5, 10)]
    assert all(b <= a for a, b in zip(hs, hs[1:]))
    assert min(hs) >= 0.0


def test_degenerate_pairs_are_counted():
    psi = build_probe(GaussianParams(1.0, 0.0), 30)
    res = qfi_phase(eigendecompose(dephased_probe(psi, 0.0)))
    assert res.degeneracy_skipped > 0
    assert res.n_terms_used + res.degeneracy_skipped == 31 * 30
    assert math.isfinite(res.H)
