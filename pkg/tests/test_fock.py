import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import expm_probe
from phasediff.errors import CutoffLimitError, DomainError, TruncationError
from phasediff.fock import (
    GaussianParams,
    ProbeSpec,
    build_probe,
    choose_cutoff,
    mean_photon,
    params_from_energy,
    probe_cutoff,
    probe_for,
)


def test_params_vacuum():
    p = params_from_energy(0.0, 0.0)
    assert p.alpha == 0.0 and p.r == 0.0


def test_params_squeezed_vacuum():
    p = params_from_energy(5.0, 1.0, orientation="amplitude")
    assert p.alpha == 0.0
    assert p.r == pytest.approx(math.asinh(math.sqrt(5.0)), rel=1e-15)


def test_params_half_split():
    p = params_from_energy(10.0, 0.5, orientation="amplitude")
    assert p.alpha == pytest.approx(math.sqrt(5.0), rel=1e-15)
    assert p.r == pytest.approx(math.asinh(math.sqrt(5.0)), rel=1e-15)


def test_phase_orientation_flips_sign_only():
    a = params_from_energy(7.0, 0.4, "amplitude")
    b = params_from_energy(7.0, 0.4, "phase")
    assert b.alpha == a.alpha and b.r == -a.r


@pytest.mark.parametrize("N,beta", [(-1.0, 0.5), (1.0, -0.1), (1.0, 1.2), (math.nan, 0.5)])
def test_params_domain(N, beta):
    with pytest.raises(DomainError):
        params_from_energy(N, beta)


def test_complex_alpha_rejected():
    with pytest.raises(DomainError):
        GaussianParams(alpha=1 + 1j, r=0.0)


@given(N=st.floats(0.0, 40.0), beta=st.floats(0.0, 1.0))
def test_energy_round_trip_closed_form(N, beta):
    p = params_from_energy(N, beta)
    assert math.sinh(p.r) ** 2 + p.alpha**2 == pytest.approx(N, rel=1e-12, abs=1e-12)


def test_vacuum_probe():
    psi = build_probe(GaussianParams(0.0, 0.0), 10)
    assert psi.amplitudes[0] == 1.0
    assert not psi.amplitudes[1:].any()


@pytest.mark.parametrize("r", [0.5, -0.5, 1.3])
def test_squeezed_vacuum_parity(r):
    psi = build_probe(GaussianParams(0.0, r), 300)
    assert not psi.amplitudes[1::2].any()


@pytest.mark.parametrize("alpha,r", [(1.0, 0.5), (1.0, -0.5), (2.0, 0.3), (0.0, 0.9), (1.5, -1.0)])
def test_matches_matrix_exponential(alpha, r):
    n_max = 40
    psi = build_probe(GaussianParams(alpha, r), n_max, epsilon_tail=1.0 - 1e-12)
    np.testing.assert_allclose(psi.amplitudes, expm_probe(alpha, r, n_max), atol=1e-10, rtol=0)


def test_truncation_error_carries_tail():
    with pytest.raises(TruncationError) as info:
        build_probe(params_from_energy(10.0, 1.0), 20)
    assert info.value.tail > 1e-10 and info.value.n_max == 20


def test_mean_photon_vacuum():
    assert mean_photon(build_probe(GaussianParams(0.0, 0.0), 5)) == 0.0


@pytest.mark.parametrize("N,beta", [(5.0, 1.0), (10.0, 0.3), (3.0, 0.0), (20.0, 0.7)])
@pytest.mark.parametrize("orientation", ["phase", "amplitude"])
def test_mean_photon_recovers_energy(N, beta, orientation):
    spec = ProbeSpec(N, beta, orientation=orientation)
    psi = probe_for(spec)
    assert abs(mean_photon(psi) - N) <= 1e-6 * (N + 1)
    assert abs(1.0 - psi.norm2) <= spec.epsilon_tail


def test_cutoff_vacuum_small():
    assert choose_cutoff(0.0, 0.3, 1e-10) <= 20


def test_cutoff_tail_verified():
    n = choose_cutoff(10.0, 0.0, 1e-10)
    for beta in (0.0, 0.3, 0.5, 0.9, 1.0):
        psi = build_probe(params_from_energy(10.0, beta), n, epsilon_tail=1.0 - 1e-12)
        assert psi.tail < 1e-10


def test_cutoff_is_smallest_for_probe():
    params = params_from_energy(10.0, 1.0)
    n = probe_cutoff(params, 1e-10)
    # squeezed vacuum has no odd amplitudes, so compare against two below
    below = build_probe(params, n - 2, epsilon_tail=1.0 - 1e-12)
    assert below.tail >= 1e-10


def test_cutoff_monotone_in_energy():
    assert choose_cutoff(30.0, 0.0, 1e-12) > choose_cutoff(10.0, 0.0, 1e-12)


def test_cutoff_hard_limit():
    with pytest.raises(CutoffLimitError):
        choose_cutoff(30.0, 0.0, 1e-10, hard_limit=200)


def test_fock_vector_immutable():
    psi = build_probe(GaussianParams(0.5, 0.1), 30)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 0.0


@settings(max_examples=25, deadline=None)
@given(N=st.floats(0.0, 12.0), beta=st.floats(0.0, 1.0))
def test_normalization_property(N, beta):
    psi = probe_for(ProbeSpec(N, beta))
    assert abs(1.0 - psi.norm2) <= 1e-10
