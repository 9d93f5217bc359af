import numpy as np
import pytest
from scipy.linalg import expm


def expm_probe(alpha, r, n_max, pad=4):
    """Amplitudes of D(alpha) S(r)|0> by exponentiating truncated generators.

    The generators live in a space ``pad`` times larger than ``n_max`` so the
    truncation of the exponential does not reach the returned entries.
    """
    dim = pad * (n_max + 1)
    a = np.diag(np.sqrt(np.arange(1.0, dim)), 1)
    ad = a.T
    squeeze = expm(0.5 * r * (a @ a - ad @ ad))
    displace = expm(alpha * (ad - a))
    vac = np.zeros(dim)
    vac[0] = 1.0
    return (displace @ squeeze @ vac)[: n_max + 1]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_density(rng, dim, complex_=True):
    """Random full-rank density matrix of the given dimension."""
    g = rng.normal(size=(dim, dim))
    if complex_:
        g = g + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def record_criterion(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)
    assert passed, detail


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
