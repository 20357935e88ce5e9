import math

import numpy as np
import pytest

from thermalpeps import gates, peps
from thermalpeps.ctmrg import CtmConfig, converge_env
from thermalpeps.observables import (
    correlator_profile,
    default_power_window,
    default_tail_window,
    estimate_xi,
    fit_correlation_length,
    fit_loglog,
    fit_power_law,
    local_expectation,
    onsager_exact_magnetization,
    two_point_correlator,
)


@pytest.fixture(scope="module")
def classical_env():
    beta = 1.1 * gates.BETA0
    site = gates.classical_ising_tensor(beta)
    a = peps.transfer_tensor_a(site)
    seed = peps.transfer_with_insertion(site, gates.PAULI_Z)
    env = converge_env(a, CtmConfig(M=12, tol_env=1e-10, max_iter=50000, bias=1e-3), seed=seed)
    return site, env


def test_identity_expectation_is_one(classical_env):
    site, env = classical_env
    assert local_expectation(site, env, np.eye(2)) == pytest.approx(1.0, abs=1e-12)


def test_infinite_temperature_observables_vanish():
    site = peps.initial_tensor()
    a = peps.transfer_tensor_a(site)
    env = converge_env(a, CtmConfig(M=4, tol_env=1e-12, max_iter=100))
    assert local_expectation(site, env, gates.PAULI_Z) == pytest.approx(0.0, abs=1e-14)
    assert local_expectation(site, env, gates.PAULI_X) == pytest.approx(0.0, abs=1e-14)
    # product state: correlator vanishes at every separation
    prof = correlator_profile(site, env, gates.PAULI_Z, 5)
    np.testing.assert_allclose(prof, 0.0, atol=1e-13)


def test_r0_correlator_identity(classical_env):
    site, env = classical_env
    z = local_expectation(site, env, gates.PAULI_Z)
    c0 = two_point_correlator(site, env, gates.PAULI_Z, 0)
    assert c0 == pytest.approx(1.0 - z * z, abs=1e-12)


def test_correlator_row_column_symmetry(classical_env):
    """Isotropy: the vertical channel gives the same numbers as the
    horizontal one."""
    site, env = classical_env
    prof_row = correlator_profile(site, env, gates.PAULI_Z, 6)
    rot = site.transpose(0, 1, 5, 2, 3, 4)  # rotate legs: column becomes row
    prof_col = correlator_profile(rot, env, gates.PAULI_Z, 6)
    np.testing.assert_allclose(prof_row, prof_col, atol=1e-10)


def test_correlator_decays_in_ordered_phase(classical_env):
    site, env = classical_env
    prof = correlator_profile(site, env, gates.PAULI_Z, 40)
    assert np.all(prof[:30] > 0)
    assert prof[20] < prof[5]


def test_fit_correlation_length_pure_exponential():
    r = np.arange(1, 200)
    fit = fit_correlation_length(np.column_stack([r, np.exp(-r / 50.0)]))
    assert fit.xi == pytest.approx(50.0, rel=1e-12)
    assert fit.residual < 1e-12


def test_fit_correlation_length_ignores_amplitude():
    r = np.arange(1, 100)
    fit = fit_correlation_length(np.column_stack([r, 3.0 * np.exp(-r / 7.0)]))
    assert fit.xi == pytest.approx(7.0, rel=1e-12)


def test_fit_correlation_length_errors():
    r = np.arange(1, 50)
    c = np.exp(-r / 5.0)
    c[10] = -1.0
    with pytest.raises(ValueError, match="non-positive"):
        fit_correlation_length(np.column_stack([r, c]), (5, 20))
    with pytest.raises(ValueError, match="window"):
        fit_correlation_length(np.column_stack([r, np.exp(-r / 5.0)]), (40, 41))


def test_fit_power_law_pure():
    r = np.arange(1, 200)
    fit = fit_power_law(np.column_stack([r, r ** -0.25]))
    assert fit.eta == pytest.approx(0.25, rel=1e-12)


def test_fit_loglog():
    x = np.array([8, 12, 16, 24, 32], dtype=float)
    y = 1.05 * x**1.93
    p, amp, res = fit_loglog(x, y)
    assert p == pytest.approx(1.93, rel=1e-12)
    assert amp == pytest.approx(1.05, rel=1e-10)
    assert res < 1e-12


def test_estimate_xi_seed_and_windows():
    r = np.arange(1, 400)
    prof = np.exp(-r / 30.0)
    est = estimate_xi(prof)
    assert est == pytest.approx(30.0, rel=0.05)
    lo, hi = default_tail_window(est, 400)
    assert lo == pytest.approx(2 * est, rel=0.05)
    assert hi == pytest.approx(4 * est, rel=0.05)
    plo, phi = default_power_window(est)
    assert plo == 3.0 and phi == pytest.approx(est / 3, rel=0.05)


def test_onsager_values():
    assert onsager_exact_magnetization(gates.BETA0) == 0.0
    assert onsager_exact_magnetization(0.3) == 0.0
    assert onsager_exact_magnetization(50.0) == pytest.approx(1.0, abs=1e-15)
    # direct evaluation of the closed form at 1.2 * beta0
    assert onsager_exact_magnetization(1.2 * gates.BETA0) == pytest.approx(
        0.9402589656552778, abs=1e-12
    )


def test_classical_mode_matches_onsager_off_criticality():
    """Disordered side: the magnetization must vanish despite the biased
    environment start (the seed decays where the symmetric phase is stable)."""
    beta = 0.9 * gates.BETA0
    site = gates.classical_ising_tensor(beta)
    a = peps.transfer_tensor_a(site)
    seed = peps.transfer_with_insertion(site, gates.PAULI_Z)
    env = converge_env(a, CtmConfig(M=16, tol_env=1e-10, max_iter=60000, bias=1e-3), seed=seed)
    z = local_expectation(site, env, gates.PAULI_Z)
    assert abs(z - onsager_exact_magnetization(beta)) < 1e-4
