import math

import numpy as np
import pytest

from thermalpeps import finite, gates, peps


def test_exact_contract_1x1_is_site_tensor():
    lat = finite.FiniteLattice.initial(1)
    psi = finite.exact_contract(lat)
    np.testing.assert_array_equal(psi, peps.initial_tensor().reshape(4))


def test_exact_contract_size_limit():
    # 3x3 holds 9 sites (4^9 states), within the 2^24 dense limit; 4x4 is not
    lat = finite.FiniteLattice.initial(3)
    big = finite.FiniteLattice.initial(4)
    with pytest.raises(finite.SizeLimitError):
        finite.exact_contract(big)
    assert finite.exact_contract(lat).size == 4**9


def test_single_column_boundary_mps_is_exact():
    lat = finite.FiniteLattice.initial(1)
    tl = finite.transfer_lattice(lat)
    mps = finite.boundary_contract(tl, m_mps=4)
    assert mps.trunc_errors == (0.0,)
    sign, ln = finite.mps_close(mps)
    assert sign * math.exp(ln) == pytest.approx(2.0)


def test_boundary_mps_norm_matches_exact_2x2():
    lat = finite.FiniteLattice.initial(2)
    b = finite.absorb_gate(lat, 0.3)
    psi = finite.exact_contract(b)
    sign, ln = finite.lattice_norm(b)
    assert sign * math.exp(ln) == pytest.approx(float(psi @ psi), rel=1e-12)


def test_boundary_mps_truncation_error_monotone_in_m():
    """Norm of a correlated 4x4 lattice converges as M_mps grows (recorded)."""
    lat = finite.FiniteLattice.initial(4)
    b = lat
    for db in (0.3, 0.35):
        b = finite.materialize(finite.absorb_gate(b, db))
    exact = None
    errors = []
    norms = []
    for m in (2, 4, 8, 16):
        b.m_mps = m
        sign, ln = finite.lattice_norm(b)
        norms.append(sign * math.exp(ln))
    print("boundary-MPS norms vs M:", norms)
    # the largest M is exact here; error must not grow with M
    errs = [abs(n - norms[-1]) for n in norms[:-1]]
    assert errs[0] >= errs[-1]


def test_dense_hamiltonian_matches_kron_construction():
    h = 1.3
    delta = 0.2
    hmat = finite.dense_hamiltonian(2, h, delta)
    z, x = gates.PAULI_Z, gates.PAULI_X
    want = np.zeros((16, 16))
    bonds = [(0, 1), (2, 3), (0, 2), (1, 3)]
    for a, b in bonds:
        want -= finite.site_operator(4, a, z) @ finite.site_operator(4, b, z)
    for m in range(4):
        want -= h * finite.site_operator(4, m, x) + delta * finite.site_operator(4, m, z)
    np.testing.assert_allclose(hmat, want, atol=1e-13)


def test_thermal_state_infinite_temperature():
    hmat = finite.dense_hamiltonian(2, 1.0)
    rho = finite.thermal_state(hmat, 0.0)
    np.testing.assert_allclose(rho, np.eye(16) / 16, atol=1e-14)


def test_purified_halfmatrix_norm_is_partition_function():
    hmat = finite.dense_hamiltonian(2, 0.7)
    beta = 0.4
    u = finite.purified_halfmatrix(hmat, beta)
    z1 = float(np.sum(u * u))
    vals = np.linalg.eigvalsh(hmat)
    z2 = float(np.sum(np.exp(-beta * vals)))
    assert z1 == pytest.approx(z2, rel=1e-12)


def test_symmetry_orbit_representatives_are_horizontal():
    reps = finite.symmetry_orbits(5)
    assert all(r[0] == "h" for r in reps.values())
    # a vertical bond maps to its diagonal-reflected horizontal partner
    assert reps[("v", 1, 2)] == reps[("h", 2, 1)]


def test_finite_bond_environment_matches_brute_force_2x2():
    db = 0.25
    h = 1.4
    params = gates.ModelParams(h=h, dbeta=db)
    half = gates.field_halfstep_matrix(params)
    lat = finite.FiniteLattice.initial(2)
    lat = finite.apply_field(lat, half)
    b_lat = finite.absorb_gate(lat, db)
    rng = np.random.default_rng(0)
    w = np.linalg.qr(rng.standard_normal((2, 1)))[0]
    for bond in b_lat.bonds():
        b_lat.isometries[bond] = w
    bond = ("h", 0, 0)
    e = finite.finite_bond_environment(b_lat, bond)

    # brute force: slice the two open bra legs and contract state vectors
    ket = finite.exact_contract(b_lat)
    kexp = b_lat.tensors[0][0].shape[3]
    e_exact = np.zeros((kexp, kexp))
    for k in range(kexp):
        for l in range(kexp):
            bra = b_lat.copy()
            tl_site = bra.tensors[0][0]
            tr_site = bra.tensors[0][1]
            bra.tensors[0][0] = tl_site[:, :, :, k : k + 1, :, :]
            bra.tensors[0][1] = tr_site[:, :, :, :, :, l : l + 1]
            # the sliced legs must stay unrenormalized
            bra.isometries[bond] = np.ones((1, 1))
            e_exact[k, l] = float(finite.exact_contract(bra) @ ket)
    e_exact = 0.5 * (e_exact + e_exact.T)
    assert np.abs(e - e_exact).max() < 1e-10 * np.abs(e_exact).max()


def test_bond_environments_differ_between_center_and_corner():
    lat = finite.FiniteLattice.initial(5)
    b = lat
    for db in (0.3, 0.25):
        b = finite.materialize(finite.absorb_gate(b, db))
    b = finite.absorb_gate(b, 0.2)
    rng = np.random.default_rng(1)
    d = b.tensors[0][1].shape[5] // 2
    for bond in b.bonds():
        (i1, j1), _ = finite.bond_sites(bond)
        kexp = b.tensors[i1][j1].shape[3 if bond[0] == "h" else 4]
        b.isometries[bond] = np.linalg.qr(np.eye(kexp)[:, : max(1, kexp // 2)])[0]
    e_corner = finite.finite_bond_environment(b, ("h", 0, 0))
    e_center = finite.finite_bond_environment(b, ("h", 2, 1))
    e_corner /= np.abs(e_corner).max()
    e_center /= np.abs(e_center).max()
    assert np.abs(e_corner - e_center).max() > 1e-3


def test_sweep_update_tiny_step_selects_even_blocks():
    # grow with a transverse field so all D bond directions carry weight
    cfg = finite.FiniteEvolutionConfig(n=3, h=2.0, D=4, m_mps=16, dbeta=0.2, beta_max=0.4)
    lat = finite.FiniteLattice.initial(3, 16)
    for _ in range(2):
        lat = finite.finite_step(lat, cfg)
    d = lat.tensors[0][1].shape[5]
    b = finite.absorb_gate(lat, 1e-8)
    swept, diag = finite.sweep_update(b, d, tol_w=1e-7, max_sweeps=20)
    want = np.zeros((2 * d, d))
    for c in range(d):
        want[2 * c, c] = 1.0
    p_want = want @ want.T
    for bond, w in swept.isometries.items():
        p = w @ w.T
        assert np.abs(p - p_want).max() < 1e-3


def test_finite_step_richardson_second_order():
    """2x2 shadow: halving the time step shrinks the error by about four;
    D=4 makes the representation exact so only the splitting error remains."""
    h = 2.0
    beta = 0.4
    hmat = finite.dense_hamiltonian(2, h)
    want = finite.thermal_expectation(hmat, beta, finite.site_operator(4, 0, gates.PAULI_X))
    errs = []
    for db in (0.05, 0.025):
        cfg = finite.FiniteEvolutionConfig(
            n=2, h=h, D=4, m_mps=16, dbeta=db, beta_max=beta, tol_w=1e-10
        )
        lat = finite.FiniteLattice.initial(2, 16)
        for _ in range(int(round(beta / db))):
            lat = finite.finite_step(lat, cfg)
        got = finite.expectation(lat, {(0, 0): gates.PAULI_X})
        errs.append(abs(got - want))
    print("richardson errors:", errs)
    assert errs[1] < errs[0] / 2.5
    assert errs[0] < 1e-3


def test_finite_thermal_3x3_short_trajectory():
    """Abbreviated version of the exact-diagonalization check (beta = 0.5)."""
    h = 2.0 * gates.H0 / 3.0
    beta = 0.5
    dbeta = 0.005
    cfg = finite.FiniteEvolutionConfig(
        n=3, h=h, D=4, m_mps=16, dbeta=dbeta, beta_max=beta, tol_w=1e-8
    )
    lat = finite.FiniteLattice.initial(3, 16)
    for _ in range(int(round(beta / dbeta))):
        lat = finite.finite_step(lat, cfg)
    hmat = finite.dense_hamiltonian(3, h)
    z = gates.PAULI_Z
    got = finite.expectation(lat, {(0, 0): z, (2, 2): z})
    want = finite.thermal_expectation(
        hmat, beta, finite.site_operator(9, 0, z) @ finite.site_operator(9, 8, z)
    )
    assert got == pytest.approx(want, abs=1e-3)


def test_evolve_finite_yields_requested_betas():
    cfg = finite.FiniteEvolutionConfig(
        n=2, h=1.0, D=4, m_mps=8, dbeta=0.02, beta_max=0.1
    )
    out = list(
        finite.evolve_finite(cfg, [0.04, 0.1], [{(0, 0): gates.PAULI_Z, (1, 1): gates.PAULI_Z}])
    )
    assert len(out) == 2
    assert out[0][0] == pytest.approx(0.04)
    assert out[1][0] == pytest.approx(0.1)
    assert all(len(vals) == 1 for _, vals, _ in out)
