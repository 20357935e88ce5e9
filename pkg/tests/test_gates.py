import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from thermalpeps import gates


def test_model_params_validation():
    with pytest.raises(ValueError):
        gates.ModelParams(h=1.0, dbeta=0.0)
    with pytest.raises(ValueError):
        gates.ModelParams(h=-1.0, dbeta=0.1)
    with pytest.raises(ValueError):
        gates.ModelParams(h=1.0, delta=-1e-9, dbeta=0.1)


def test_named_constants():
    assert gates.BETA0 == pytest.approx(-math.log(math.sqrt(2) - 1) / 2)
    assert gates.BETA0 == pytest.approx(0.441, abs=5e-4)
    assert gates.H0 == 3.044


def test_trotter_small_step_limit():
    for db, tol_diag, tol_off in ((1e-4, 1e-8, 0.01), (1e-8, 1e-12, 1e-4)):
        t = gates.trotter_tensor(db)
        s0 = t[:, :, 0, 0, 0, 0]
        assert np.abs(s0 - np.eye(2)).max() < tol_diag
        # blocks with s > 0 vanish like (dbeta/2)**(s/2)
        assert np.abs(t[:, :, 1, 0, 0, 0]).max() < tol_off


def test_trotter_entries_at_db_02():
    # direct evaluation: cosh(0.1)^2 = 1.0100333778095378,
    # tanh(0.1)^(1/2) = 0.31570238298903575
    t = gates.trotter_tensor(0.2)
    z = gates.PAULI_Z
    want = math.cosh(0.1) ** 2 * math.sqrt(math.tanh(0.1)) * z
    np.testing.assert_allclose(t[:, :, 1, 0, 0, 0], want, rtol=0, atol=1e-15)
    np.testing.assert_allclose(
        t[:, :, 1, 0, 0, 0], 1.0100333778095378 * 0.31570238298903575 * z, atol=1e-12
    )


def test_trotter_bond_permutation_symmetry_exact():
    t = gates.trotter_tensor(0.37)
    for perm in ((1, 0, 2, 3), (3, 2, 1, 0), (2, 3, 0, 1), (0, 3, 1, 2)):
        pt = t.transpose((0, 1) + tuple(2 + p for p in perm))
        assert np.array_equal(t, pt)


def two_site_gate_from_tensors(db):
    t = gates.trotter_tensor(db)
    g = np.einsum("ijs,kls->ikjl", t[:, :, :, 0, 0, 0], t[:, :, :, 0, 0, 0])
    return g.reshape(4, 4) / math.cosh(db / 2) ** 3


@given(st.floats(1e-6, 1.0))
@settings(max_examples=40, deadline=None)
def test_two_site_gate_matches_expm_oracle(db):
    zz = np.kron(gates.PAULI_Z, gates.PAULI_Z)
    exact = scipy.linalg.expm(0.5 * db * zz)
    assert np.abs(two_site_gate_from_tensors(db) - exact).max() < 1e-12


def test_interaction_tensor_edge_legs():
    t = gates.interaction_tensor(0.3, (True, False, True, False))
    assert t.shape == (2, 2, 2, 1, 2, 1)
    # two active legs carry cosh(db/2)^(2/2)
    np.testing.assert_allclose(t[:, :, 0, 0, 0, 0], math.cosh(0.15) * np.eye(2))


def test_field_halfstep_identity():
    m = gates.field_halfstep_matrix(gates.ModelParams(h=0.0, delta=0.0, dbeta=0.3))
    np.testing.assert_allclose(m, np.eye(2), atol=1e-15)


def test_field_halfstep_matches_hyperbolic_form():
    m = gates.field_halfstep_matrix(gates.ModelParams(h=1.0, delta=0.0, dbeta=0.4))
    want = math.cosh(0.1) * np.eye(2) + math.sinh(0.1) * gates.PAULI_X
    np.testing.assert_allclose(m, want, atol=1e-14)


def test_field_halfstep_with_bias_matches_expm():
    p = gates.ModelParams(h=2.0, delta=1e-6, dbeta=0.01)
    m = gates.field_halfstep_matrix(p)
    want = scipy.linalg.expm(p.dbeta / 4 * (p.h * gates.PAULI_X + p.delta * gates.PAULI_Z))
    np.testing.assert_allclose(m, want, atol=1e-14)


@given(
    st.floats(0.0, 5.0),
    st.floats(0.0, 1e-3),
    st.floats(1e-5, 1.0),
)
@settings(max_examples=50, deadline=None)
def test_field_halfstep_symmetric_positive_definite(h, delta, db):
    m = gates.field_halfstep_matrix(gates.ModelParams(h=h, delta=delta, dbeta=db))
    assert np.abs(m - m.T).max() < 1e-13
    assert np.all(np.linalg.eigvalsh(m) > 0)


def test_classical_tensor_is_trotter_tensor():
    assert np.array_equal(gates.classical_ising_tensor(0.7), gates.interaction_tensor(0.7))
