"""Desk-scale oracle equivalences: tensor-network results checked against
brute-force state vectors, dense thermal states, and direct optimization.

These run in seconds to minutes on small lattices and are exposed both to the
command line (oracle-check) and to the test suite.
"""

from __future__ import annotations

import math
import time

import numpy as np

from . import finite, gates, peps
from .tensors import svd
from .truncation import optimize_isometry

H_DEFAULT = 2.0 * gates.H0 / 3.0


def _polar(x: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(x, full_matrices=False)
    return u @ vt


# ---------------------------------------------------------------------------
# (a) interaction gate reconstruction


def check_gate_reconstruction(dbeta: float = 0.2) -> tuple[bool, str]:
    """Two interaction tensors joined by one bond reproduce the two-site gate.

    Each unused leg is pinned to index 0 and contributes a cosh^(1/2) factor
    of bookkeeping (six legs here).
    """
    t = gates.trotter_tensor(dbeta)
    g = np.einsum("ijs,kls->ikjl", t[:, :, :, 0, 0, 0], t[:, :, :, 0, 0, 0])
    g = g.reshape(4, 4) / math.cosh(dbeta / 2.0) ** 3
    zz = np.kron(gates.PAULI_Z, gates.PAULI_Z)
    vals, vecs = np.linalg.eigh(zz)
    exact = (vecs * np.exp(0.5 * dbeta * vals)) @ vecs.T
    err = float(np.abs(g - exact).max())
    return err < 1e-12, f"max gate error {err:.2e}"


# ---------------------------------------------------------------------------
# (b) enlarged-tensor norm against the 16-dimensional state vector


def check_enlarged_norm(n: int = 2, dbeta: float = 0.3) -> tuple[bool, str]:
    lat = finite.FiniteLattice.initial(n)
    b = finite.absorb_gate(lat, dbeta)
    psi = finite.exact_contract(b)
    n_peps = float(psi @ psi)
    hmat = finite.dense_hamiltonian(n, h=0.0)
    u = finite.purified_halfmatrix(hmat, dbeta)
    n_oracle = float(np.sum(u * u))
    rel = abs(n_peps - n_oracle) / n_oracle
    return rel < 1e-12, f"relative norm error {rel:.2e}"


# ---------------------------------------------------------------------------
# (c) norm-based isometry versus direct fidelity maximization


def _fidelity_objective(b_lat: finite.FiniteLattice, psi_b: np.ndarray):
    norm_b = math.sqrt(float(psi_b @ psi_b))
    orbits = finite.symmetry_orbits(b_lat.n)

    def objective(w: np.ndarray) -> float:
        trial = b_lat.copy()
        for bond in trial.bonds():
            trial.isometries[bond] = w
        psi_a = finite.exact_contract(trial)
        na = math.sqrt(float(psi_a @ psi_a))
        return float(psi_a @ psi_b) / (na * norm_b)

    return objective, orbits


def _ascend(objective, w0: np.ndarray, iters: int = 400, fd: float = 1e-6):
    """Projected gradient ascent on the isometry manifold with a numerical
    gradient; deterministic and dependency-free."""
    w = w0.copy()
    best = objective(w)
    step = 0.05
    for _ in range(iters):
        grad = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            dw = np.zeros_like(w)
            dw[idx] = fd
            grad[idx] = (objective(_polar(w + dw)) - objective(_polar(w - dw))) / (2 * fd)
        improved = False
        while step > 1e-12:
            w_try = _polar(w + step * grad)
            f_try = objective(w_try)
            if f_try > best + 1e-16:
                w, best = w_try, f_try
                improved = True
                step = min(step * 1.5, 0.5)
                break
            step *= 0.5
        if not improved:
            break
    return w, best


def check_fidelity_vs_norm(dbeta: float = 0.1) -> tuple[bool, str]:
    """On 2x2, the norm-optimized W reaches the fidelity of the best W found
    by directly maximizing the overlap with the exact enlarged state."""
    h = H_DEFAULT
    params = gates.ModelParams(h=h, dbeta=dbeta)
    half = gates.field_halfstep_matrix(params)
    lat = finite.FiniteLattice.initial(2)
    # one exact growth step to D=2
    lat = finite.apply_field(lat, half)
    lat = finite.materialize(finite.absorb_gate(lat, dbeta))
    lat = finite.apply_field(lat, half)
    lat = finite.normalize(lat)
    # the next gate needs truncation 4 -> 2
    lat = finite.apply_field(lat, half)
    b_lat = finite.absorb_gate(lat, dbeta)

    swept, _ = finite.sweep_update(b_lat, 2, tol_w=1e-12, max_sweeps=60)
    w_norm = swept.isometries[("h", 0, 0)]

    psi_b = finite.exact_contract(b_lat)
    objective, _ = _fidelity_objective(b_lat, psi_b)
    f_norm = objective(w_norm)

    best = -np.inf
    rng = np.random.default_rng(7)
    starts = [w_norm] + [_polar(w_norm + 0.3 * rng.standard_normal(w_norm.shape)) for _ in range(3)]
    for w0 in starts:
        _, f = _ascend(objective, w0)
        best = max(best, f)
    gap = best - f_norm
    return gap < 1e-6, f"fidelity gap {gap:.2e} (norm-based {f_norm:.12f}, direct {best:.12f})"


# ---------------------------------------------------------------------------
# (d) finite-lattice thermal state against dense exact diagonalization


def check_finite_thermal(
    beta_max: float = 1.0,
    dbeta: float = 1e-3,
    d_bond: int = 4,
    tolerance: float = 1e-3,
) -> tuple[bool, str]:
    """Evolved 3x3 purification against the dense thermal state.

    Known to fail at its stated parameters: a single optimal truncation of
    the quasi-exact D=5 state to D=4 already errs by 1.2e-3 on the
    corner-corner ZZ correlator at beta=1, i.e. the target sits below the
    D=4 representability floor; the evolved trajectory accumulates
    variational drag on top (about 8e-3 on the central X).  The same
    trajectory at D=5 meets the tolerance thirtyfold over.
    """
    h = H_DEFAULT
    cfg = finite.FiniteEvolutionConfig(
        n=3, h=h, D=d_bond, m_mps=25, dbeta=dbeta, beta_max=beta_max, tol_w=1e-9
    )
    lat = finite.FiniteLattice.initial(3, cfg.m_mps)
    z = gates.PAULI_Z
    x = gates.PAULI_X
    hmat = finite.dense_hamiltonian(3, h)
    checks = [
        ("X(1,1)", {(1, 1): x}, finite.site_operator(9, 4, x)),
        (
            "Z(0,0)Z(2,2)",
            {(0, 0): z, (2, 2): z},
            finite.site_operator(9, 0, z) @ finite.site_operator(9, 8, z),
        ),
        (
            "Z(1,1)Z(1,2)",
            {(1, 1): z, (1, 2): z},
            finite.site_operator(9, 4, z) @ finite.site_operator(9, 5, z),
        ),
    ]
    steps = int(round(beta_max / dbeta))
    sample_every = max(1, steps // 4)
    worst = 0.0
    worst_at = ""
    for k in range(steps):
        lat = finite.finite_step(lat, cfg)
        if (k + 1) % sample_every == 0 or k + 1 == steps:
            beta = (k + 1) * dbeta
            for name, ins, op in checks:
                err = abs(
                    finite.expectation(lat, ins)
                    - finite.thermal_expectation(hmat, beta, op)
                )
                if err > worst:
                    worst = err
                    worst_at = f"{name} at beta={beta:.3g}"
    return worst < tolerance, f"worst observable error {worst:.2e} ({worst_at}, D={d_bond})"


# ---------------------------------------------------------------------------
# (e) eigenvector isometry dominates random isometries


def check_isometry_dominance(trials: int = 100_000) -> tuple[bool, str]:
    rng = np.random.default_rng(20240311)
    e = rng.standard_normal((6, 6))
    e = 0.5 * (e + e.T)
    w, merit = optimize_isometry(e, 3)
    q = rng.standard_normal((trials, 6, 3))
    qs, _ = np.linalg.qr(q)
    merits = np.einsum("tik,ij,tjk->t", qs, e, qs)
    margin = merit - float(merits.max())
    return margin >= -1e-10, f"margin over {trials} random isometries {margin:.3e}"


# ---------------------------------------------------------------------------
# (f) gauge transform orthogonality and alignment optimality


def check_gauge_transform(trials: int = 10_000) -> tuple[bool, str]:
    rng = np.random.default_rng(5)
    d = 3
    w_old = np.linalg.qr(rng.standard_normal((2 * d, d)))[0]
    w_new = _polar(w_old + 0.2 * rng.standard_normal((2 * d, d)))
    u, _, v = svd(w_new.T @ w_old)
    g = u @ v.T
    orth = float(np.abs(g.T @ g - np.eye(d)).max())
    best = float(np.linalg.norm(w_new - w_old @ g.T))
    for _ in range(trials):
        q = np.linalg.qr(rng.standard_normal((d, d)))[0]
        if float(np.linalg.norm(w_new - w_old @ q.T)) < best - 1e-12:
            return False, "a random rotation beat the aligned transform"
    return orth < 1e-12, f"orthogonality {orth:.2e}, best distance {best:.6f}"


def run_all(
    n: int = 2, fast: bool = False, include_finite_thermal: bool = True
) -> list[tuple[str, bool, str]]:
    """Run the oracle equivalences; ``n`` sizes the state-vector lattice and
    ``fast`` skips the multi-second trajectory and optimization checks."""
    checks = [
        ("gate-reconstruction", lambda: check_gate_reconstruction()),
        (f"enlarged-norm-{n}x{n}", lambda: check_enlarged_norm(n)),
        ("isometry-dominance", lambda: check_isometry_dominance()),
        ("gauge-transform", lambda: check_gauge_transform()),
    ]
    if not fast:
        checks.append(("fidelity-vs-norm-2x2", lambda: check_fidelity_vs_norm()))
        if include_finite_thermal:
            checks.append(("finite-thermal-3x3", lambda: check_finite_thermal()))
    results = []
    for name, fn in checks:
        t0 = time.time()
        passed, detail = fn()
        results.append((name, passed, f"{detail} ({time.time() - t0:.1f}s)"))
    return results
