"""Open-boundary N x N lattices: boundary-MPS contraction, per-bond isometry
sweeps, and the exact-contraction / exact-diagonalization oracles.

The self-consistent truncation works exactly as on the infinite lattice, but
finite networks are contracted with a boundary matrix product state absorbing
lattice rows, and inequivalent bonds carry independent isometries.  Bonds
related by the lattice's dihedral symmetry share one isometry; every orbit
contains a horizontal bond, so sweeps visit horizontal representatives in
row-major order and mirror the result.

Site tensors follow the (i, a, u, r, d, l) convention with extent-1 legs on
the lattice edge.  Bonds are named ('h', i, j) for (i,j)-(i,j+1) and
('v', i, j) for (i,j)-(i+1,j).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import gates, peps
from .tensors import DimensionMismatchError
from .truncation import Isometry, optimize_isometry, projector_change

logger = logging.getLogger(__name__)

Bond = tuple[str, int, int]

EXACT_CONTRACT_LIMIT = 2**24


class SizeLimitError(ValueError):
    """The requested dense computation exceeds the supported size."""


# ---------------------------------------------------------------------------
# lattice container and symmetry bookkeeping


@dataclass
class FiniteLattice:
    """Square open-boundary lattice of site tensors with per-bond isometries."""

    tensors: list[list[np.ndarray]]
    isometries: dict[Bond, np.ndarray] = field(default_factory=dict)
    m_mps: int = 16

    @property
    def n(self) -> int:
        return len(self.tensors)

    @classmethod
    def initial(cls, n: int, m_mps: int = 16) -> "FiniteLattice":
        a0 = peps.initial_tensor()
        return cls([[a0.copy() for _ in range(n)] for _ in range(n)], {}, m_mps)

    def bonds(self) -> list[Bond]:
        n = self.n
        out: list[Bond] = []
        for i in range(n):
            for j in range(n - 1):
                out.append(("h", i, j))
        for i in range(n - 1):
            for j in range(n):
                out.append(("v", i, j))
        return out

    def copy(self) -> "FiniteLattice":
        return FiniteLattice(
            [[t.copy() for t in row] for row in self.tensors],
            dict(self.isometries),
            self.m_mps,
        )


def bond_sites(bond: Bond) -> tuple[tuple[int, int], tuple[int, int]]:
    kind, i, j = bond
    if kind == "h":
        return (i, j), (i, j + 1)
    return (i, j), (i + 1, j)


def _symmetry_maps(n: int):
    """The eight coordinate maps of the square's dihedral group."""

    def rot(p):
        return (p[1], n - 1 - p[0])

    def ref(p):
        return (p[0], n - 1 - p[1])

    maps = []
    for k in range(4):
        for use_ref in (False, True):
            def f(p, k=k, use_ref=use_ref):
                for _ in range(k):
                    p = rot(p)
                return ref(p) if use_ref else p

            maps.append(f)
    return maps


def _bond_image(bond: Bond, f) -> Bond:
    p, q = (f(s) for s in bond_sites(bond))
    (i1, j1), (i2, j2) = sorted((p, q))
    if i1 == i2:
        return ("h", i1, j1)
    return ("v", i1, j1)


def symmetry_orbits(n: int) -> dict[Bond, Bond]:
    """Map every bond to its orbit representative (a horizontal bond)."""
    maps = _symmetry_maps(n)
    rep: dict[Bond, Bond] = {}
    lattice = FiniteLattice.initial(n)
    for bond in lattice.bonds():
        images = {_bond_image(bond, f) for f in maps}
        horizontal = sorted(b for b in images if b[0] == "h")
        rep[bond] = horizontal[0]
    return rep


# ---------------------------------------------------------------------------
# gate application


def _active_legs(n: int, i: int, j: int) -> tuple[bool, bool, bool, bool]:
    return (i > 0, j < n - 1, i < n - 1, j > 0)


def apply_field(lat: FiniteLattice, m: np.ndarray) -> FiniteLattice:
    out = lat.copy()
    for row in out.tensors:
        for c in range(len(row)):
            row[c] = peps.apply_spin_matrix(row[c], m)
    return out


def absorb_gate(lat: FiniteLattice, dbeta: float) -> FiniteLattice:
    """Absorb one interaction gate; every internal bond extent doubles."""
    n = lat.n
    out = lat.copy()
    for i in range(n):
        for j in range(n):
            t = gates.interaction_tensor(dbeta, _active_legs(n, i, j))
            out.tensors[i][j] = peps.absorb_trotter(out.tensors[i][j], t)
    out.isometries = {}
    return out


# ---------------------------------------------------------------------------
# double-layer transfer tensors


def _closed_site(ket: np.ndarray, bra: np.ndarray) -> np.ndarray:
    """Fused double-layer tensor with (ket, bra) pair order on every leg."""
    t = np.einsum("iaurdl,iaURDL->uUrRdDlL", ket, bra)
    s = t.shape
    return np.ascontiguousarray(t).reshape(
        s[0] * s[1], s[2] * s[3], s[4] * s[5], s[6] * s[7]
    )


def _inserted_site(ket: np.ndarray, bra: np.ndarray, op: np.ndarray) -> np.ndarray:
    t = np.einsum("jaurdl,ij,iaURDL->uUrRdDlL", ket, op, bra)
    s = t.shape
    return np.ascontiguousarray(t).reshape(
        s[0] * s[1], s[2] * s[3], s[4] * s[5], s[6] * s[7]
    )


def site_isometries(lat: FiniteLattice, i: int, j: int) -> list[np.ndarray | None]:
    """The isometries acting on the four legs of site (i, j), edge legs None."""
    n = lat.n
    ws: list[np.ndarray | None] = [None] * 4
    if i > 0:
        ws[0] = lat.isometries.get(("v", i - 1, j))
    if j < n - 1:
        ws[1] = lat.isometries.get(("h", i, j))
    if i < n - 1:
        ws[2] = lat.isometries.get(("v", i, j))
    if j > 0:
        ws[3] = lat.isometries.get(("h", i, j - 1))
    return ws


def renormalized_site(lat: FiniteLattice, i: int, j: int) -> np.ndarray:
    """Site tensor with every leg's bond isometry applied."""
    t = lat.tensors[i][j]
    for pos, w in enumerate(site_isometries(lat, i, j)):
        if w is not None:
            t = np.moveaxis(np.tensordot(t, w, axes=([2 + pos], [0])), -1, 2 + pos)
    return t


def transfer_lattice(
    lat: FiniteLattice, insertions: dict[tuple[int, int], np.ndarray] | None = None
) -> list[list[np.ndarray]]:
    """Closed double-layer lattice of the renormalized state, with optional
    spin-line operator insertions at given sites."""
    insertions = insertions or {}
    out = []
    for i in range(lat.n):
        row = []
        for j in range(lat.n):
            ket = renormalized_site(lat, i, j)
            op = insertions.get((i, j))
            row.append(
                _closed_site(ket, ket) if op is None else _inserted_site(ket, ket, op)
            )
        out.append(row)
    return out


# ---------------------------------------------------------------------------
# boundary MPS


@dataclass
class BoundaryMps:
    """Chain of (left, phys, right) tensors with a separated log scale."""

    tensors: list[np.ndarray]
    log_scale: float = 0.0
    trunc_errors: tuple[float, ...] = ()

    def bond_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[2] for t in self.tensors[:-1])


def _trivial_mps(extents: list[int]) -> BoundaryMps:
    return BoundaryMps([np.ones((1, e, 1)) for e in extents])


def _compress(tensors: list[np.ndarray], m_max: int) -> tuple[list[np.ndarray], float, float]:
    """Canonicalize and truncate; returns (tensors, discarded weight, log norm)."""
    n = len(tensors)
    # left-to-right QR
    for c in range(n - 1):
        l, p, r = tensors[c].shape
        q, rr = np.linalg.qr(tensors[c].reshape(l * p, r))
        tensors[c] = q.reshape(l, p, q.shape[1])
        tensors[c + 1] = np.tensordot(rr, tensors[c + 1], axes=([1], [0]))
    # right-to-left SVD truncation
    discarded = 0.0
    for c in range(n - 1, 0, -1):
        l, p, r = tensors[c].shape
        u, s, vt = np.linalg.svd(tensors[c].reshape(l, p * r), full_matrices=False)
        keep = min(m_max, s.size)
        w2 = float(np.sum(s**2))
        if w2 > 0:
            discarded += float(np.sum(s[keep:] ** 2)) / w2
        tensors[c] = vt[:keep].reshape(keep, p, r)
        tensors[c - 1] = np.tensordot(
            tensors[c - 1], u[:, :keep] * s[:keep], axes=([2], [0])
        )
    scale = float(np.abs(tensors[0]).max())
    log_norm = 0.0
    if scale > 0:
        tensors[0] = tensors[0] / scale
        log_norm = math.log(scale)
    return tensors, discarded, log_norm


def absorb_row(mps: BoundaryMps, row: list[np.ndarray], m_max: int) -> BoundaryMps:
    """Absorb one row of transfer tensors from above, then truncate.

    The MPS physical legs must match the row tensors' up legs; afterwards the
    physical legs are the row's down legs.  Bond fusion order is
    (mps bond, lattice bond) on both sides.
    """
    new = []
    for t_mps, t_row in zip(mps.tensors, row):
        x = np.tensordot(t_mps, t_row, axes=([1], [0]))  # (alpha, beta, r, d, l)
        x = x.transpose(0, 4, 3, 1, 2)                   # (alpha, l, d, beta, r)
        a, l, d, b, r = x.shape
        new.append(np.ascontiguousarray(x).reshape(a * l, d, b * r))
    new, discarded, log_norm = _compress(new, m_max)
    return BoundaryMps(
        new,
        mps.log_scale + log_norm,
        mps.trunc_errors + (discarded,),
    )


def boundary_contract(rows: list[list[np.ndarray]], m_mps: int) -> BoundaryMps:
    """Absorb transfer-tensor rows from the lattice edge inward."""
    mps = _trivial_mps([r.shape[0] for r in rows[0]])
    for row in rows:
        mps = absorb_row(mps, row, m_mps)
    return mps


def _flip_vertical(tl: list[list[np.ndarray]]) -> list[list[np.ndarray]]:
    """Reverse the row order, swapping up and down legs."""
    return [[t.transpose(2, 1, 0, 3) for t in row] for row in reversed(tl)]


def mps_close(mps: BoundaryMps) -> tuple[float, float]:
    """Contract an MPS whose physical legs all have extent one.

    Returns (sign, log magnitude).
    """
    m = np.ones((1, 1))
    for t in mps.tensors:
        if t.shape[1] != 1:
            raise DimensionMismatchError("cannot close an MPS with open physical legs")
        m = m @ t[:, 0, :]
        s = float(np.abs(m).max())
        if s == 0:
            return 0.0, -math.inf
    val = float(m[0, 0])
    if val == 0:
        return 0.0, -math.inf
    return math.copysign(1.0, val), math.log(abs(val)) + mps.log_scale


def contract_closed(tl: list[list[np.ndarray]], m_mps: int) -> tuple[float, float]:
    """(sign, log value) of a fully closed transfer lattice."""
    mps = boundary_contract(tl, m_mps)
    return mps_close(mps)


def lattice_norm(lat: FiniteLattice) -> tuple[float, float]:
    """(sign, log of <psi|psi>) for the renormalized lattice."""
    return contract_closed(transfer_lattice(lat), lat.m_mps)


def expectation(
    lat: FiniteLattice, insertions: dict[tuple[int, int], np.ndarray]
) -> float:
    """Expectation value of a product of single-site spin operators."""
    sn, ln_n = contract_closed(transfer_lattice(lat, insertions), lat.m_mps)
    sd, ln_d = contract_closed(transfer_lattice(lat), lat.m_mps)
    if sd == 0.0:
        raise FloatingPointError("state has zero norm")
    if sn == 0.0:
        return 0.0
    return sn * sd * math.exp(ln_n - ln_d)


# ---------------------------------------------------------------------------
# bond environments on the finite lattice


def _row_sandwich_environment(
    top: BoundaryMps,
    bottom: BoundaryMps,
    row: list[np.ndarray],
    open_cols: tuple[int, int],
    open_shapes: tuple[tuple[int, int], tuple[int, int]],
) -> np.ndarray:
    """Contract top MPS, one lattice row with two open-axis tensors, and
    bottom MPS into the bond environment matrix."""
    jl, jr = open_cols

    # left accumulator up to and including the left open site
    acc = np.ones((1, 1, 1))  # (top bond, mid bond, bottom bond)
    open_left = None
    for c in range(jl + 1):
        t_top = top.tensors[c]
        t_bot = bottom.tensors[c]
        t = row[c]
        x = np.tensordot(acc, t_top, axes=([0], [0]))          # (mid, bot, u, topR)
        x = np.tensordot(x, t, axes=([0, 2], [3, 0]))          # (bot, topR, r, d)
        x = np.tensordot(x, t_bot, axes=([0, 3], [0, 1]))      # (topR, r, botR)
        if c == jl:
            open_left = x
        else:
            acc = x
    # right accumulator down to and including the right open site
    acc = np.ones((1, 1, 1))
    open_right = None
    n = len(row)
    for c in range(n - 1, jr - 1, -1):
        t_top = top.tensors[c]
        t_bot = bottom.tensors[c]
        t = row[c]
        x = np.tensordot(acc, t_top, axes=([0], [2]))          # (mid, bot, topL, u)
        x = np.tensordot(x, t, axes=([0, 3], [1, 0]))          # (bot, topL, d, l.)
        x = np.tensordot(x, t_bot, axes=([0, 2], [2, 1]))      # (topL, lo, botL)
        if c == jr:
            open_right = x
        else:
            acc = x
    # join: sum over top bond, bottom bond and the ket component of the bond
    dl_ket, kexp = open_shapes[0]
    dr_ket, lexp = open_shapes[1]
    hl = open_left.reshape(open_left.shape[0], dl_ket, kexp, open_left.shape[2])
    hr = open_right.reshape(open_right.shape[0], dr_ket, lexp, open_right.shape[2])
    e = np.einsum("tckb,tclb->kl", hl, hr)
    return e * math.exp(top.log_scale + bottom.log_scale)


def _open_site_pair(
    lat: FiniteLattice, bond: Bond
) -> tuple[np.ndarray, np.ndarray, tuple[tuple[int, int], tuple[int, int]]]:
    """Double-layer tensors for the two sites flanking a horizontal bond, with
    the bra legs on the bond left unrenormalized."""
    (i, jl), (_, jr) = bond_sites(bond)
    ket_l = renormalized_site(lat, i, jl)
    ket_r = renormalized_site(lat, i, jr)
    bra_l = lat.tensors[i][jl]
    bra_r = lat.tensors[i][jr]
    ws_l = site_isometries(lat, i, jl)
    ws_r = site_isometries(lat, i, jr)
    for pos, w in enumerate(ws_l):
        if pos == 1 or w is None:
            continue
        bra_l = np.moveaxis(np.tensordot(bra_l, w, axes=([2 + pos], [0])), -1, 2 + pos)
    for pos, w in enumerate(ws_r):
        if pos == 3 or w is None:
            continue
        bra_r = np.moveaxis(np.tensordot(bra_r, w, axes=([2 + pos], [0])), -1, 2 + pos)
    t_l = np.einsum("iaurdl,iaURDL->uUrRdDlL", ket_l, bra_l)
    t_r = np.einsum("iaurdl,iaURDL->uUrRdDlL", ket_r, bra_r)
    sl, sr = t_l.shape, t_r.shape
    t_l = np.ascontiguousarray(t_l).reshape(
        sl[0] * sl[1], sl[2] * sl[3], sl[4] * sl[5], sl[6] * sl[7]
    )
    t_r = np.ascontiguousarray(t_r).reshape(
        sr[0] * sr[1], sr[2] * sr[3], sr[4] * sr[5], sr[6] * sr[7]
    )
    shapes = ((ket_l.shape[3], bra_l.shape[3]), (ket_r.shape[5], bra_r.shape[5]))
    return t_l, t_r, shapes


def finite_bond_environment(lat: FiniteLattice, bond: Bond) -> np.ndarray:
    """Bond environment matrix for one horizontal bond, symmetrized."""
    if bond[0] != "h":
        raise ValueError("finite_bond_environment expects a horizontal bond; "
                         "transpose the lattice for vertical ones")
    kind, i, j = bond
    tl = transfer_lattice(lat)
    t_l, t_r, shapes = _open_site_pair(lat, bond)
    row = list(tl[i])
    row[j] = t_l
    row[j + 1] = t_r
    top = boundary_contract(tl[:i], lat.m_mps) if i > 0 else _trivial_mps(
        [t.shape[0] for t in row]
    )
    if i < lat.n - 1:
        bottom = boundary_contract(_flip_vertical(tl[i + 1 :]), lat.m_mps)
    else:
        bottom = _trivial_mps([t.shape[2] for t in row])
    e = _row_sandwich_environment(top, bottom, row, (j, j + 1), shapes)
    return 0.5 * (e + e.T)


def transpose_lattice(lat: FiniteLattice) -> FiniteLattice:
    """Reflect through the main diagonal; vertical bonds become horizontal."""
    n = lat.n
    tensors = [
        [lat.tensors[j][i].transpose(0, 1, 5, 4, 3, 2) for j in range(n)]
        for i in range(n)
    ]
    isos = {}
    for (kind, i, j), w in lat.isometries.items():
        isos[("h" if kind == "v" else "v", j, i)] = w
    return FiniteLattice(tensors, isos, lat.m_mps)


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepDiagnostics:
    sweeps: int = 0
    max_proj_change: list[float] = field(default_factory=list)
    merits: dict[Bond, float] = field(default_factory=dict)


def _bond_gram_isometry(lat: FiniteLattice, bond: Bond, d_target: int) -> np.ndarray:
    """Environment-free initial isometry from the flanking tensors' Gram sums."""
    (i1, j1), (i2, j2) = bond_sites(bond)
    axis1 = 3 if bond[0] == "h" else 4   # r leg of the first site
    axis2 = 5 if bond[0] == "h" else 2   # l leg of the second site
    t1, t2 = lat.tensors[i1][j1], lat.tensors[i2][j2]
    rest1 = [ax for ax in range(6) if ax != axis1]
    rest2 = [ax for ax in range(6) if ax != axis2]
    g = np.tensordot(t1, t1, axes=(rest1, rest1)) + np.tensordot(
        t2, t2, axes=(rest2, rest2)
    )
    g = 0.5 * (g + g.T)
    from .tensors import symm_eig

    return symm_eig(g).vectors[:, :d_target]


def sweep_update(
    b_lat: FiniteLattice,
    d_target: int,
    tol_w: float = 1e-8,
    max_sweeps: int = 30,
) -> tuple[FiniteLattice, SweepDiagnostics]:
    """Optimize every bond isometry by repeated sweeps until all projectors
    are stationary; isometries are shared within dihedral symmetry orbits.

    ``b_lat`` holds the gate-enlarged tensors.  Returns a lattice whose
    ``isometries`` are converged; the renormalized site tensors are obtained
    with :func:`renormalized_site` (or :func:`materialize`).
    """
    orbits = symmetry_orbits(b_lat.n)
    reps = sorted({r for r in orbits.values()}, key=lambda b: (b[1], b[2]))
    lat = b_lat.copy()

    needs_truncation = {}
    for rep in reps:
        (i1, j1), _ = bond_sites(rep)
        kexp = lat.tensors[i1][j1].shape[3]
        needs_truncation[rep] = kexp > d_target
        if needs_truncation[rep]:
            w0 = _bond_gram_isometry(lat, rep, d_target)
            for b, r in orbits.items():
                if r == rep:
                    lat.isometries[b] = w0

    diag = SweepDiagnostics()
    if not any(needs_truncation.values()):
        return lat, diag

    for sweep in range(1, max_sweeps + 1):
        max_change = 0.0
        for rep in reps:
            if not needs_truncation[rep]:
                continue
            e = finite_bond_environment_any(lat, rep)
            w_new, merit = optimize_isometry(e, d_target)
            w_old = lat.isometries[rep]
            change = projector_change(w_new.projector, w_old @ w_old.T, e)
            max_change = max(max_change, change)
            for b, r in orbits.items():
                if r == rep:
                    lat.isometries[b] = w_new.W
            diag.merits[rep] = merit
        diag.sweeps = sweep
        diag.max_proj_change.append(max_change)
        if max_change < tol_w:
            return lat, diag
    raise RuntimeError(
        f"bond sweeps not converged after {max_sweeps} sweeps "
        f"(last max projector change {diag.max_proj_change[-1]:.3e})"
    )


def finite_bond_environment_any(lat: FiniteLattice, bond: Bond) -> np.ndarray:
    """Bond environment for either orientation, via lattice transposition."""
    if bond[0] == "h":
        return finite_bond_environment(lat, bond)
    kind, i, j = bond
    return finite_bond_environment(transpose_lattice(lat), ("h", j, i))


def materialize(lat: FiniteLattice) -> FiniteLattice:
    """Apply all bond isometries, producing a lattice with plain tensors."""
    out = FiniteLattice(
        [[renormalized_site(lat, i, j) for j in range(lat.n)] for i in range(lat.n)],
        {},
        lat.m_mps,
    )
    return out


def normalize(lat: FiniteLattice) -> FiniteLattice:
    """Scale all tensors so <psi|psi> = 1."""
    sn, ln_n = lattice_norm(lat)
    if sn <= 0:
        raise FloatingPointError("lattice norm is not positive")
    out = lat.copy()
    scale = math.exp(-ln_n / (2 * lat.n * lat.n))
    for row in out.tensors:
        for c in range(len(row)):
            row[c] = row[c] * scale
    return out


# ---------------------------------------------------------------------------
# finite evolution


@dataclass(frozen=True)
class FiniteEvolutionConfig:
    n: int
    h: float
    D: int
    m_mps: int = 16
    delta: float = 0.0
    dbeta: float = 1e-2
    beta_max: float = 1.0
    tol_w: float = 1e-8
    max_sweeps: int = 30


def finite_step(lat: FiniteLattice, cfg: FiniteEvolutionConfig) -> FiniteLattice:
    """One second-order step on the finite lattice."""
    params = gates.ModelParams(h=cfg.h, delta=cfg.delta, dbeta=cfg.dbeta)
    half = gates.field_halfstep_matrix(params)
    lat = apply_field(lat, half)
    b_lat = absorb_gate(lat, cfg.dbeta)
    interior_extent = b_lat.tensors[0][1].shape[5] if cfg.n > 1 else 1
    if interior_extent > cfg.D:
        swept, _ = sweep_update(b_lat, cfg.D, cfg.tol_w, cfg.max_sweeps)
        lat = materialize(swept)
    else:
        lat = materialize(b_lat)
    lat = apply_field(lat, half)
    return normalize(lat)


def evolve_finite(
    cfg: FiniteEvolutionConfig,
    sample_betas: list[float] | None = None,
    observables: list[dict[tuple[int, int], np.ndarray]] | None = None,
):
    """Run a finite-lattice trajectory, sampling the given insertion products
    at (approximately) the requested inverse temperatures.

    Yields (beta, [values]) tuples.
    """
    lat = FiniteLattice.initial(cfg.n, cfg.m_mps)
    beta = 0.0
    targets = sorted(sample_betas or [])
    idx = 0
    steps = int(round(cfg.beta_max / cfg.dbeta))
    for k in range(steps):
        lat = finite_step(lat, cfg)
        beta = (k + 1) * cfg.dbeta
        while idx < len(targets) and beta >= targets[idx] - cfg.dbeta / 2:
            vals = [expectation(lat, ins) for ins in (observables or [])]
            yield beta, vals, lat
            idx += 1
    if not targets:
        yield beta, [expectation(lat, ins) for ins in (observables or [])], lat


# ---------------------------------------------------------------------------
# exact oracles


def site_operator(n_sites: int, m: int, op: np.ndarray) -> np.ndarray:
    """Embed a single-site operator at site ``m`` of a 2^n_sites spin space
    (site 0 most significant)."""
    out = np.array([[1.0]])
    for k in range(n_sites):
        out = np.kron(out, op if k == m else np.eye(2))
    return out


def dense_hamiltonian(n: int, h: float, delta: float = 0.0) -> np.ndarray:
    """Dense transverse-field Ising Hamiltonian of the open n x n lattice."""
    n_sites = n * n
    if 2**n_sites > 2**12:
        raise SizeLimitError(f"dense Hamiltonian for {n_sites} sites is too large")
    dim = 2**n_sites
    hmat = np.zeros((dim, dim))

    def site(i, j):
        return i * n + j

    # ZZ terms are diagonal
    zdiag = np.empty((n_sites, dim))
    for m in range(n_sites):
        pattern = np.arange(dim) >> (n_sites - 1 - m) & 1
        zdiag[m] = 1.0 - 2.0 * pattern
    diag = np.zeros(dim)
    for i in range(n):
        for j in range(n):
            if j < n - 1:
                diag -= zdiag[site(i, j)] * zdiag[site(i, j + 1)]
            if i < n - 1:
                diag -= zdiag[site(i, j)] * zdiag[site(i + 1, j)]
            diag -= delta * zdiag[site(i, j)]
    hmat[np.arange(dim), np.arange(dim)] = diag
    for m in range(n_sites):
        hmat -= h * site_operator(n_sites, m, gates.PAULI_X)
    return hmat


def thermal_state(hmat: np.ndarray, beta: float) -> np.ndarray:
    """exp(-beta H) / Tr exp(-beta H) via the symmetric eigendecomposition."""
    vals, vecs = np.linalg.eigh(hmat)
    w = np.exp(-beta * (vals - vals.min()))
    rho = (vecs * w) @ vecs.T
    return rho / np.trace(rho)


def thermal_expectation(hmat: np.ndarray, beta: float, op: np.ndarray) -> float:
    return float(np.trace(thermal_state(hmat, beta) @ op))


def purified_halfmatrix(hmat: np.ndarray, beta: float) -> np.ndarray:
    """exp(-beta H / 2) as a matrix psi[spins, ancillas].

    The columns are the imaginary-time-evolved images of the unnormalized
    maximally entangled start sum_s |s>|s>, so this matrix IS the purified
    state vector, reshaped.
    """
    vals, vecs = np.linalg.eigh(hmat)
    return (vecs * np.exp(-0.5 * beta * vals)) @ vecs.T


def split_spin_ancilla(psi: np.ndarray, n_sites: int) -> np.ndarray:
    """Reorder a site-major (spin, ancilla)-interleaved state vector into a
    matrix psi[all spins, all ancillas]."""
    t = psi.reshape((2,) * (2 * n_sites))
    spins = [2 * k for k in range(n_sites)]
    ancillas = [2 * k + 1 for k in range(n_sites)]
    return np.ascontiguousarray(t.transpose(spins + ancillas)).reshape(
        2**n_sites, 2**n_sites
    )


def _row_state_tensor(row_tensors: list[np.ndarray]) -> np.ndarray:
    """Contract one lattice row of site tensors along its horizontal bonds.

    Returns axes (p_0..p_{n-1}, u_0..u_{n-1}, d_0..d_{n-1}) with p the fused
    (spin, ancilla) axis per site.  Edge legs must have extent 1.
    """
    n = len(row_tensors)
    cur = None
    for t in row_tensors:
        s = t.shape
        t5 = np.ascontiguousarray(t).reshape(4, s[2], s[3], s[4], s[5])  # p,u,r,d,l
        if cur is None:
            cur = t5[..., 0].transpose(0, 1, 3, 2)  # (p, u, d, r)
        else:
            cur = np.tensordot(cur, t5, axes=([-1], [4]))  # (..., p, u, r, d)
            cur = np.moveaxis(cur, -2, -1)                 # (..., p, u, d, r)
    cur = cur[..., 0]  # right edge leg
    perm = (
        [3 * j for j in range(n)] + [3 * j + 1 for j in range(n)] + [3 * j + 2 for j in range(n)]
    )
    return cur.transpose(perm)


def exact_contract(lat: FiniteLattice) -> np.ndarray:
    """Dense state vector of the finite PEPS.

    Sites are ordered row-major; each contributes one extent-4 axis fusing
    (spin, ancilla) C-order.  Site 0 is the most significant.
    """
    n = lat.n
    if 4 ** (n * n) > EXACT_CONTRACT_LIMIT:
        raise SizeLimitError(f"state dimension 4^{n * n} exceeds the dense limit")
    prev = None  # (phys so far ..., d_0 .. d_{n-1})
    for i in range(n):
        row = _row_state_tensor([renormalized_site(lat, i, j) for j in range(n)])
        if prev is None:
            prev = row[(slice(None),) * n + (0,) * n]  # top edge u legs
        else:
            k_phys = prev.ndim - n
            prev = np.tensordot(
                prev, row, axes=(list(range(k_phys, k_phys + n)), list(range(n, 2 * n)))
            )
    prev = prev[(Ellipsis,) + (0,) * n]  # bottom edge d legs
    return np.ascontiguousarray(prev).reshape(-1)
