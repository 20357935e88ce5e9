"""Self-consistent bond renormalization after an interaction gate.

A gate doubles the bond dimension; an isometry W (2D x D, orthonormal
columns) truncates it back.  The optimal W maximizes the norm of the
renormalized state, which reduces to an eigenvalue problem: contract the
whole network with one bra bond left open and unrenormalized to get the bond
environment matrix E, then keep the D leading eigenvectors of its symmetric
part.  Because the environment is built from already-renormalized tensors,
the procedure is iterated: renormalize, re-converge the environment, rebuild
E, re-optimize W, until the projector W W^T stops moving.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import peps
from .ctmrg import (
    CtmConfig,
    Environment,
    bond_environment,
    converge_env,
    gauge_accelerate,
)
from .tensors import DimensionMismatchError, symm_eig

logger = logging.getLogger(__name__)

_PADDED_WARNED = False


def _mark_padded_warned() -> None:
    global _PADDED_WARNED
    _PADDED_WARNED = True


__all__ = [
    "Isometry",
    "SelfConsistentConfig",
    "UpdateDiagnostics",
    "renormalize",
    "optimize_isometry",
    "local_bond_isometry",
    "self_consistent_update",
]


@dataclass(frozen=True)
class Isometry:
    """A 2D -> D truncation map with orthonormal columns."""

    W: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.W, dtype=np.float64)
        object.__setattr__(self, "W", w)
        gram = w.T @ w
        err = np.abs(gram - np.eye(w.shape[1])).max()
        if err > 1e-12:
            raise ValueError(f"columns not orthonormal: |W^T W - 1| = {err:.3e}")

    @property
    def projector(self) -> np.ndarray:
        """P = W W^T, the symmetric idempotent onto the kept subspace."""
        return self.W @ self.W.T

    @property
    def dims(self) -> tuple[int, int]:
        return self.W.shape


@dataclass(frozen=True)
class SelfConsistentConfig:
    """Outer-loop controls: projector tolerance, iteration budget, and the
    environment configuration used inside each iteration."""

    ctm: CtmConfig
    tol_w: float = 1e-10
    max_outer: int = 50

    def __post_init__(self):
        if self.tol_w <= 0:
            raise ValueError(f"tol_w must be positive, got {self.tol_w}")


@dataclass
class UpdateDiagnostics:
    """Per-outer-iteration trajectory of one gate truncation."""

    merits: list[float] = field(default_factory=list)
    proj_dists: list[float] = field(default_factory=list)
    env_iters: list[int] = field(default_factory=list)

    @property
    def outer_iterations(self) -> int:
        return len(self.proj_dists)

    def rows(self) -> list[tuple[int, float, int, float]]:
        """CSV-ready rows: (outer iteration, merit, env iterations, projector distance)."""
        return [
            (k, self.merits[k], self.env_iters[k], self.proj_dists[k])
            for k in range(self.outer_iterations)
        ]


def projector_change(p_new: np.ndarray, p_old: np.ndarray, e: np.ndarray) -> float:
    """Convergence measure for an isometry update.

    The raw Frobenius distance of the projectors is blind to spectral weight:
    when the truncation boundary falls inside a numerically degenerate tail of
    the bond environment (weights at the eigensolver noise floor), the kept
    subspace wobbles although the renormalized state is unchanged.  The
    effective distance is therefore the raw distance capped by the weighted
    impact |(P_new - P_old) E| / |E|, which measures what the change does to
    the state.
    """
    diff = p_new - p_old
    raw = float(np.linalg.norm(diff))
    scale = float(np.linalg.norm(e, 2))
    weighted = float(np.linalg.norm(diff @ e)) / scale if scale > 0 else raw
    return min(raw, weighted)


def renormalize(B: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Contract the isometry onto all four bond legs and re-symmetrize."""
    if B.shape[2] != W.shape[0]:
        raise DimensionMismatchError(
            f"bond extent {B.shape[2]} does not match isometry rows {W.shape[0]}"
        )
    out = np.einsum("iaurdl,ux,ry,dz,lw->iaxyzw", B, W, W, W, W, optimize=True)
    return peps.symmetrize_bonds(out)


def optimize_isometry(E: np.ndarray, D: int) -> tuple[Isometry, float]:
    """Leading eigenvectors of the (symmetric) bond environment.

    Returns the isometry and the figure of merit, the sum of the D leading
    eigenvalues, which equals the norm of the renormalized state when E was
    built from it.
    """
    e = np.asarray(E, dtype=np.float64)
    if e.ndim != 2 or e.shape[0] != e.shape[1]:
        raise DimensionMismatchError(f"bond environment must be square, got {e.shape}")
    if D > e.shape[0]:
        raise DimensionMismatchError(f"cannot keep {D} of {e.shape[0]} directions")
    res = symm_eig(e)
    vals = res.values
    if vals.size > D:
        scale = abs(vals[0]) if vals[0] != 0 else 1.0
        if abs(vals[D - 1]) <= 1e-14 * scale:
            # expected whenever D exceeds the state's effective bond rank
            # (early growth); warn once, then keep quiet
            level = logging.DEBUG if _PADDED_WARNED else logging.WARNING
            logger.log(level, "fewer than %d non-negligible bond-environment eigenvalues", D)
            _mark_padded_warned()
    w = res.vectors[:, :D]
    merit = float(vals[:D].sum())
    return Isometry(w), merit


def local_bond_isometry(B: np.ndarray, D: int) -> Isometry:
    """Environment-free starting isometry from the bond Gram matrix of B.

    The Gram matrix of one leg against the rest of the tensor is what the
    bond environment degenerates to when the surroundings are ignored; its
    leading eigenvectors select the gate's weight-carrying block, so for a
    small time step this starts close to the optimum (exactly the s = 0
    block selector as the step vanishes).
    """
    g = np.tensordot(
        B, B, axes=([0, 1, 2, 4, 5], [0, 1, 2, 4, 5])
    )  # contract everything but the right leg
    if D > g.shape[0]:
        raise DimensionMismatchError(f"cannot keep {D} of {g.shape[0]} directions")
    g = 0.5 * (g + g.T)
    res = symm_eig(g)
    return Isometry(res.vectors[:, :D])


def _open_transfers(
    Aprime: np.ndarray, B: np.ndarray, W: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    b_left = peps.transfer_tensor_b(Aprime, B, W, "r")
    b_right = peps.transfer_tensor_b(Aprime, B, W, "l")
    return b_left, b_right


def self_consistent_update(
    A_in: np.ndarray,
    B: np.ndarray,
    cfg: SelfConsistentConfig,
    D: int | None = None,
    env: Environment | None = None,
    seed_op: np.ndarray | None = None,
) -> tuple[np.ndarray, Isometry, Environment, UpdateDiagnostics]:
    """Truncate the gate-enlarged tensor B back to bond dimension D.

    Each outer iteration renormalizes B with the current isometry, converges
    the environment for the renormalized tensor (warm-started through the
    gauge transform), assembles the bond environment and re-optimizes the
    isometry; the loop stops when the projector moves less than ``tol_w`` in
    Frobenius norm.  One bond is optimized and the result broadcast to all
    bonds, as translation invariance demands.

    ``env`` warm-starts from the previous gate's converged environment; the
    first bond environment is then bootstrapped from that stale environment
    before any re-convergence.  Returns the new site tensor (symmetrized,
    not normalized), the isometry, the converged environment, and the
    diagnostics trajectory.
    """
    if D is None:
        D = A_in.shape[2]
    diag = UpdateDiagnostics()
    w = local_bond_isometry(B, D)

    if env is not None and env.T.shape[1] != D * D:
        # the carried environment belongs to a different bond dimension
        # (start-up growth phase); fall back to a cold start
        env = None

    if env is not None:
        # bootstrap: one isometry update against the stale environment
        a_stale = renormalize(B, w.W)
        bl, br = _open_transfers(a_stale, B, w.W)
        try:
            e_boot = bond_environment(env, bl, br)
            w_boot, _ = optimize_isometry(e_boot, D)
            w = w_boot
        except Exception:
            logger.debug("stale-environment bootstrap failed; keeping local start")

    w_env: np.ndarray | None = None  # isometry the current env was converged with
    proj = w.projector
    for outer in range(1, cfg.max_outer + 1):
        a_new = renormalize(B, w.W)
        a_t = peps.transfer_tensor_a(a_new)
        seed = (
            peps.transfer_with_insertion(a_new, seed_op) if seed_op is not None else None
        )
        init = env
        if env is not None and w_env is not None:
            init = Environment(
                C=env.C,
                T=gauge_accelerate(env.T, w_env, w.W),
                spectrum=env.spectrum,
                converged=False,
            )
        env = converge_env(a_t, cfg.ctm, init=init, seed=seed)
        w_env = w.W
        bl, br = _open_transfers(a_new, B, w.W)
        e_bond = bond_environment(env, bl, br)
        w_new, merit = optimize_isometry(e_bond, D)
        proj_new = w_new.projector
        dist = projector_change(proj_new, proj, e_bond)
        diag.merits.append(merit)
        diag.env_iters.append(env.iterations)
        diag.proj_dists.append(dist)
        w, proj = w_new, proj_new
        if dist < cfg.tol_w:
            a_final = renormalize(B, w.W)
            env_out = Environment(
                C=env.C,
                T=gauge_accelerate(env.T, w_env, w.W),
                spectrum=env.spectrum,
                iterations=env.iterations,
                residual=env.residual,
                converged=env.converged,
                degeneracy_warnings=env.degeneracy_warnings,
            )
            return a_final, w, env_out, diag
    raise RuntimeError(
        f"isometry not converged after {cfg.max_outer} outer iterations "
        f"(last projector distance {diag.proj_dists[-1]:.3e}, tol {cfg.tol_w:.3e})"
    )
