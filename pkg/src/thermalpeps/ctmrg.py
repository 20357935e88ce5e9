"""Corner matrix renormalization for the infinite-lattice environment.

Isotropic site tensors admit a single corner matrix C (symmetric, M x M) and
a single top tensor T (M x D^2 x M, symmetric in its environmental axes)
representing all eight infinite sectors around a window of transfer tensors.

One renormalization step enlarges the corner with one transfer tensor and two
top tensors, diagonalizes the enlarged corner (the M^3 D^6 leading cost),
keeps the M leading eigenvectors as an isometry, and renormalizes both the
corner and the top tensor with it.  Iterating converges the M leading corner
eigenvalues.

Cold starts are built deterministically from partial traces of the transfer
tensor over its outward legs.  A small symmetry-breaking seed (a transfer
tensor with an operator insertion, usually Z) can be mixed into the first
step; it decays under iteration in the disordered phase and selects the
positive branch in the ordered phase, which is what makes spontaneous
magnetization reproducible run to run.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .tensors import symm_eig, svd

logger = logging.getLogger(__name__)

__all__ = [
    "CtmConfig",
    "Environment",
    "EnvConvergenceError",
    "cold_start",
    "ctm_step",
    "converge_env",
    "gauge_accelerate",
    "bond_environment",
    "cap_vector",
    "channel_apply",
    "one_site_value",
    "two_site_value",
    "per_site_norm",
]


class EnvConvergenceError(RuntimeError):
    """Environment iteration exhausted its budget; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class CtmConfig:
    """Environment parameters: bond dimension M, spectral tolerance, iteration
    budget, and the strength of the symmetry-breaking seed."""

    M: int
    tol_env: float = 1e-10
    max_iter: int = 50_000
    bias: float = 1e-3

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.tol_env <= 0:
            raise ValueError(f"tol_env must be positive, got {self.tol_env}")


@dataclass(frozen=True)
class Environment:
    """Converged (or in-progress) corner matrix and top tensor.

    ``spectrum`` holds the normalized leading eigenvalues of the last
    enlarged corner; ``history`` the convergence residual per iteration.
    """

    C: np.ndarray
    T: np.ndarray
    spectrum: np.ndarray
    iterations: int = 0
    residual: float = np.inf
    converged: bool = False
    degeneracy_warnings: int = 0
    history: tuple[float, ...] = field(default_factory=tuple)

    @property
    def M(self) -> int:
        return self.C.shape[0]


def _trace_cap(e: int) -> np.ndarray:
    """Boundary vector for a fused double-layer leg: vec of the identity."""
    d = int(round(np.sqrt(e)))
    if d * d != e:
        raise ValueError(f"leg extent {e} is not a perfect square")
    return np.eye(d).reshape(e)


def cold_start(a: np.ndarray, seed: np.ndarray | None = None, bias: float = 0.0) -> Environment:
    """Deterministic initial environment from partial traces of ``a``.

    The corner traces the up and left legs, the top tensor traces the up leg.
    With ``seed`` given, caps are built from a + bias * seed instead.
    """
    at = a if seed is None or bias == 0.0 else a + bias * seed
    v = _trace_cap(a.shape[0])
    c0 = np.einsum("urdl,u,l->rd", at, v, v)
    t0 = np.einsum("urdl,u->ldr", at, v)
    c0 = 0.5 * (c0 + c0.T)
    c0 /= max(np.abs(c0).max(), 1e-300)
    t0 = 0.5 * (t0 + t0.transpose(2, 1, 0))
    t0 /= max(np.abs(t0).max(), 1e-300)
    spec = _corner_spectrum(c0)
    return Environment(C=c0, T=t0, spectrum=spec)


def _corner_spectrum(c: np.ndarray) -> np.ndarray:
    """Eigenvalues of a corner, descending, normalized by the signed dominant one."""
    vals = np.linalg.eigvalsh(0.5 * (c + c.T))
    dom = vals[int(np.argmax(np.abs(vals)))]
    if dom != 0:
        vals = vals / dom
    return np.sort(vals)[::-1]


def ctm_step(env: Environment, a: np.ndarray, cfg: CtmConfig) -> Environment:
    """One four-step corner renormalization.

    1. contract C, two T and one a into the enlarged corner C''
    2. diagonalize C''; the M leading eigenvectors form an isometry Z
    3. the truncated corner is the diagonal of leading eigenvalues
    4. renormalize the contraction of T with a by Z on both sides
    """
    c, t = env.C, env.T
    m = c.shape[0]
    e = a.shape[0]
    if t.shape != (m, e, m):
        raise ValueError(f"top tensor shape {t.shape} incompatible with C {c.shape} and a {a.shape}")

    # enlarged corner: C''[(m,r),(n,d)] = C[p,q] T[p,u,m] T[q,l,n] a[u,r,d,l]
    g1 = np.tensordot(c, t, axes=([0], [0]))            # (q, u, m)
    g2 = np.tensordot(g1, t, axes=([0], [0]))           # (u, m, l, n)
    c2 = np.tensordot(g2, a, axes=([0, 2], [0, 3]))     # (m, n, r, d)
    c2 = np.ascontiguousarray(c2.transpose(0, 2, 1, 3)).reshape(m * e, m * e)
    c2 = 0.5 * (c2 + c2.T)

    eig = symm_eig(c2, sym_tol=1e-8)
    vals, vecs = eig.values, eig.vectors
    # The overall sign of the corner is a gauge; keep the dominant part positive.
    if abs(vals[-1]) > abs(vals[0]):
        vals = -vals[::-1]
        vecs = vecs[:, ::-1]
    keep = min(cfg.M, vals.size)
    warns = env.degeneracy_warnings
    if keep < vals.size and abs(vals[keep - 1] - vals[keep]) <= 1e-12 * abs(vals[0]):
        warns += 1
        logger.debug("truncating inside a degenerate corner multiplet at M=%d", keep)
    z = vecs[:, :keep]
    dom = vals[0]
    spectrum = vals[:keep] / dom
    c_new = np.diag(spectrum)

    # top renormalization: T'[p,d,q] = Z[(m,l),p] T[m,u,n] a[u,r,d,l] Z[(n,r),q]
    z3 = z.reshape(m, e, keep)
    s1 = np.tensordot(z3, t, axes=([0], [0]))           # (l, p, u, n)
    s2 = np.tensordot(s1, a, axes=([0, 2], [3, 0]))     # (p, n, r, d)
    t_new = np.tensordot(s2, z3, axes=([1, 2], [0, 1]))  # (p, d, q)
    t_new = 0.5 * (t_new + t_new.transpose(2, 1, 0))
    t_new /= max(np.abs(t_new).max(), 1e-300)

    return replace(
        env,
        C=c_new,
        T=t_new,
        spectrum=spectrum,
        degeneracy_warnings=warns,
    )


def converge_env(
    a: np.ndarray,
    cfg: CtmConfig,
    init: Environment | None = None,
    seed: np.ndarray | None = None,
) -> Environment:
    """Iterate :func:`ctm_step` until the leading corner spectrum is stable.

    ``init`` warm-starts from a previously converged environment.  ``seed``
    (an operator-inserted transfer tensor) is mixed into the first step with
    weight ``cfg.bias``; see the module docstring.
    """
    env = init if init is not None else cold_start(a, seed, cfg.bias)
    prev = env.spectrum
    history: list[float] = []
    residual = np.inf
    biased_first = seed is not None and cfg.bias != 0.0
    a_first = a + cfg.bias * seed if biased_first else a
    for it in range(1, cfg.max_iter + 1):
        env = ctm_step(env, a_first if it == 1 else a, cfg)
        residual = _spectrum_distance(env.spectrum, prev)
        history.append(residual)
        prev = env.spectrum
        # do not stop on the seeded first step, nor on a cold start's very
        # first comparison against the raw initialization spectrum
        plain = it > 1 or (init is not None and not biased_first)
        if residual < cfg.tol_env and plain:
            return replace(
                env,
                iterations=it,
                residual=residual,
                converged=True,
                history=tuple(history),
            )
    raise EnvConvergenceError(
        f"environment not converged after {cfg.max_iter} iterations "
        f"(residual {residual:.3e}, tol {cfg.tol_env:.3e})",
        residual,
    )


def _spectrum_distance(s1: np.ndarray, s2: np.ndarray) -> float:
    n = max(s1.size, s2.size)
    p1 = np.zeros(n)
    p2 = np.zeros(n)
    p1[: s1.size] = s1
    p2[: s2.size] = s2
    return float(np.abs(p1 - p2).max())


def gauge_accelerate(t: np.ndarray, w_old: np.ndarray, w_new: np.ndarray) -> np.ndarray:
    """Warm-start transform of the top tensor after an isometry update.

    The lattice-facing axis of T fuses two bond indices renormalized by the
    old isometry.  The orthogonal matrix closest to W_new^T W_old rotates
    each factor so the environment matches the new gauge.
    """
    if w_old.shape != w_new.shape:
        raise ValueError(f"isometry shapes differ: {w_old.shape} vs {w_new.shape}")
    overlap = w_new.T @ w_old
    u, _, v = svd(overlap)
    g = u @ v.T
    d = w_old.shape[1]
    m1, e, m2 = t.shape
    if e != d * d:
        raise ValueError(f"top tensor leg {e} does not factor as {d}x{d}")
    t4 = t.reshape(m1, d, d, m2)
    out = np.einsum("xa,yb,mabn->mxyn", g, g, t4)
    return np.ascontiguousarray(out).reshape(m1, e, m2)


def cap_vector(env: Environment) -> np.ndarray:
    """Left boundary of a horizontal channel: corner, top, corner stacked."""
    return np.einsum("mp,pxq,qn->mxn", env.C, env.T, env.C)


def channel_apply(
    env: Environment, a: np.ndarray, v: np.ndarray, direction: str = "lr"
) -> np.ndarray:
    """Apply one column (top tensor, transfer tensor, top tensor) to a
    channel vector with axes (env, lattice, env).

    ``direction`` "lr" consumes the transfer tensor's left leg and emits its
    right leg (moving rightward); "rl" the mirror.  For isotropic tensors the
    two agree; they differ for open transfer tensors whose special axis must
    be the emitted one.
    """
    if direction not in ("lr", "rl"):
        raise ValueError(f"direction must be 'lr' or 'rl', got {direction!r}")
    consume = 3 if direction == "lr" else 1
    s1 = np.tensordot(v, env.T, axes=([0], [0]))        # (x, m2, u, n)
    s2 = np.tensordot(s1, a, axes=([0, 2], [consume, 0]))
    # s2 axes: (m2, n, r, d) moving rightward, (m2, n, d, l) moving leftward
    d_ax = 3 if direction == "lr" else 2
    return np.tensordot(s2, env.T, axes=([0, d_ax], [0, 1]))  # (n, open, n2)


def one_site_value(env: Environment, a: np.ndarray) -> float:
    """Closed network of the environment around one transfer tensor."""
    cap = cap_vector(env)
    return float(np.tensordot(channel_apply(env, a, cap), cap, axes=3))


def two_site_value(env: Environment, a_left: np.ndarray, a_right: np.ndarray) -> float:
    """Closed network of the environment around two adjacent transfer tensors."""
    cap = cap_vector(env)
    v = channel_apply(env, a_left, cap)
    v = channel_apply(env, a_right, v)
    return float(np.tensordot(v, cap, axes=3))


def per_site_norm(env: Environment, a: np.ndarray) -> float:
    """Norm of the state per lattice site, from environment network ratios."""
    cap = cap_vector(env)
    n1 = one_site_value(env, a)
    nh = float(np.tensordot(cap, cap, axes=3))
    c2 = env.C @ env.C
    n0 = float(np.trace(c2 @ c2))
    return n1 * n0 / (nh * nh)


def bond_environment(env: Environment, b_left: np.ndarray, b_right: np.ndarray) -> np.ndarray:
    """Contract the finite network around an open bond into the matrix E.

    ``b_left`` has its open axis (fused ket D, bra 2D) on the right leg,
    ``b_right`` on the left leg.  The environment supplies four corners and
    six top tensors; the two ket indices of the open axes are contracted
    through, leaving the symmetrized 2D x 2D bra matrix.
    """
    if not env.converged:
        raise EnvConvergenceError("bond_environment requires a converged environment", env.residual)
    cap = cap_vector(env)
    hl = channel_apply(env, b_left, cap, "lr")   # (n1, ro, n2)
    hr = channel_apply(env, b_right, cap, "rl")  # (n1, lo, n2), built from the right
    e_left = b_left.shape[0]
    d = int(round(np.sqrt(e_left)))
    kexp = b_left.shape[1] // d
    hl4 = hl.reshape(hl.shape[0], d, kexp, hl.shape[2])
    hr4 = hr.reshape(hr.shape[0], d, kexp, hr.shape[2])
    e = np.einsum("mckn,mcln->kl", hl4, hr4)
    return 0.5 * (e + e.T)
