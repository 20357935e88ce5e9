"""Imaginary-time trajectory driver for the infinite lattice.

One step applies the exact field half-step, absorbs the interaction gate,
truncates the doubled bond self-consistently, and applies the closing field
half-step.  Consecutive half-steps of adjacent time steps are deliberately
not merged so that checkpoints land exactly on integer multiples of the time
step.  Starting from the infinite-temperature tensor, the bond dimension
grows geometrically (1 -> 2 -> 4 -> ...) with no truncation at all until a
gate would exceed the target D.

After every full step the tensor is rescaled so the per-site norm of the
state is one; the environment is scale-invariant under its own normalization
so it survives the rescale unchanged.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import checkpoint, gates, peps
from .ctmrg import CtmConfig, Environment, converge_env, one_site_value, per_site_norm
from .observables import local_expectation
from .truncation import Isometry, SelfConsistentConfig, self_consistent_update

logger = logging.getLogger(__name__)

__all__ = [
    "EvolutionConfig",
    "EvolutionState",
    "Trajectory",
    "second_order_step",
    "evolve",
    "state_from_checkpoint",
]

TRAJECTORY_HEADER = ("beta", "Z", "X", "merit", "env_iters")


@dataclass(frozen=True)
class EvolutionConfig:
    """Full trajectory parameters.

    ``schedule`` is piecewise constant: ordered (beta_upper, dbeta) segments;
    the last segment's bound is the final inverse temperature.  The paper's
    near-transition resolution corresponds to dbeta = 1e-3 * beta0.
    """

    h: float
    D: int
    ctm: CtmConfig
    delta: float = 0.0
    schedule: tuple[tuple[float, float], ...] = ((1.0, 0.01),)
    tol_w: float = 1e-9
    max_outer: int = 60
    sample_stride: int = 1
    checkpoint_stride: int = 0
    checkpoint_dir: Path | None = None

    def __post_init__(self):
        if not self.schedule:
            raise ValueError("empty time-step schedule")
        prev = 0.0
        for bound, db in self.schedule:
            if db <= 0 or bound <= prev:
                raise ValueError(f"bad schedule segment ({bound}, {db})")
            prev = bound
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")

    @property
    def beta_max(self) -> float:
        return self.schedule[-1][0]

    def sc_config(self) -> SelfConsistentConfig:
        return SelfConsistentConfig(ctm=self.ctm, tol_w=self.tol_w, max_outer=self.max_outer)

    def dbeta_at(self, beta: float) -> float:
        for bound, db in self.schedule:
            if beta < bound - 1e-12:
                return db
        return self.schedule[-1][1]


@dataclass
class EvolutionState:
    """Everything one step consumes and produces; checkpointing this exactly
    reproduces the uninterrupted trajectory."""

    A: np.ndarray
    beta: float = 0.0
    step: int = 0
    W: Isometry | None = None
    env: Environment | None = None
    last_merit: float = math.nan
    last_env_iters: int = 0


@dataclass
class Trajectory:
    """Sampled observable records along the run."""

    records: list[tuple[float, float, float, float, int]] = field(default_factory=list)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRAJECTORY_HEADER)
            for row in self.records:
                writer.writerow([repr(row[0]), repr(row[1]), repr(row[2]), repr(row[3]), row[4]])

    def betas(self) -> np.ndarray:
        return np.array([r[0] for r in self.records])

    def magnetizations(self) -> np.ndarray:
        return np.array([r[1] for r in self.records])


def _refresh_env(state: EvolutionState, cfg: EvolutionConfig) -> EvolutionState:
    """Converge the environment for the current tensor, orient the broken
    branch, and normalize the per-site norm to one."""
    a = peps.transfer_tensor_a(state.A)
    seed = peps.transfer_with_insertion(state.A, gates.PAULI_Z)
    init = state.env if state.env is not None and state.env.T.shape[1] == a.shape[0] else None
    env = converge_env(a, cfg.ctm, init=init, seed=seed)
    kappa = per_site_norm(env, a)
    if not (kappa > 0 and np.isfinite(kappa)):
        raise FloatingPointError(f"per-site norm {kappa} is not a positive number")
    state.A = state.A / math.sqrt(kappa)
    # Symmetry breaking at the transition can latch onto the negative branch
    # through eigensolver noise.  The global spin flip is free here: the
    # transfer tensor (hence the environment) is exactly invariant under it,
    # so orient the magnetization along the bias direction deterministically.
    z_num = one_site_value(env, peps.transfer_with_insertion(state.A, gates.PAULI_Z))
    if z_num < 0:
        state.A = peps.apply_spin_matrix(state.A, gates.PAULI_X)
    state.env = env
    state.last_env_iters = env.iterations
    return state


def second_order_step(state: EvolutionState, cfg: EvolutionConfig) -> EvolutionState:
    """One full time step: field half-step, interaction gate with bond
    truncation, field half-step, then environment refresh and rescale."""
    dbeta = cfg.dbeta_at(state.beta)
    params = gates.ModelParams(h=cfg.h, delta=cfg.delta, dbeta=dbeta)
    half = gates.field_halfstep_matrix(params)
    t_gate = gates.trotter_tensor(dbeta)

    a = peps.apply_spin_matrix(state.A, half)
    b = peps.absorb_trotter(a, t_gate)
    merit = math.nan
    if b.shape[2] <= cfg.D:
        # growth phase: the gate is exact, no truncation needed
        a_new = peps.symmetrize_bonds(b)
        w = None
        env = None
    else:
        a_new, w, env, diag = self_consistent_update(
            a,
            b,
            cfg.sc_config(),
            D=cfg.D,
            env=state.env,
            seed_op=gates.PAULI_Z,
        )
        merit = diag.merits[-1]
    a_new = peps.apply_spin_matrix(a_new, half)

    new_state = EvolutionState(
        A=a_new,
        beta=state.beta + dbeta,
        step=state.step + 1,
        W=w,
        env=env,
        last_merit=merit,
    )
    return _refresh_env(new_state, cfg)


def _sample(state: EvolutionState, trajectory: Trajectory) -> None:
    z = local_expectation(state.A, state.env, gates.PAULI_Z)
    x = local_expectation(state.A, state.env, gates.PAULI_X)
    trajectory.records.append((state.beta, z, x, state.last_merit, state.last_env_iters))


def _write_checkpoint(state: EvolutionState, cfg: EvolutionConfig) -> None:
    if cfg.checkpoint_dir is None:
        return
    cfg.checkpoint_dir.mkdir(parents=True, exist_ok=True)
    arrays = {"A": state.A}
    if state.W is not None:
        arrays["W"] = state.W.W
    if state.env is not None:
        arrays["env_C"] = state.env.C
        arrays["env_T"] = state.env.T
        arrays["env_spectrum"] = state.env.spectrum
    params = {
        "beta": state.beta,
        "step": state.step,
        "h": cfg.h,
        "delta": cfg.delta,
        "D": cfg.D,
        "S": 2,
        "M": cfg.ctm.M,
        "last_merit": state.last_merit,
    }
    checkpoint.save_state(
        cfg.checkpoint_dir / f"state_{state.step:06d}.tpck", params, arrays
    )


def state_from_checkpoint(path: str | Path) -> EvolutionState:
    """Rebuild an evolution state saved by :func:`evolve`."""
    params, arrays = checkpoint.load_state(path)
    w = Isometry(arrays["W"]) if "W" in arrays else None
    env = None
    if "env_C" in arrays:
        env = Environment(
            C=arrays["env_C"],
            T=arrays["env_T"],
            spectrum=arrays["env_spectrum"],
            converged=True,
        )
    merit = params.get("last_merit", math.nan)
    return EvolutionState(
        A=arrays["A"],
        beta=float(params["beta"]),
        step=int(params["step"]),
        W=w,
        env=env,
        last_merit=merit if merit is not None else math.nan,
    )


def evolve(
    cfg: EvolutionConfig,
    resume: EvolutionState | None = None,
    progress: bool = False,
) -> Trajectory:
    """Run from infinite temperature (or a resumed state) to ``beta_max``."""
    trajectory = Trajectory()
    if resume is None:
        state = EvolutionState(A=peps.initial_tensor())
        state = _refresh_env(state, cfg)
        _sample(state, trajectory)
    else:
        state = resume
        if state.env is None:
            state = _refresh_env(state, cfg)
    n_segments_guard = 10_000_000
    while state.beta < cfg.beta_max - 1e-12 and n_segments_guard:
        n_segments_guard -= 1
        state = second_order_step(state, cfg)
        if state.step % cfg.sample_stride == 0:
            _sample(state, trajectory)
        if cfg.checkpoint_stride and state.step % cfg.checkpoint_stride == 0:
            _write_checkpoint(state, cfg)
        if progress:
            last = trajectory.records[-1]
            logger.info(
                "beta=%.6f Z=%+.6f X=%+.6f env_iters=%d",
                state.beta,
                last[1],
                last[2],
                state.last_env_iters,
            )
    if trajectory.records and trajectory.records[-1][0] < state.beta:
        _sample(state, trajectory)
    if cfg.checkpoint_dir is not None:
        _write_checkpoint(state, cfg)
    return trajectory
