"""Command-line entry point tying the modules into reproducible runs.

Subcommands: evolve-infinite, evolve-finite, correlator, onsager-bench,
oracle-check.  Options may come from a flat key = value config file
(--config), with command-line flags taking precedence.  Every run writes its
resolved configuration, a machine-readable manifest (config hash, versions,
timings), and its CSV outputs into the run directory.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 size-limit violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, evolution, finite, gates, observables, peps
from .checkpoint import save_state
from .ctmrg import CtmConfig, EnvConvergenceError, converge_env, one_site_value
from .evolution import EvolutionConfig, state_from_checkpoint
from .finite import SizeLimitError
from .tensors import DecompositionError, DimensionMismatchError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_SIZE = 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration plumbing


def read_config_file(path: str | Path) -> list[str]:
    """Turn flat `key = value` lines into an argv prefix."""
    args: list[str] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        args.append(f"--{key.replace('_', '-')}")
        if value:
            args.append(value)
    return args


def _resolve_outdir(outdir: str) -> Path:
    root = os.environ.get("THERMALPEPS_OUTPUT_ROOT")
    path = Path(outdir)
    if root and not path.is_absolute():
        path = Path(root) / path
    path.mkdir(parents=True, exist_ok=True)
    return path


def _echo_config(outdir: Path, ns: argparse.Namespace) -> dict:
    resolved = {
        k: v for k, v in sorted(vars(ns).items()) if k not in ("command", "func")
    }
    lines = [f"{k} = {v}" for k, v in resolved.items()]
    (outdir / "config.txt").write_text("\n".join(lines) + "\n")
    return resolved


def _write_manifest(outdir: Path, resolved: dict, started: float, outputs: list[str]) -> None:
    blob = json.dumps(resolved, sort_keys=True, default=str).encode()
    manifest = {
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "package": "thermalpeps",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "elapsed_seconds": round(time.time() - started, 3),
        "outputs": outputs,
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _resolve_h(ns: argparse.Namespace) -> float:
    if getattr(ns, "h_frac", None) is not None:
        return ns.h_frac * gates.H0
    if getattr(ns, "h", None) is not None:
        return ns.h
    raise ConfigError("specify the transverse field via --h or --h-frac")


def _parse_schedule(text: str) -> tuple[tuple[float, float], ...]:
    """Parse 'beta1:dbeta1,beta2:dbeta2,...' into schedule segments."""
    segments = []
    for part in text.split(","):
        if ":" not in part:
            raise ConfigError(f"bad schedule segment {part!r}, expected beta:dbeta")
        b, db = part.split(":", 1)
        segments.append((float(b), float(db)))
    return tuple(segments)


def _parse_window(text: str | None) -> tuple[float, float] | None:
    if text is None:
        return None
    lo, hi = (float(x) for x in text.split(":", 1))
    return (lo, hi)


def _parse_site(text: str) -> tuple[int, int]:
    i, j = (int(x) for x in text.split(",", 1))
    return (i, j)


# ---------------------------------------------------------------------------
# CSV writers shared by subcommands and the plot frontend


def write_correlator_csv(
    path: Path,
    samples: np.ndarray,
    fits: dict[str, float],
) -> None:
    """`R,Czz` table with fit results as `# key=value` comment lines."""
    with open(path, "w", newline="") as fh:
        for key, value in sorted(fits.items()):
            fh.write(f"# {key}={value!r}\n")
        writer = csv.writer(fh)
        writer.writerow(["R", "Czz"])
        for r, c in samples:
            writer.writerow([int(r), repr(float(c))])


def write_scaling_csv(path: Path, rows: list[tuple[int, float, float]], fits: dict[str, float]) -> None:
    with open(path, "w", newline="") as fh:
        for key, value in sorted(fits.items()):
            fh.write(f"# {key}={value!r}\n")
        writer = csv.writer(fh)
        writer.writerow(["M", "xi", "Z"])
        for m, xi, z in rows:
            writer.writerow([m, repr(float(xi)), repr(float(z))])


def write_finite_csv(path: Path, rows: list[tuple[float, str, str, float]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beta", "site1", "site2", "value"])
        for beta, s1, s2, v in rows:
            writer.writerow([repr(float(beta)), s1, s2, repr(float(v))])


# ---------------------------------------------------------------------------
# subcommands


def cmd_evolve_infinite(ns: argparse.Namespace, outdir: Path) -> list[str]:
    h = _resolve_h(ns)
    schedule = (
        _parse_schedule(ns.schedule)
        if ns.schedule
        else ((ns.beta_max, ns.dbeta),)
    )
    cfg = EvolutionConfig(
        h=h,
        delta=ns.delta,
        D=ns.D,
        ctm=CtmConfig(M=ns.M, tol_env=ns.tol_env, max_iter=ns.env_max_iter, bias=ns.bias),
        schedule=schedule,
        tol_w=ns.tol_w,
        max_outer=ns.max_outer,
        sample_stride=ns.sample_stride,
        checkpoint_stride=ns.checkpoint_stride,
        checkpoint_dir=outdir / "checkpoints" if ns.checkpoint_stride else None,
    )
    resume = state_from_checkpoint(ns.resume) if ns.resume else None
    trajectory = evolution.evolve(cfg, resume=resume, progress=ns.verbose)
    trajectory.write_csv(outdir / "trajectory.csv")
    return ["trajectory.csv"]


def cmd_correlator(ns: argparse.Namespace, outdir: Path) -> list[str]:
    if ns.checkpoint:
        state = state_from_checkpoint(ns.checkpoint)
        a_site = state.A
    elif ns.classical_beta is not None:
        a_site = gates.classical_ising_tensor(ns.classical_beta)
    else:
        raise ConfigError("correlator needs --checkpoint or --classical-beta")
    cfg = CtmConfig(M=ns.M, tol_env=ns.tol_env, max_iter=ns.env_max_iter, bias=ns.bias)
    a = peps.transfer_tensor_a(a_site)
    seed = peps.transfer_with_insertion(a_site, gates.PAULI_Z)
    env = converge_env(a, cfg, seed=seed)
    prof = observables.correlator_profile(a_site, env, gates.PAULI_Z, ns.rmax)
    samples = np.column_stack([np.arange(1, ns.rmax + 1), prof])
    xi_est = observables.estimate_xi(prof)
    tail = _parse_window(ns.tail_window) or observables.default_tail_window(xi_est, ns.rmax)
    fit_exp = observables.fit_correlation_length(samples, tail)
    power = _parse_window(ns.power_window) or observables.default_power_window(fit_exp.xi)
    fit_pow = observables.fit_power_law(samples, power)
    z = observables.local_expectation(a_site, env, gates.PAULI_Z)
    fits = {
        "fit_xi": fit_exp.xi,
        "fit_xi_window_lo": fit_exp.window[0],
        "fit_xi_window_hi": fit_exp.window[1],
        "fit_xi_residual": fit_exp.residual,
        "fit_eta": fit_pow.eta,
        "fit_eta_window_lo": fit_pow.window[0],
        "fit_eta_window_hi": fit_pow.window[1],
        "fit_eta_residual": fit_pow.residual,
        "mean_Z": z,
    }
    write_correlator_csv(outdir / "correlator.csv", samples, fits)
    return ["correlator.csv"]


def cmd_onsager_bench(ns: argparse.Namespace, outdir: Path) -> list[str]:
    beta = ns.beta_frac * gates.BETA0
    a_site = gates.classical_ising_tensor(beta)
    a = peps.transfer_tensor_a(a_site)
    seed = peps.transfer_with_insertion(a_site, gates.PAULI_Z)
    ms = [int(x) for x in ns.M_list.split(",")]
    rows = []
    outputs = []
    for m in ms:
        cfg = CtmConfig(M=m, tol_env=ns.tol_env, max_iter=ns.env_max_iter, bias=ns.bias)
        env = converge_env(a, cfg, seed=seed)
        z = observables.local_expectation(a_site, env, gates.PAULI_Z)
        rmax = int(ns.rmax_factor * 1.05 * m**1.93) + 20
        prof = observables.correlator_profile(a_site, env, gates.PAULI_Z, rmax)
        samples = np.column_stack([np.arange(1, rmax + 1), prof])
        xi_est = observables.estimate_xi(prof)
        fit = observables.fit_correlation_length(
            samples, observables.default_tail_window(xi_est, rmax)
        )
        eta = observables.fit_power_law(samples, (3.0, 20.0)).eta
        name = f"correlator_M{m}.csv"
        write_correlator_csv(
            outdir / name,
            samples,
            {"fit_xi": fit.xi, "fit_eta": eta, "mean_Z": z, "M": m},
        )
        outputs.append(name)
        rows.append((m, fit.xi, z))
        logger.info("M=%d xi=%.2f Z=%.5f", m, fit.xi, z)
    marr = np.array([r[0] for r in rows], dtype=float)
    p_xi, amp_xi, res_xi = observables.fit_loglog(marr, np.array([r[1] for r in rows]))
    p_z, amp_z, res_z = observables.fit_loglog(marr, np.array([r[2] for r in rows]))
    fits = {
        "fit_xi_exponent": p_xi,
        "fit_xi_amplitude": amp_xi,
        "fit_xi_residual": res_xi,
        "fit_z_exponent": p_z,
        "fit_z_amplitude": amp_z,
        "fit_z_residual": res_z,
        "beta": beta,
    }
    write_scaling_csv(outdir / "scaling.csv", rows, fits)
    return ["scaling.csv"] + outputs


def cmd_evolve_finite(ns: argparse.Namespace, outdir: Path) -> list[str]:
    h = _resolve_h(ns)
    pairs = [
        (_parse_site(a), _parse_site(b))
        for a, b in (pair.split(":", 1) for pair in ns.correlate)
    ] if ns.correlate else []
    cfg = finite.FiniteEvolutionConfig(
        n=ns.n,
        h=h,
        D=ns.D,
        m_mps=ns.m_mps,
        delta=ns.delta,
        dbeta=ns.dbeta,
        beta_max=ns.beta_max,
        tol_w=ns.tol_w,
        max_sweeps=ns.max_sweeps,
    )
    z = gates.PAULI_Z
    insertion_sets = [{p1: z, p2: z} for p1, p2 in pairs]
    stride = max(1, ns.sample_stride)
    betas = [k * cfg.dbeta for k in range(stride, int(round(cfg.beta_max / cfg.dbeta)) + 1, stride)]
    rows = []
    for beta, values, lat in finite.evolve_finite(cfg, betas, insertion_sets):
        for (p1, p2), v in zip(pairs, values):
            rows.append((beta, f"{p1[0]},{p1[1]}", f"{p2[0]},{p2[1]}", v))
        logger.info("beta=%.4f %s", beta, " ".join(f"{v:+.6f}" for v in values))
    write_finite_csv(outdir / "finite_correlator.csv", rows)
    return ["finite_correlator.csv"]


def cmd_oracle_check(ns: argparse.Namespace, outdir: Path) -> list[str]:
    """Desk-scale oracle equivalences on small lattices; details in tests."""
    from . import oracle_suite

    results = oracle_suite.run_all(n=ns.lattice, fast=ns.fast)
    report = []
    ok = True
    for name, passed, detail in results:
        report.append(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok &= passed
    text = "\n".join(report) + "\n"
    sys.stdout.write(text)
    (outdir / "oracle_report.txt").write_text(text)
    if not ok:
        raise FloatingPointError("oracle equivalence check failed")
    return ["oracle_report.txt"]


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermalpeps",
        description="Thermal 2D transverse-field Ising states from PEPS imaginary-time evolution",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--outdir", default="run", help="output directory")
        p.add_argument("--verbose", action="store_true")

    def env_opts(p, m_default=16):
        p.add_argument("--M", type=int, default=m_default, help="environment bond dimension")
        p.add_argument("--tol-env", type=float, default=1e-9)
        p.add_argument("--env-max-iter", type=int, default=200_000)
        p.add_argument("--bias", type=float, default=1e-3,
                       help="symmetry-breaking seed strength for environment starts")

    p = sub.add_parser("evolve-infinite", help="imaginary-time trajectory on the infinite lattice")
    common(p)
    env_opts(p)
    p.add_argument("--h", type=float, help="transverse field")
    p.add_argument("--h-frac", type=float, help="transverse field as a fraction of the critical h0")
    p.add_argument("--delta", type=float, default=0.0, help="longitudinal bias")
    p.add_argument("--D", type=int, default=6, help="PEPS bond dimension")
    p.add_argument("--beta-max", type=float, default=1.0)
    p.add_argument("--dbeta", type=float, default=1e-2)
    p.add_argument("--schedule", help="piecewise steps, e.g. 0.4:0.01,0.75:0.002")
    p.add_argument("--tol-w", type=float, default=1e-9)
    p.add_argument("--max-outer", type=int, default=60)
    p.add_argument("--sample-stride", type=int, default=1)
    p.add_argument("--checkpoint-stride", type=int, default=0)
    p.add_argument("--resume", help="checkpoint file to resume from")
    p.set_defaults(func=cmd_evolve_infinite)

    p = sub.add_parser("correlator", help="row correlator and decay fits for a saved or classical state")
    common(p)
    env_opts(p, m_default=24)
    p.add_argument("--checkpoint", help="state checkpoint to analyze")
    p.add_argument("--classical-beta", type=float,
                   help="use the exact classical purification tensor at this beta")
    p.add_argument("--rmax", type=int, default=2000)
    p.add_argument("--tail-window", help="exponential fit window lo:hi (default auto)")
    p.add_argument("--power-window", help="power-law fit window lo:hi (default auto)")
    p.set_defaults(func=cmd_correlator)

    p = sub.add_parser("onsager-bench", help="classical critical-point scaling versus M")
    common(p)
    p.add_argument("--M", dest="M_list", default="8,12,16,24,32",
                   help="comma-separated environment dimensions")
    p.add_argument("--beta-frac", type=float, default=1.0,
                   help="beta as a fraction of the exact critical coupling")
    p.add_argument("--tol-env", type=float, default=1e-9)
    p.add_argument("--env-max-iter", type=int, default=200_000)
    p.add_argument("--bias", type=float, default=1e-3)
    p.add_argument("--rmax-factor", type=float, default=5.0)
    p.set_defaults(func=cmd_onsager_bench)

    p = sub.add_parser("evolve-finite", help="trajectory on an open N x N lattice")
    common(p)
    p.add_argument("--n", type=int, default=11, help="lattice size N")
    p.add_argument("--h", type=float)
    p.add_argument("--h-frac", type=float)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--D", type=int, default=5)
    p.add_argument("--m-mps", type=int, default=16, help="boundary MPS bond dimension")
    p.add_argument("--dbeta", type=float, default=1e-2)
    p.add_argument("--beta-max", type=float, default=1.0)
    p.add_argument("--tol-w", type=float, default=1e-8)
    p.add_argument("--max-sweeps", type=int, default=30)
    p.add_argument("--sample-stride", type=int, default=5)
    p.add_argument("--correlate", action="append",
                   help="site pair i,j:k,l for a ZZ correlator (repeatable)")
    p.set_defaults(func=cmd_evolve_finite)

    p = sub.add_parser("oracle-check", help="desk-scale oracle equivalence self-test")
    common(p)
    p.add_argument(
        "--lattice",
        type=lambda s: int(s.lower().split("x")[0]),
        default=2,
        help="oracle lattice size (2 or 2x2)",
    )
    p.add_argument("--fast", action="store_true", help="skip the slow optimization checks")
    p.set_defaults(func=cmd_oracle_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        # a config file contributes defaults; explicit flags win by coming last
        if "--config" in argv:
            idx = argv.index("--config")
            cfg_args = read_config_file(argv[idx + 1])
            head = argv[:1]
            tail = argv[1:]
            argv = head + cfg_args + tail
        ns = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(
        level=logging.INFO if ns.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    started = time.time()
    try:
        outdir = _resolve_outdir(ns.outdir)
        resolved = _echo_config(outdir, ns)
        outputs = ns.func(ns, outdir)
        _write_manifest(outdir, resolved, started, outputs)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, SizeLimitError):
            print(f"size limit: {exc}", file=sys.stderr)
            return EXIT_SIZE
        if isinstance(exc, (DimensionMismatchError,)):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EnvConvergenceError, DecompositionError, FloatingPointError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
