"""Command-line interface.

One analysis per invocation; every numeric result is recomputed by the
invoked module (nothing cached between runs).  Exit codes: 0 success /
positive verdict, 1 analysis-negative (FAIL verdicts, divergence, no
certificate), 2 input error (parse or validation), 3 solver failure.
"""

from __future__ import annotations

import argparse
import io
import os
import sys as _sys
from dataclasses import dataclass, field

import numpy as np

from .canonical2d import classify_2d, to_canonical
from .certificates import builtin_counterexample, verify_certificate
from .effectiveness import EffResult, check_effective
from .errors import (
    MaxIterations,
    NotEnergyPreserving,
    NotSymmetric,
    ParseError,
    QuadboundError,
    TrivialNonlinearity,
    UnboundedBelow,
)
from .simulate import (
    IntegratorOptions,
    ProbeVerdict,
    TrajectoryStatus,
    integrate,
    probe_boundedness,
)
from .system import lorenz_system, max_asymmetry, worst_energy_triple
from .sysio import load_certificate, load_system, parse_system_raw
from .trapping import SolverOptions, TrapStatus, solve

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_SOLVER = 3

_SEED_ENV = "QUADBOUND_SEED"


@dataclass
class AnalysisReport:
    command: str
    inputs: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v + 0.0:.12g}"  # + 0.0 folds negative zero
    if isinstance(v, np.ndarray):
        return "[" + ", ".join(f"{float(x) + 0.0:.12g}" for x in np.atleast_1d(v)) + "]"
    if hasattr(v, "value") and not isinstance(v, (int, str)):  # enum
        return str(v.value)
    return str(v)


def render_kv(report: AnalysisReport) -> str:
    lines = [f"command={report.command}"]
    for k, v in report.inputs.items():
        lines.append(f"input.{k}={_fmt_value(v)}")
    for k, v in report.results.items():
        lines.append(f"{k}={_fmt_value(v)}")
    for i, w in enumerate(report.warnings):
        lines.append(f"warning.{i}={w}")
    return "\n".join(lines) + "\n"


def render_human(report: AnalysisReport) -> str:
    out = [f"== {report.command} =="]
    if report.inputs:
        out.append("inputs:")
        for k, v in report.inputs.items():
            out.append(f"  {k}: {_fmt_value(v)}")
    out.append("results:")
    for k, v in report.results.items():
        out.append(f"  {k}: {_fmt_value(v)}")
    for w in report.warnings:
        out.append(f"warning: {w}")
    return "\n".join(out) + "\n"


def _system_digest(sys) -> dict:
    return {
        "n": sys.n,
        "norm_c": float(np.linalg.norm(sys.c)),
        "norm_L": float(np.linalg.norm(sys.L)),
        "norm_Q": float(np.sqrt((sys.Q**2).sum())),
        "validated": True,
    }


def _seed_from(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get(_SEED_ENV, "0"))


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        _sys.stdout.write(text)


def _finish(args, report: AnalysisReport, code: int, trajectories=None, csv_text=None) -> int:
    if args.format == "csv" and csv_text is not None:
        _emit(args, csv_text)
    elif args.format == "kv":
        _emit(args, render_kv(report))
    else:
        _emit(args, render_human(report))
    plot = getattr(args, "plot", None)
    if plot and trajectories:
        from .plots import save_trajectory_figure

        save_trajectory_figure(trajectories, plot, title=report.command)
        _sys.stderr.write(f"figure written to {plot}\n")
    return code


def _trajectory_csv(trajectories) -> str:
    buf = io.StringIO()
    n = trajectories[0].states.shape[1]
    cols = ["trajectory", "t"] + [f"x{i + 1}" for i in range(n)] + ["norm"]
    buf.write(",".join(cols) + "\n")
    for idx, traj in enumerate(trajectories):
        norms = traj.norms()
        for t, x, nm in zip(traj.times, traj.states, norms):
            row = [str(idx), f"{t:.12g}"] + [f"{v:.17g}" for v in x] + [f"{nm:.12g}"]
            buf.write(",".join(row) + "\n")
    return buf.getvalue()


def cmd_check(args) -> int:
    with open(args.file, "r", encoding="utf-8") as fh:
        n, c, L, Q = parse_system_raw(fh.read())
    report = AnalysisReport("check", inputs={"file": args.file, "n": n})
    asym = max_asymmetry(Q)
    triple, res = worst_energy_triple(0.5 * (Q + np.transpose(Q, (0, 2, 1))))
    sym_ok = asym <= 1e-12
    energy_ok = abs(res) <= 1e-12
    report.results["max_asymmetry"] = asym
    report.results["worst_energy_residual"] = res
    report.results["worst_energy_triple"] = f"({triple[0]},{triple[1]},{triple[2]})"
    report.results["symmetry"] = "PASS" if sym_ok else "FAIL"
    report.results["energy_preserving"] = "PASS" if energy_ok else "FAIL"
    report.results["verdict"] = "PASS" if (sym_ok and energy_ok) else "FAIL"
    return _finish(args, report, EXIT_OK if (sym_ok and energy_ok) else EXIT_NEGATIVE)


def cmd_trap(args) -> int:
    sys = load_system(args.file)
    opts = SolverOptions(seed=_seed_from(args))
    if args.tol is not None:
        opts.tol = args.tol
    if args.max_iter is not None:
        opts.max_bisect = args.max_iter
    res = solve(sys, opts)
    report = AnalysisReport("trap", inputs={"file": args.file, **_system_digest(sys)})
    report.results["a_star"] = res.a_star
    report.results["m_star"] = res.m_star
    report.results["status"] = res.status
    for k, v in res.solver_info.items():
        if k == "warnings":
            report.warnings.extend(v)
        else:
            report.results[f"solver.{k}"] = v
    ok = res.status is TrapStatus.BOUNDED_CERTIFIED
    return _finish(args, report, EXIT_OK if ok else EXIT_NEGATIVE)


def cmd_canon2d(args) -> int:
    from .canonical2d import extract_q

    sys = load_system(args.file)
    canon = to_canonical(sys)
    verdict = classify_2d(sys, eps=args.eps)
    report = AnalysisReport("canon2d", inputs={"file": args.file, **_system_digest(sys)})
    report.results["q"] = extract_q(sys)
    report.results["q0"] = canon.q0
    report.results["R"] = canon.R.reshape(-1)
    report.results["c_hat"] = canon.c_hat
    report.results["l11"] = canon.l11
    report.results["l12"] = canon.l12
    report.results["l21"] = canon.l21
    report.results["l22"] = canon.l22
    report.results["classification"] = verdict.classification
    report.results["lmi_feasible"] = verdict.lmi_feasible
    if verdict.witness_m is not None:
        report.results["witness_m"] = verdict.witness_m
    if verdict.escape_x0 is not None:
        report.results["escape_x0"] = verdict.escape_x0
    ok = verdict.lmi_feasible
    return _finish(args, report, EXIT_OK if ok else EXIT_NEGATIVE)


def cmd_effective(args) -> int:
    sys = load_system(args.file)
    verdict = check_effective(sys, samples=args.samples, seed=_seed_from(args))
    report = AnalysisReport("effective", inputs={"file": args.file, **_system_digest(sys)})
    report.results["result"] = verdict.result
    report.results["candidates_checked"] = len(verdict.candidates_checked)
    if verdict.witness is not None:
        report.results["witness_dim"] = verdict.witness.dim
        report.results["witness_basis"] = verdict.witness.basis.reshape(-1)
    if verdict.note:
        report.warnings.append(verdict.note)
    for i, rec in enumerate(verdict.candidates_checked):
        basis = rec.subspace.basis.reshape(-1)
        verdictstr = "witness" if rec.is_witness else rec.reason
        report.results[f"candidate.{i}"] = (
            f"dim={rec.subspace.dim} source={rec.source} "
            f"basis={_fmt_value(basis)} -> {verdictstr}"
        )
        if rec.failing_image is not None:
            report.results[f"candidate.{i}.failing_image"] = rec.failing_image
    ok = verdict.result is EffResult.EFFECTIVE
    return _finish(args, report, EXIT_OK if ok else EXIT_NEGATIVE)


def _parse_x0(text: str, n: int) -> np.ndarray:
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ParseError(f"could not parse --x0 value {text!r}") from None
    if len(vals) != n:
        raise ParseError(f"--x0 needs {n} components, got {len(vals)}")
    return np.array(vals)


def cmd_simulate(args) -> int:
    sys = load_system(args.file)
    x0 = _parse_x0(args.x0, sys.n)
    opts = IntegratorOptions(
        rtol=args.rtol, atol=args.atol, t_final=args.t_final,
        max_step=args.max_step if args.max_step else np.inf,
    )
    traj = integrate(sys, x0, opts)
    report = AnalysisReport("simulate", inputs={"file": args.file, **_system_digest(sys)})
    report.results["x0"] = x0
    report.results["t_final"] = args.t_final
    report.results["status"] = traj.status
    report.results["steps"] = len(traj.times) - 1
    report.results["t_end"] = float(traj.times[-1])
    report.results["final_norm"] = float(np.linalg.norm(traj.states[-1]))
    if traj.diverged_at is not None:
        report.results["diverged_at"] = traj.diverged_at
    code = {
        TrajectoryStatus.COMPLETED: EXIT_OK,
        TrajectoryStatus.DIVERGED: EXIT_NEGATIVE,
        TrajectoryStatus.STEP_FAILURE: EXIT_SOLVER,
    }[traj.status]
    return _finish(args, report, code, trajectories=[traj], csv_text=_trajectory_csv([traj]))


def cmd_probe(args) -> int:
    sys = load_system(args.file)
    opts = IntegratorOptions(t_final=args.t_final)
    probe = probe_boundedness(
        sys, trials=args.trials, radius=args.radius, opts=opts, seed=_seed_from(args)
    )
    report = AnalysisReport("probe", inputs={"file": args.file, **_system_digest(sys)})
    report.results["verdict"] = probe.verdict
    report.results["trials"] = probe.trials
    if probe.beta_est is not None:
        report.results["beta_est"] = probe.beta_est
        report.results["t_est"] = probe.t_est
    if probe.divergent_x0 is not None:
        report.results["divergent_x0"] = probe.divergent_x0
    trajectories = None
    if getattr(args, "plot", None):
        rng = np.random.default_rng(_seed_from(args))
        starts = [args.radius * e for e in np.eye(sys.n)]
        for _ in range(3):
            d = rng.standard_normal(sys.n)
            starts.append(args.radius * d / np.linalg.norm(d))
        trajectories = [integrate(sys, s, opts) for s in starts]
    ok = probe.verdict is ProbeVerdict.ALL_CONVERGED
    return _finish(args, report, EXIT_OK if ok else EXIT_NEGATIVE, trajectories=trajectories)


def cmd_verify_cert(args) -> int:
    sys = load_system(args.file)
    cert = load_certificate(args.cert)
    rep = verify_certificate(
        sys, cert, samples=args.samples, tol=args.tol,
        trajectories=args.trajectories, seed=_seed_from(args),
    )
    report = AnalysisReport("verify-cert", inputs={"file": args.file, "cert": args.cert,
                                                   **_system_digest(sys)})
    report.results["mv_eigs"] = rep.mv_eigs
    report.results["n_eigs"] = rep.n_eigs
    report.results["max_derivative_residual"] = rep.max_derivative_residual
    report.results["positivity"] = "PASS" if rep.positivity_ok else "FAIL"
    report.results["derivative_identity"] = "PASS" if rep.identity_ok else "FAIL"
    report.results["n_semidefinite"] = "PASS" if rep.n_negative_ok else "FAIL"
    report.results["exponential_decay"] = "PASS" if rep.decay_ok else "FAIL"
    report.results["verdict"] = "PASS" if rep.passed else "FAIL"
    return _finish(args, report, EXIT_OK if rep.passed else EXIT_NEGATIVE)


def cmd_demo_counterexample(args) -> int:
    sys, cert = builtin_counterexample()
    seed = _seed_from(args)
    rep = verify_certificate(sys, cert, samples=1000, tol=1e-8, seed=seed)
    eff = check_effective(sys, seed=seed)
    trap = solve(sys, SolverOptions(seed=seed))
    bounded_ok = rep.passed
    effective_ok = eff.result is EffResult.EFFECTIVE
    eigen_ok = trap.status is TrapStatus.NO_TRAPPING_REGION and abs(trap.a_star - 0.5) < 1e-6

    report = AnalysisReport("demo-counterexample", inputs=_system_digest(sys))
    report.results["1_long_term_bounded"] = "PASS" if bounded_ok else "FAIL"
    report.results["1_detail"] = (
        "quartic certificate verified: origin globally exponentially stable "
        f"(max identity residual {rep.max_derivative_residual:.3e})"
    )
    report.results["2_effective_nonlinearity"] = "PASS" if effective_ok else "FAIL"
    report.results["2_detail"] = (
        f"{len(eff.candidates_checked)} candidate subspaces scanned, none invariant"
    )
    report.results["3_positive_eigenvalue_for_any_shift"] = "PASS" if eigen_ok else "FAIL"
    report.results["3_detail"] = (
        f"a_star={trap.a_star:.9g} > 0, status {trap.status.value}"
    )
    overall = bounded_ok and effective_ok and eigen_ok
    report.results["counterexample_confirmed"] = "PASS" if overall else "FAIL"

    trajectories = None
    if getattr(args, "plot", None):
        rng = np.random.default_rng(seed)
        opts = IntegratorOptions(t_final=20.0)
        trajectories = []
        for _ in range(6):
            x0 = rng.standard_normal(3)
            x0 *= rng.uniform(2.0, 10.0) / np.linalg.norm(x0)
            trajectories.append(integrate(sys, x0, opts))
    return _finish(args, report, EXIT_OK if overall else EXIT_NEGATIVE, trajectories=trajectories)


def cmd_demo_lorenz(args) -> int:
    sys = lorenz_system()
    seed = _seed_from(args)
    trap = solve(sys, SolverOptions(seed=seed))
    probe = probe_boundedness(sys, trials=20, radius=10.0,
                              opts=IntegratorOptions(t_final=50.0), seed=seed)
    report = AnalysisReport("demo-lorenz", inputs=_system_digest(sys))
    report.results["a_star"] = trap.a_star
    report.results["m_star"] = trap.m_star
    report.results["trap_status"] = trap.status
    report.results["probe_verdict"] = probe.verdict
    if probe.beta_est is not None:
        report.results["beta_est"] = probe.beta_est
    ok = (trap.status is TrapStatus.BOUNDED_CERTIFIED
          and probe.verdict is ProbeVerdict.ALL_CONVERGED)
    report.results["verdict"] = "PASS" if ok else "FAIL"
    trajectories = None
    if getattr(args, "plot", None):
        rng = np.random.default_rng(seed)
        opts = IntegratorOptions(t_final=30.0)
        trajectories = [integrate(sys, 10.0 * rng.standard_normal(3), opts) for _ in range(4)]
    return _finish(args, report, EXIT_OK if ok else EXIT_NEGATIVE, trajectories=trajectories)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadbound",
        description="Boundedness analysis of quadratic systems with "
                    "energy-preserving nonlinearity.",
        epilog=f"Default seed comes from ${_SEED_ENV} (else 0). CSV output is "
               "gnuplot-friendly (norm-vs-time in the last column).",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["human", "kv", "csv"], default="human")
    common.add_argument("--out", metavar="PATH", help="write the report/CSV to a file")
    common.add_argument("--seed", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common],
                       help="validate symmetry and the energy-preserving constraint")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("trap", parents=[common],
                       help="solve the trapping-region eigenvalue program")
    p.add_argument("file")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.set_defaults(func=cmd_trap)

    p = sub.add_parser("canon2d", parents=[common],
                       help="2D canonical form and closed-form classification")
    p.add_argument("file")
    p.add_argument("--eps", type=float, default=1.0)
    p.set_defaults(func=cmd_canon2d)

    p = sub.add_parser("effective", parents=[common],
                       help="effective-nonlinearity candidate scan")
    p.add_argument("file")
    p.add_argument("--samples", type=int, default=10000)
    p.set_defaults(func=cmd_effective)

    p = sub.add_parser("simulate", parents=[common], help="integrate one trajectory")
    p.add_argument("file")
    p.add_argument("--x0", required=True, help="comma-separated initial state")
    p.add_argument("--t-final", type=float, default=50.0)
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--atol", type=float, default=1e-10)
    p.add_argument("--max-step", type=float, default=None)
    p.add_argument("--plot", metavar="PATH", help="render a trajectory figure")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("probe", parents=[common], help="empirical boundedness probe")
    p.add_argument("file")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--radius", type=float, default=10.0)
    p.add_argument("--t-final", type=float, default=50.0)
    p.add_argument("--plot", metavar="PATH")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("verify-cert", parents=[common],
                       help="verify a quartic Lyapunov certificate")
    p.add_argument("file")
    p.add_argument("--cert", required=True, metavar="CERTFILE")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--trajectories", type=int, default=5)
    p.set_defaults(func=cmd_verify_cert)

    p = sub.add_parser("demo-counterexample", parents=[common],
                       help="run the built-in bounded-but-untrappable demonstration")
    p.add_argument("--plot", metavar="PATH")
    p.set_defaults(func=cmd_demo_counterexample)

    p = sub.add_parser("demo-lorenz", parents=[common],
                       help="run the Lorenz positive control")
    p.add_argument("--plot", metavar="PATH")
    p.set_defaults(func=cmd_demo_lorenz)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, NotSymmetric, NotEnergyPreserving, TrivialNonlinearity,
            FileNotFoundError, IsADirectoryError) as exc:
        _sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (MaxIterations, UnboundedBelow) as exc:
        _sys.stderr.write(f"solver failure: {exc}\n")
        return EXIT_SOLVER
    except QuadboundError as exc:
        _sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
