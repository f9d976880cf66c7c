"""Command-line interface.

Commands:
    synth      synthesize a feedback realization for a problem document
    verify     re-check a written report against its problem
    example    write the bundled demonstration problem
    simulate   integrate moments, alone or against a realization

Exit codes: 0 success; 1 malformed input or bad parameters; 2 infeasible
channel count; 3 verification, self-check, or trajectory comparison failed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .demo import demo_problem
from .errors import (
    AlgebraicLoopError,
    DivergenceError,
    HamlinkError,
    InfeasibleChannelCountError,
    SingularParameterError,
    ValidationError,
)
from .files import (
    _as_matrix,
    _dumps,
    load_problem,
    load_report,
    make_provenance,
    save_problem,
    save_report,
)
from .lqss import direct_dynamics
from .symcore import special_svd
from .synth import SynthOptions, min_channels, synthesize
from .verify import (
    check_equivalence,
    closed_loop_dynamics,
    compare_moment_trajectories,
    simulate_moments,
)

__all__ = ["main", "app"]


def _err(message: str) -> None:
    print(message, file=sys.stderr)


def _parse_csv(text: str, flag: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise ValidationError(
            f"{flag} expects comma-separated numbers, got {text!r}"
        ) from None


def _load_matrix_file(path: str) -> np.ndarray:
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{p}: invalid JSON at line {exc.lineno}: {exc.msg}"
        ) from exc
    return _as_matrix(doc, "p", str(p))


def _merge_options(base: SynthOptions, args: argparse.Namespace) -> SynthOptions:
    updates = {}
    if getattr(args, "m", None) is not None:
        updates["m"] = args.m
    for flag in ("y1", "y2", "ga1", "ga2"):
        raw = getattr(args, flag, None)
        if raw is not None:
            updates[flag] = _parse_csv(raw, "--" + flag)
    if getattr(args, "p_matrix", None) is not None:
        updates["p"] = _load_matrix_file(args.p_matrix)
    if getattr(args, "rank_tol", None) is not None:
        updates["rank_tol"] = args.rank_tol
    return dataclasses.replace(base, **updates) if updates else base


def _print_report(report) -> None:
    for name in (
        "drift_residual",
        "skew_drift_residual",
        "noise_residual",
        "coupling_residual",
    ):
        value = getattr(report, name)
        verdict = "ok" if value <= report.tol else "FAIL"
        print(f"  {name:22s} {value:12.3e}  tol {report.tol:g}  {verdict}")
    for name, ok in report.flags.items():
        print(f"  {name:22s} {'ok' if ok else 'FAIL'}")
    if report.moment_residual is not None:
        tol = report.moment_tol if report.moment_tol is not None else report.tol
        verdict = "ok" if report.moment_residual <= tol else "FAIL"
        print(
            f"  {'moment_residual':22s} {report.moment_residual:12.3e}"
            f"  tol {tol:g}  {verdict}"
        )
    if report.passed:
        print("verdict: PASS")
    else:
        print(f"verdict: FAIL ({', '.join(report.failing())})")


def _default_report_path(problem_path: Path) -> Path:
    return problem_path.with_suffix(".report.json")


def _synth_one(problem_path: Path, out_path: Path, args: argparse.Namespace) -> int:
    problem = load_problem(problem_path)
    options = _merge_options(problem.options, args)
    di = problem.interaction
    realization = synthesize(
        di.sys_a.r, di.sys_b.r, di.r_ab, options=options
    )
    report = check_equivalence(di, realization, tol=args.tol)
    provenance = make_provenance(problem_path, options)
    save_report(realization, report, provenance, out_path)
    print(f"{problem_path}: m={realization.m}, report written to {out_path}")
    _print_report(report)
    return 0 if report.passed else 3


def _code_for(exc: Exception, command: str) -> int:
    if isinstance(exc, InfeasibleChannelCountError):
        return 2
    if isinstance(exc, (ValidationError, SingularParameterError)):
        return 1
    if isinstance(exc, (AlgebraicLoopError, DivergenceError)):
        # During synthesis these stem from the user's parameter choices;
        # during verification or simulation they are failed checks.
        return 1 if command == "synth" else 3
    if isinstance(exc, HamlinkError):
        return 3
    if isinstance(exc, OSError):
        return 1
    raise exc


def cmd_synth(args: argparse.Namespace) -> int:
    if (args.problem is None) == (args.batch is None):
        _err("synth needs exactly one of a problem path or --batch DIR")
        return 1
    if args.batch is None:
        problem_path = Path(args.problem)
        out_path = (
            Path(args.output) if args.output else _default_report_path(problem_path)
        )
        return _synth_one(problem_path, out_path, args)

    directory = Path(args.batch)
    if not directory.is_dir():
        _err(f"--batch: {directory} is not a directory")
        return 1
    paths = sorted(
        p for p in directory.glob("*.json") if not p.name.endswith(".report.json")
    )
    if not paths:
        _err(f"--batch: no problem documents in {directory}")
        return 1
    worst = 0
    for path in paths:
        try:
            code = _synth_one(path, _default_report_path(path), args)
        except Exception as exc:  # per-file isolation; mapping decides
            code = _code_for(exc, "synth")
            _err(f"{path}: {exc}")
        worst = max(worst, code)
    print(f"batch: {len(paths)} problems, worst exit code {worst}")
    return worst


def cmd_verify(args: argparse.Namespace) -> int:
    problem = load_problem(args.problem)
    doc = load_report(args.report)
    report = check_equivalence(
        problem.interaction, doc.realization, tol=args.tol
    )
    if args.simulate is not None:
        t_final, dt = args.simulate
        residual = compare_moment_trajectories(
            direct_dynamics(problem.interaction),
            closed_loop_dynamics(problem.interaction, doc.realization),
            t_final,
            dt,
        )
        report = dataclasses.replace(
            report, moment_residual=residual, moment_tol=args.sim_tol
        )
    print(f"{args.report} against {args.problem}:")
    _print_report(report)
    return 0 if report.passed else 3


def cmd_example(args: argparse.Namespace) -> int:
    problem = demo_problem()
    out_path = Path(args.output)
    save_problem(problem, out_path)
    print(f"wrote {out_path}")

    di = problem.interaction
    svd = special_svd(di.r_ab)
    realization = synthesize(di.sys_a.r, di.sys_b.r, di.r_ab)
    print("expected outcomes when synthesizing this problem:")
    print(f"  minimum channel count: {min_channels(di.r_ab)}")
    with np.printoptions(precision=4, suppress=True):
        print(f"  coupling block diagonals: {svd.block1_diag()} "
              f"and {svd.block2_diag()}")
        print("  loop matrix x:")
        print("    " + str(realization.x).replace("\n", "\n    "))
        print("  loop gain sigma:")
        print("    " + str(realization.sigma).replace("\n", "\n    "))
    report = check_equivalence(di, realization, tol=args.tol)
    _print_report(report)
    return 0 if report.passed else 3


def _trajectory_doc(traj) -> dict:
    return {
        "format": "hamlink-trajectory",
        "format_version": 1,
        "times": [float(t) for t in traj.times],
        "means": [[float(v) for v in row] for row in traj.means],
        "covariances": [
            [[float(v) for v in row] for row in cov] for cov in traj.covariances
        ],
    }


def cmd_simulate(args: argparse.Namespace) -> int:
    problem = load_problem(args.problem)
    direct = direct_dynamics(problem.interaction)
    if args.realization is not None:
        doc = load_report(args.realization)
        closed = closed_loop_dynamics(problem.interaction, doc.realization)
        residual = compare_moment_trajectories(
            direct, closed, args.t_final, args.dt
        )
        verdict = "ok" if residual <= args.sim_tol else "FAIL"
        print(
            f"max moment deviation over [0, {args.t_final:g}] at dt={args.dt:g}: "
            f"{residual:.3e}  tol {args.sim_tol:g}  {verdict}"
        )
        return 0 if residual <= args.sim_tol else 3

    traj = simulate_moments(direct, args.t_final, args.dt)
    final_mean = float(np.max(np.abs(traj.means[-1]))) if traj.means.size else 0.0
    final_cov = traj.covariances[-1]
    print(
        f"simulated to t={traj.times[-1]:g} in {len(traj.times) - 1} steps; "
        f"final max |mean| {final_mean:.6g}, final cov trace "
        f"{float(np.trace(final_cov)):.6g}"
    )
    if args.output:
        Path(args.output).write_text(_dumps(_trajectory_doc(traj)))
        print(f"trajectory written to {args.output}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hamlink",
        description=(
            "Synthesize and verify feedback realizations of bilinear "
            "couplings between open linear systems."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"hamlink {__version__}"
    )
    sub = parser.add_subparsers(dest="command")

    p_synth = sub.add_parser(
        "synth", help="synthesize a realization and write a report"
    )
    p_synth.add_argument("problem", nargs="?", help="problem document path")
    p_synth.add_argument(
        "--batch", metavar="DIR",
        help="process every *.json problem in DIR instead of a single file",
    )
    p_synth.add_argument(
        "--output", "-o", metavar="PATH",
        help="report path (default: problem path with .report.json)",
    )
    p_synth.add_argument(
        "--tol", type=float, default=1e-8,
        help="scaled residual tolerance for the built-in checks (default 1e-8)",
    )
    p_synth.add_argument("--m", type=int, help="interconnection channel count")
    p_synth.add_argument("--y1", metavar="CSV", help="loop diagonal, first half")
    p_synth.add_argument("--y2", metavar="CSV", help="loop diagonal, second half")
    p_synth.add_argument("--ga1", metavar="CSV", help="first-system gains, first half")
    p_synth.add_argument("--ga2", metavar="CSV", help="first-system gains, second half")
    p_synth.add_argument(
        "--p-matrix", metavar="PATH",
        help="JSON file with an orthogonal symplectic mixing matrix",
    )
    p_synth.add_argument(
        "--rank-tol", type=float,
        help="relative rank threshold for the coupling (default 1e-10)",
    )
    p_synth.set_defaults(func=cmd_synth)

    p_verify = sub.add_parser(
        "verify", help="re-check a report against its problem"
    )
    p_verify.add_argument("problem", help="problem document path")
    p_verify.add_argument("report", help="report document path")
    p_verify.add_argument(
        "--tol", type=float, default=1e-8,
        help="scaled residual tolerance (default 1e-8)",
    )
    p_verify.add_argument(
        "--simulate", nargs=2, type=float, metavar=("T_FINAL", "DT"),
        help="also compare moment trajectories over [0, T_FINAL] at step DT",
    )
    p_verify.add_argument(
        "--sim-tol", type=float, default=1e-6,
        help="absolute tolerance for the trajectory comparison (default 1e-6)",
    )
    p_verify.set_defaults(func=cmd_verify)

    p_example = sub.add_parser(
        "example", help="write the bundled demonstration problem"
    )
    p_example.add_argument(
        "--output", "-o", metavar="PATH", default="demo_problem.json",
        help="where to write the problem (default demo_problem.json)",
    )
    p_example.add_argument(
        "--tol", type=float, default=1e-8,
        help="scaled residual tolerance for the printed checks (default 1e-8)",
    )
    p_example.set_defaults(func=cmd_example)

    p_sim = sub.add_parser(
        "simulate", help="integrate moments of the direct dynamics"
    )
    p_sim.add_argument("problem", help="problem document path")
    p_sim.add_argument(
        "--realization", metavar="PATH",
        help="report document; compare its closed loop against the direct form",
    )
    p_sim.add_argument(
        "--t-final", type=float, default=10.0,
        help="integration horizon (default 10)",
    )
    p_sim.add_argument(
        "--dt", type=float, default=1e-3, help="time step (default 1e-3)"
    )
    p_sim.add_argument(
        "--sim-tol", type=float, default=1e-6,
        help="absolute tolerance in comparison mode (default 1e-6)",
    )
    p_sim.add_argument(
        "--output", "-o", metavar="PATH",
        help="write the simulated trajectory as JSON (plain mode only)",
    )
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "func", None) is None:
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except Exception as exc:
        code = _code_for(exc, args.command)
        _err(f"error: {exc}")
        return code


def app() -> None:
    raise SystemExit(main())
