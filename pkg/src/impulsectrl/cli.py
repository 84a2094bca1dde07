"""Command-line front end.

Subcommands: simulate, adjoint, duality-check, gramian, check, synthesize,
wave-demo.  All file outputs are written atomically into ``--output-dir``;
exit codes: 0 success, 1 config/IO error, 2 validation failure, 3 not
controllable (check only), 4 inconclusive.
"""

from __future__ import annotations

import argparse
import os
import sys as _sys

import numpy as np

from . import serialize
from ._backend import backend_name
from .controllability import DEFAULT_DECAY_TOL, DEFAULT_RANK_TOL, PROBE_SEED, controllability_report
from .errors import ConfigError, ImpulseCtrlError, ValidationError
from .gramian import gramian_set
from .model import ImpulsiveSystem, validate_control, zero_control
from .propagation import (
    adjoint_post_impulse,
    adjoint_solution,
    control_values,
    duality_gap,
    mild_solution,
    simulate,
)
from .quadrature import QuadratureConfig
from .synthesis import steer, steer_to_tolerance
from .wave import wave_demo

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VALIDATION = 2
EXIT_NOT_CONTROLLABLE = 3
EXIT_INCONCLUSIVE = 4


def _parse_vector(text: str, what: str) -> np.ndarray:
    if text.startswith("@"):
        node = serialize._load_json_file(text[1:])
        return serialize._vector(node, text[1:])
    try:
        return np.array([float(v) for v in text.split(",") if v.strip() != ""])
    except ValueError as exc:
        raise ConfigError(f"{what}: expected comma-separated numbers or @file, got {text!r}") from exc


def _common_flags(parser: argparse.ArgumentParser, nodes_default: int = 64):
    parser.add_argument("--output-dir", default=".", help="directory for output files")
    parser.add_argument(
        "--quadrature-nodes", type=int, default=nodes_default, metavar="N",
        help=f"Gauss-Legendre nodes per smooth panel (default {nodes_default})",
    )
    parser.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL, metavar="X")
    parser.add_argument("--seed", type=int, default=PROBE_SEED, metavar="S")


def _quad(args) -> QuadratureConfig:
    try:
        return QuadratureConfig(args.quadrature_nodes)
    except ValueError as exc:
        raise ConfigError(f"--quadrature-nodes: {exc}") from exc


def _out(args, name: str) -> str:
    os.makedirs(args.output_dir, exist_ok=True)
    return os.path.join(args.output_dir, name)


def _load_control(sys_: ImpulsiveSystem, args):
    if getattr(args, "control", None):
        w = serialize.load_control(sys_, args.control)
    else:
        w = zero_control(sys_)
    report = validate_control(sys_, w)
    if not report.ok:
        raise ValidationError(report.violations)
    return w


def _x0(sys_: ImpulsiveSystem, args) -> np.ndarray:
    if getattr(args, "x0", None):
        x0 = _parse_vector(args.x0, "--x0")
        if x0.shape != (sys_.n,):
            raise ConfigError(f"--x0: expected {sys_.n} components, got {x0.shape[0]}")
        return x0
    return np.zeros(sys_.n)


def _sample_grid(sys_: ImpulsiveSystem, args) -> np.ndarray:
    if getattr(args, "grid", None):
        grid = _parse_vector(args.grid, "--grid")
    else:
        grid = np.linspace(0.0, sys_.horizon, args.samples)
    if grid.size and (grid.min() < 0.0 or grid.max() > sys_.horizon):
        raise ConfigError("--grid: sample times must lie within [0, horizon]")
    return grid


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_simulate(args) -> int:
    sys_ = serialize.load_system(args.system)
    w = _load_control(sys_, args)
    traj = simulate(sys_, _x0(sys_, args), w, _sample_grid(sys_, args), _quad(args))
    header = ["t", "side"] + [f"x_{i + 1}" for i in range(sys_.n)]
    rows = [[t, side, *state] for t, side, state in zip(traj.times, traj.sides, traj.states)]
    path = _out(args, "trajectory.csv")
    serialize.write_csv(path, header, rows)
    print(f"wrote {path} ({len(rows)} samples)")
    return EXIT_OK


def _cmd_adjoint(args) -> int:
    sys_ = serialize.load_system(args.system)
    phi = _parse_vector(args.phi, "--phi")
    if phi.shape != (sys_.n,):
        raise ConfigError(f"--phi: expected {sys_.n} components, got {phi.shape[0]}")
    grid = _sample_grid(sys_, args)
    impulse_times = set(float(t) for t in sys_.times)
    rows = []
    for k, stage in enumerate(sys_.stages, start=1):
        rows.append((stage.time, "L", adjoint_solution(sys_, phi, stage.time)))
        rows.append((stage.time, "R", adjoint_post_impulse(sys_, phi, k)))
    for t in sorted(set(float(t) for t in grid) - impulse_times):
        rows.append((t, "-", adjoint_solution(sys_, phi, t)))
    rows.sort(key=lambda r: (r[0], 0 if r[1] in ("-", "L") else 1))
    header = ["t", "side"] + [f"psi_{i + 1}" for i in range(sys_.n)]
    path = _out(args, "adjoint.csv")
    serialize.write_csv(path, header, [[t, side, *psi] for t, side, psi in rows])
    print(f"wrote {path} ({len(rows)} samples)")
    return EXIT_OK


def _cmd_duality_check(args) -> int:
    sys_ = serialize.load_system(args.system)
    w = _load_control(sys_, args)
    phi = _parse_vector(args.phi, "--phi")
    if phi.shape != (sys_.n,):
        raise ConfigError(f"--phi: expected {sys_.n} components, got {phi.shape[0]}")
    x0 = _x0(sys_, args)
    q = _quad(args)
    gap = duality_gap(sys_, x0, w, phi, q)
    x_b = mild_solution(sys_, x0, w, sys_.horizon, q)
    psi_0 = adjoint_solution(sys_, phi, 0.0)
    lhs = float(x_b @ phi - x0 @ psi_0)
    path = _out(args, "duality.json")
    serialize.write_json(
        path, {"schema": 1, "lhs": lhs, "rhs": lhs - gap, "gap": gap}
    )
    print(f"duality gap: {serialize.format_float(gap)} (report in {path})")
    return EXIT_OK


def _cmd_gramian(args) -> int:
    sys_ = serialize.load_system(args.system)
    gs = gramian_set(sys_, _quad(args))
    path = _out(args, "gramian.json")
    serialize.write_json(path, serialize.gramian_report_dict(gs))
    lam = float(np.linalg.eigvalsh(gs.total)[0])
    print(f"wrote {path} (lambda_min(W) = {serialize.format_float(lam)})")
    return EXIT_OK


def _cmd_check(args) -> int:
    sys_ = serialize.load_system(args.system)
    q = _quad(args)
    gs = gramian_set(sys_, q)
    report = controllability_report(
        sys_, q,
        rank_tol=args.rank_tol,
        decay_tol=DEFAULT_DECAY_TOL,
        probe_seed=args.seed,
        gramians=gs,
    )
    path = _out(args, "check.json")
    serialize.write_json(
        path,
        serialize.controllability_report_dict(report, gs if args.emit_matrices else None),
    )
    print(
        f"verdict: {report.verdict} (lambda_min = {serialize.format_float(report.lambda_min)}, "
        f"kalman rank {report.kalman_rank}/{report.n}); report in {path}"
    )
    if report.verdict == "controllable":
        return EXIT_OK
    if report.verdict == "not_controllable":
        return EXIT_NOT_CONTROLLABLE
    return EXIT_INCONCLUSIVE


def _cmd_synthesize(args) -> int:
    sys_ = serialize.load_system(args.system)
    q = _quad(args)
    target = _parse_vector(args.target, "--target")
    if target.shape != (sys_.n,):
        raise ConfigError(f"--target: expected {sys_.n} components, got {target.shape[0]}")
    x0 = _x0(sys_, args)
    if args.epsilon is not None:
        if args.epsilon <= 0.0:
            raise ConfigError("--epsilon must be positive")
        result = steer(sys_, q, x0, target, args.epsilon)
        converged = None
    else:
        result, converged, _history = steer_to_tolerance(sys_, q, x0, target, args.tolerance)

    out = serialize.synthesis_result_dict(result)
    if converged is not None:
        out["converged"] = converged
        out["tolerance"] = args.tolerance
    path = _out(args, "synthesis.json")
    serialize.write_json(path, out)

    ts = np.linspace(0.0, sys_.horizon, args.control_samples)
    us = control_values(sys_, result.control.distributed, ts)
    header = ["t"] + [f"u_{i + 1}" for i in range(sys_.m_inputs)]
    csv_path = _out(args, "control.csv")
    serialize.write_csv(csv_path, header, [[t, *u] for t, u in zip(ts, us)])
    if sys_.p:
        imp_path = _out(args, "impulses.csv")
        serialize.write_csv(
            imp_path,
            ["k", "t"] + [f"v_{i + 1}" for i in range(sys_.m_inputs)],
            [[str(k + 1), sys_.stages[k].time, *v] for k, v in enumerate(result.control.impulses)],
        )
    err = float(np.linalg.norm(result.achieved_error))
    print(
        f"terminal error {serialize.format_float(err)} at epsilon = "
        f"{serialize.format_float(result.epsilon)}; report in {path}"
    )
    return EXIT_OK


def _parse_target_coeffs(text: str, modes: int) -> tuple[np.ndarray, np.ndarray]:
    if text.startswith("@"):
        node = serialize._expect_mapping(serialize._load_json_file(text[1:]), text[1:])
        serialize._check_keys(node, text[1:], required=("alpha", "beta"))
        alpha = serialize._vector(node["alpha"], f"{text[1:]}.alpha")
        beta = serialize._vector(node["beta"], f"{text[1:]}.beta")
    else:
        parts = text.split(";")
        if len(parts) != 2:
            raise ConfigError("--target-coeffs: expected 'a1,..;b1,..' or @file")
        alpha = _parse_vector(parts[0], "--target-coeffs alpha")
        beta = _parse_vector(parts[1], "--target-coeffs beta")
    if alpha.shape != (modes,) or beta.shape != (modes,):
        raise ConfigError(f"--target-coeffs: expected {modes} alpha and beta coefficients")
    return alpha, beta


def _cmd_wave_demo(args) -> int:
    wm = serialize.load_wave_model(args.model)
    if args.modes is not None:
        if not 1 <= args.modes <= wm.modes:
            raise ConfigError(f"--modes: must lie in 1..{wm.modes}")
        wm = wm.truncated(args.modes)
    alpha, beta = _parse_target_coeffs(args.target_coeffs, wm.modes)
    if args.epsilon <= 0.0:
        raise ConfigError("--epsilon must be positive")

    demo = wave_demo(
        wm, alpha, beta, args.epsilon,
        q=_quad(args),
        rank_tol=args.rank_tol,
        time_samples=args.time_samples,
    )

    report = {
        "schema": 1,
        "modes": wm.modes,
        "verdict": demo.verdict,
        "lambda_min_gamma": demo.lambda_min_gamma,
        "gamma_eigenvalues": list(map(float, demo.gamma_eigs)),
        "synthesis": serialize.synthesis_result_dict(demo.synthesis),
        "target": {"alpha": list(map(float, alpha)), "beta": list(map(float, beta))},
    }
    path = _out(args, "wave_report.json")
    serialize.write_json(path, report)

    profile_path = _out(args, "profile.csv")
    rows = []
    for i, t in enumerate(demo.profile_times):
        for j, theta in enumerate(demo.profile_thetas):
            rows.append([t, theta, demo.profile_values[i, j]])
    serialize.write_csv(profile_path, ["t", "theta", "x"], rows)

    trace_path = _out(args, "control_trace.csv")
    serialize.write_csv(
        trace_path, ["t", "u"], [[t, u] for t, u in zip(demo.trace_times, demo.trace_values)]
    )
    err = float(np.linalg.norm(demo.synthesis.achieved_error))
    print(
        f"verdict: {demo.verdict} (lambda_min(Gamma) = "
        f"{serialize.format_float(demo.lambda_min_gamma)}); terminal error "
        f"{serialize.format_float(err)}; outputs in {args.output_dir}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="impulsectrl",
        description="Controllability analysis and minimum-energy control synthesis "
        "for impulsive linear systems",
    )
    parser.add_argument(
        "--backend", action="store_true", help="print the active kernel backend and exit"
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("simulate", help="sample a controlled trajectory to CSV")
    p.add_argument("system", help="system definition JSON")
    p.add_argument("--control", help="control JSON (default: zero control)")
    p.add_argument("--x0", help="initial state, 'a,b,...' or @file")
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--grid", help="explicit sample times 't1,t2,...'")
    _common_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("adjoint", help="sample the adjoint solution to CSV")
    p.add_argument("system")
    p.add_argument("--phi", required=True, help="terminal seed, 'a,b,...' or @file")
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--grid")
    _common_flags(p)
    p.set_defaults(func=_cmd_adjoint)

    p = sub.add_parser("duality-check", help="evaluate the forward/adjoint pairing defect")
    p.add_argument("system")
    p.add_argument("--control")
    p.add_argument("--x0")
    p.add_argument("--phi", required=True)
    _common_flags(p)
    p.set_defaults(func=_cmd_duality_check)

    p = sub.add_parser("gramian", help="assemble the four controllability operators")
    p.add_argument("system")
    _common_flags(p)
    p.set_defaults(func=_cmd_gramian)

    p = sub.add_parser("check", help="controllability verdict (exit 0/3/4)")
    p.add_argument("system")
    p.add_argument("--emit-matrices", action="store_true")
    _common_flags(p)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("synthesize", help="regularized minimum-energy steering")
    p.add_argument("system")
    p.add_argument("--target", required=True, help="terminal target, 'a,b,...' or @file")
    p.add_argument("--x0")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--epsilon", type=float)
    group.add_argument("--tolerance", type=float, help="run the epsilon schedule to this error")
    p.add_argument("--control-samples", type=int, default=101)
    _common_flags(p)
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser("wave-demo", help="truncated impulsive wave equation demo")
    p.add_argument("model", help="wave model JSON")
    p.add_argument("--target-coeffs", required=True, help="'a1,..;b1,..' or @file")
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--modes", type=int, help="truncate to the first M modes")
    p.add_argument("--time-samples", type=int, default=129)
    _common_flags(p, nodes_default=256)
    p.set_defaults(func=_cmd_wave_demo)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "backend", False) and args.command is None:
        print(backend_name())
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except ValidationError as exc:
        print("validation failed:", file=_sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=_sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except ImpulseCtrlError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG


def main():  # console entry point
    _sys.exit(run())
