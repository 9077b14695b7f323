"""
Command-line front end.

Exit codes: 0 success (all checks pass), 1 a check failed, 2 bad input
(unreadable or invalid model/trajectory, unreachable or singular motion).
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

import numpy as np

from .closed_loop import ParallelModuleParams
from .errors import PSMError
from .model_io import (
    DEMO_MODELS,
    default_sinusoid,
    generate_sinusoid_trajectory,
    read_trajectory,
    resolve_model,
    write_trajectory,
)
from .simulate import (
    INTEGRATORS,
    SimulationConfig,
    linear_fit,
    operation_counts,
    run_forward_dynamics,
    run_inverse_dynamics,
    seed_from_env,
    simulate,
    validate,
)

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_INPUT = 2


class InputError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _model(args):
    if not args.model:
        raise InputError("--model is required (a .psm path or one of: " + ", ".join(DEMO_MODELS) + ")")
    return resolve_model(args.model)


def _trajectory(args, model, kind):
    if args.traj:
        traj = read_trajectory(args.traj)
        if traj.n != model.n:
            raise InputError(f"trajectory has {traj.n} actuators, model has {model.n}")
        if traj.kind != kind:
            raise InputError(f"trajectory carries {traj.kind!r} channels, this command needs {kind!r}")
        return traj
    if kind != "xddot":
        raise InputError("--traj with force channels is required")
    return generate_sinusoid_trajectory(model, default_sinusoid(model, duration=args.duration or 10.0))


def cmd_id(args) -> int:
    model = _model(args)
    traj = _trajectory(args, model, "xddot")
    buf = io.StringIO()
    write_trajectory(run_inverse_dynamics(model, traj), buf)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_fd(args) -> int:
    model = _model(args)
    traj = _trajectory(args, model, "f")
    buf = io.StringIO()
    write_trajectory(run_forward_dynamics(model, traj), buf)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _parse_vec(text: str | None, n: int, name: str):
    if text is None:
        return None
    try:
        v = np.array([float(s) for s in text.split(",")])
    except ValueError:
        raise InputError(f"--{name} must be comma-separated numbers") from None
    if v.shape != (n,):
        raise InputError(f"--{name} needs {n} values, got {v.size}")
    return v


def _mid_state(model):
    x = np.empty(model.n)
    for k, mod in enumerate(model.modules):
        if isinstance(mod, ParallelModuleParams):
            lo, hi = mod.reachable_range()
        else:
            lo, hi = mod.limits if mod.limits is not None else (0.0, 0.0)
        x[k] = 0.5 * (lo + hi)
    return x


def cmd_simulate(args) -> int:
    model = _model(args)
    n = model.n
    x0 = _parse_vec(args.x0, n, "x0")
    x0 = _mid_state(model) if x0 is None else x0
    v0 = _parse_vec(args.xdot0, n, "xdot0")
    v0 = np.zeros(n) if v0 is None else v0
    f = _parse_vec(args.force, n, "force")
    try:
        cfg = SimulationConfig(args.integrator, args.step, args.duration or 1.0, args.decimation)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    res = simulate(model, x0, v0, cfg, forces=f)
    names = []
    for i in range(1, n + 1):
        names += [f"x{i}", f"xdot{i}", f"xddot{i}"]
    cols = [res.t[:, None]]
    for i in range(n):
        cols += [res.x[:, i : i + 1], res.xdot[:, i : i + 1], res.xddot[:, i : i + 1]]
    cols += [res.kinetic[:, None], res.potential[:, None], res.energy[:, None]]
    buf = io.StringIO()
    buf.write(f"# channels: {','.join(names)}\n")
    buf.write(f"# rate: {1.0 / (cfg.step * cfg.decimation)!r}\n")
    buf.write(f"# integrator: {cfg.integrator}, step {cfg.step!r} s\n")
    buf.write("t," + ",".join(names) + ",kinetic,potential,energy\n")
    np.savetxt(buf, np.hstack(cols), delimiter=",", fmt="%.17g")
    _emit(buf.getvalue(), args.out)
    print(f"relative energy drift {res.relative_drift():.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    model = _model(args)
    seed = seed_from_env()
    report = validate(model, name=args.model, seed=seed, samples=args.samples, duration=args.duration or 10.0)
    if args.report == "json-lines":
        text = "".join(json.dumps({"model": report.model, "seed": seed, **rec}) + "\n" for rec in report.to_records())
    else:
        text = report.to_text() + "\n"
    _emit(text, args.out)
    return EXIT_OK if report.passed else EXIT_CHECK


def cmd_bench(args) -> int:
    model = _model(args)
    sizes = (1, 2, 4, 8)
    records = []
    seen = set()
    for mod in model.modules:
        key = id(mod)
        if key in seen:
            continue
        seen.add(key)
        counts = operation_counts(mod, sizes)
        a, b, res = linear_fit(counts)
        records.append({"module": mod.name or mod.kind, "kind": mod.kind, "counts": counts, "a": a, "b": b, "residual": res})
    ok = all(r["residual"] < 1e-9 for r in records)
    if args.report == "json-lines":
        text = "".join(json.dumps({**r, "counts": {str(k): v for k, v in r["counts"].items()}}) + "\n" for r in records)
    else:
        lines = ["6x6 matrix products per forward-dynamics call, chains of identical modules"]
        for r in records:
            cs = "  ".join(f"n={k}: {v}" for k, v in r["counts"].items())
            lines.append(f"  {r['module']:<12} {cs}  fit {r['a']:.6g} n + {r['b']:.6g}  residual {r['residual']:.1e}")
        lines.append("linear in n" if ok else "NOT linear in n")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="psmdyn", description="Dynamics of parallel-serial manipulators.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, traj=False):
        sp.add_argument("--model", help=f"model file (.psm) or bundled name ({', '.join(DEMO_MODELS)})")
        sp.add_argument("--out", help="output file (default: stdout)")
        if traj:
            sp.add_argument("--traj", help="trajectory CSV")
            sp.add_argument("--duration", type=float, help="duration of the generated sinusoid when --traj is absent [s]")

    common(sub.add_parser("id", help="actuator forces for an acceleration trajectory"), traj=True)
    common(sub.add_parser("fd", help="actuator accelerations for a force trajectory"), traj=True)

    sp = sub.add_parser("simulate", help="integrate the forward dynamics in time")
    common(sp)
    sp.add_argument("--step", type=float, default=1e-3, help="integration step [s]")
    sp.add_argument("--duration", type=float, default=1.0, help="simulated time [s]")
    sp.add_argument("--integrator", choices=INTEGRATORS, default="rk4")
    sp.add_argument("--decimation", type=int, default=1, help="keep every k-th step")
    sp.add_argument("--x0", help="initial positions, comma separated (default: mid-range)")
    sp.add_argument("--xdot0", help="initial rates, comma separated (default: zero)")
    sp.add_argument("--force", help="constant actuator forces, comma separated (default: zero)")

    sp = sub.add_parser("validate", help="run the validation checks")
    common(sp)
    sp.add_argument("--report", choices=("text", "json-lines"), default="text")
    sp.add_argument("--samples", type=int, default=1000, help="random states per equivalence check")
    sp.add_argument("--duration", type=float, default=10.0, help="round-trip trajectory length [s]")

    sp = sub.add_parser("bench", help="operation-count scaling report")
    common(sp)
    sp.add_argument("--report", choices=("text", "json-lines"), default="text")
    return p


COMMANDS = {"id": cmd_id, "fd": cmd_fd, "simulate": cmd_simulate, "validate": cmd_validate, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (InputError, PSMError, OSError, ValueError) as exc:
        print(f"psmdyn {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
