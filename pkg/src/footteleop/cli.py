"""Command-line front end: ``footteleop {fk,jacobian,workspace,simulate,metrics}``.

Exit codes: 0 success, 2 parse/usage error, 3 domain error, 4 simulation
fault, 5 file I/O error. All numbers are printed in SI units with ``.``
as the decimal separator.
"""
from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

from . import kinematics as kin
from .teleop import compute_metrics, run_scenario
from .teleop.config_file import ScenarioParseError, bundled_scenario_path, load_scenario
from .teleop.scenario import ScenarioError, SimTrace

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DOMAIN = 3
EXIT_SIMULATION = 4
EXIT_IO = 5

_QUANTITY_RE = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(deg|rad|mm|m)?$")
_PRISMATIC_UNITS = {None: 1.0, "m": 1.0, "mm": 1e-3}
_REVOLUTE_UNITS = {None: 1.0, "rad": 1.0, "deg": np.pi / 180.0}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def parse_quantity(token: str, prismatic: bool) -> float:
    """Number with an optional unit suffix: ``mm``/``m`` for lengths, ``deg``/``rad`` for angles."""
    m = _QUANTITY_RE.match(token.strip())
    if not m:
        raise CliError(f"cannot parse {token!r} as a number", EXIT_PARSE)
    units = _PRISMATIC_UNITS if prismatic else _REVOLUTE_UNITS
    if m.group(2) not in units:
        kind = "a length" if prismatic else "an angle"
        raise CliError(f"unit '{m.group(2)}' is not valid for {kind} in {token!r}", EXIT_PARSE)
    return float(m.group(1)) * units[m.group(2)]


def parse_joints(tokens: list[str]) -> np.ndarray:
    if len(tokens) != 5:
        raise CliError(f"expected 5 joint values (d1 d2 theta phi psi), got {len(tokens)}", EXIT_PARSE)
    return np.array([parse_quantity(t, i < 2) for i, t in enumerate(tokens)])


def _fmt(v: float, digits: int) -> str:
    return f"{round(float(v), digits) + 0.0:.{digits}f}"


def _limited_joints(args) -> np.ndarray:
    joints = kin.PlatformJoints.from_array(parse_joints(args.joints))
    bad = joints.violations()
    if bad and args.strict:
        raise CliError("joint limit violation: " + "; ".join(bad), EXIT_DOMAIN)
    if bad:
        print("warning: clamped to joint limits: " + "; ".join(bad), file=sys.stderr)
        joints = joints.clamp()
    return joints.as_array()


def cmd_fk(args) -> int:
    q = _limited_joints(args)
    frames = kin.forward_kinematics(kin.DEFAULT_CHAIN, q, kin.LimitPolicy.IGNORE)
    tip = frames[-1].translation
    print("tip: " + " ".join(_fmt(v, 3) for v in tip))
    if args.frames:
        for name, T in zip(kin.FRAME_NAMES, frames):
            pos = " ".join(_fmt(v, 6) for v in T.translation)
            rot = " ".join(_fmt(v, 6) for v in T.rotation.ravel())
            print(f"frame {name}: position {pos} rotation {rot}")
    return EXIT_OK


def cmd_jacobian(args) -> int:
    q = _limited_joints(args)
    J = kin.translational_jacobian(q)
    print("rows x y z, columns " + " ".join(kin.JOINT_NAMES))
    for row in J:
        print(" ".join(_fmt(v, 6) for v in row))
    return EXIT_OK


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="ascii")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from None


def cmd_workspace(args) -> int:
    voxel = parse_quantity(args.voxel, prismatic=True)
    try:
        est = kin.sample_workspace(
            monte_carlo_n=args.samples,
            voxel=voxel,
            samples_per_axis=args.grid,
            seed=args.seed,
            freeze_rotations=args.freeze_rotations,
        )
    except kin.KinematicsDomainError as exc:
        raise CliError(str(exc), EXIT_DOMAIN) from None
    out = Path(args.out_dir)
    summary = (
        "volume_m3,rect_x_m,rect_y_m\n"
        f"{est.volume_m3:.6f},{est.rect_x_m:.6f},{est.rect_y_m:.6f}\n"
    )
    _write(out / "summary.csv", summary)
    if not args.no_cloud:
        lines = ["x,y,z"]
        lines += [f"{x:.6f},{y:.6f},{z:.6f}" for x, y, z in est.points.tolist()]
        _write(out / "cloud.csv", "\n".join(lines) + "\n")
    print(f"samples: {est.n_samples}")
    print(f"voxel_m: {est.voxel:.6g}")
    print(f"volume_m3: {est.volume_m3:.6f}")
    print(f"rect_x_m: {est.rect_x_m:.6f}")
    print(f"rect_y_m: {est.rect_y_m:.6f}")
    return EXIT_OK


def _scenario_path(spec: str) -> Path:
    path = Path(spec)
    if path.exists():
        return path
    bundled = bundled_scenario_path(spec)
    if bundled.exists():
        return bundled
    raise CliError(f"no scenario file or bundled scenario named {spec!r}", EXIT_IO)


def _print_metrics(report) -> None:
    for metric, group, axis, value in report.rows():
        print(f"{metric} {group} {axis}: {value:.6f}")


def cmd_simulate(args) -> int:
    path = _scenario_path(args.scenario)
    try:
        cfg = load_scenario(path)
    except ScenarioParseError as exc:
        raise CliError(f"parse error: {exc}", EXIT_PARSE) from None
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO) from None
    try:
        trace = run_scenario(cfg)
    except (ScenarioError, ValueError) as exc:
        raise CliError(f"domain error: {exc}", EXIT_DOMAIN) from None

    out = Path(args.out_dir)
    trace_path = Path(args.trace) if args.trace else out / "trace.csv"
    metrics_path = Path(args.metrics) if args.metrics else out / "metrics.csv"
    _write(trace_path, trace.to_csv())
    print(f"trace: {trace_path} ({len(trace.data)} rows)")
    if trace.fault is not None:
        print(f"simulation fault at t={trace.fault['t']:.6f}: {trace.fault['message']}", file=sys.stderr)
        print("partial trace retained", file=sys.stderr)
        return EXIT_SIMULATION
    report = compute_metrics(trace)
    _write(metrics_path, report.to_csv())
    print(f"metrics: {metrics_path}")
    _print_metrics(report)
    return EXIT_OK


def cmd_metrics(args) -> int:
    try:
        trace = SimTrace.read_csv(args.trace)
    except OSError as exc:
        raise CliError(f"cannot read {args.trace}: {exc.strerror or exc}", EXIT_IO) from None
    except (ValueError, StopIteration, IndexError):
        raise CliError(f"{args.trace} is not a trace file", EXIT_PARSE) from None
    try:
        report = compute_metrics(trace)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_DOMAIN) from None
    if args.out:
        _write(Path(args.out), report.to_csv())
    _print_metrics(report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="footteleop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, text in (
        ("fk", cmd_fk, "pedal tip position for five joint values"),
        ("jacobian", cmd_jacobian, "3x5 translational Jacobian for five joint values"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("joints", nargs="*", help="d1 d2 theta phi psi; suffixes mm, m, deg, rad")
        p.add_argument("--strict", action="store_true", help="fail on out-of-limit joints instead of clamping")
        if name == "fk":
            p.add_argument("--frames", action="store_true", help="also print every intermediate frame")
        p.set_defaults(func=func)

    p = sub.add_parser("workspace", help="sample the reachable workspace of the pedal tip")
    p.add_argument("--voxel", default="0.005", help="voxel edge, m or with mm suffix (default 0.005)")
    p.add_argument("--samples", type=int, default=1_000_000, help="Monte Carlo joint samples")
    p.add_argument("--grid", type=int, default=None, help="samples per joint axis (full grid, overrides --samples)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--freeze-rotations", action="store_true", help="hold theta, phi, psi at zero")
    p.add_argument("--out-dir", default=".", help="directory for cloud.csv and summary.csv")
    p.add_argument("--no-cloud", action="store_true", help="skip writing cloud.csv")
    p.set_defaults(func=cmd_workspace)

    p = sub.add_parser("simulate", help="run a teleoperation scenario")
    p.add_argument("scenario", help="scenario file path or bundled scenario name (e.g. grasp_reference)")
    p.add_argument("--out-dir", default=".", help="directory for trace.csv and metrics.csv")
    p.add_argument("--trace", default=None, help="trace output path")
    p.add_argument("--metrics", default=None, help="metrics output path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="recompute metrics from a trace file")
    p.add_argument("trace")
    p.add_argument("--out", default=None, help="write the metrics CSV here")
    p.set_defaults(func=cmd_metrics)
    return parser


def _protect_joint_values(argv: list[str]) -> list[str]:
    """Move joint values behind ``--`` so ``-10deg`` is not read as an option."""
    if not argv or argv[0] not in ("fk", "jacobian"):
        return argv
    rest = [a for a in argv[1:] if a != "--"]
    flags = [a for a in rest if a.startswith("--") or a == "-h"]
    values = [a for a in rest if not (a.startswith("--") or a == "-h")]
    return [argv[0], *flags, "--", *values]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(_protect_joint_values(argv))
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
