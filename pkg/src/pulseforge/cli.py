"""``pulseforge`` command line: optimize, propagate, verify and bench.

Exit codes: 0 success, 1 input error, 2 target not reached (or a failed check).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import _kernels
from . import bench as bench_mod
from . import io
from .fidelity import fidelity, infidelity
from .optimize import optimize
from .propagators import BACKENDS, build_plan, mean_offset_plan, propagate, robustness_ensemble
from .verify import run_checks

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_TARGET = 2

log = logging.getLogger("pulseforge")

_POLICY_FOR_BACKEND = {"exact": "exact", "suzuki": "suzuki_fixed_offset"}


def _backends(values) -> list:
    out = []
    for v in values or []:
        for name in filter(None, (s.strip() for s in v.split(","))):
            if name not in BACKENDS:
                raise ValueError(f"unknown backend {name!r}; choose from {', '.join(BACKENDS)}")
            if name not in out:
                out.append(name)
    return out


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_optimize(args) -> int:
    if not args.config:
        raise ValueError("optimize needs --config")
    cfg = io.read_config(args.config)
    system = io.system_from_config(cfg)
    n, dt = io.pulse_shape_from_config(cfg)
    target = io.target_from_config(cfg, system, duration=n * dt)
    overrides = {"seed": args.seed, "max_iterations": args.max_iterations}
    backends = _backends(args.backend)
    if len(backends) > 1:
        raise ValueError("optimize takes a single --backend")
    if args.policy:
        overrides["backend"] = args.policy
    elif backends:
        if backends[0] == "trotter":
            raise ValueError("the optimizer supports the exact and suzuki backends only")
        if backends[0] == "exact" or not cfg.get("optimizer", "backend", str, "").startswith("suzuki"):
            overrides["backend"] = _POLICY_FOR_BACKEND[backends[0]]
    if args.offsets:
        overrides["offsets"] = io.parse_offsets(args.offsets)
        overrides.setdefault("backend", "suzuki_fixed_offset")
    config = io.optimizer_from_config(cfg, **overrides)
    pulse0 = io.initial_pulse_from_config(cfg, n, dt, len(system.channels), config.alpha_max, config.seed)

    pulse, report = optimize(system, target, pulse0, config)

    out = _out_dir(args)
    io.write_pulse(out / "final.pulse", pulse)
    (out / "iterations.csv").write_text(report.to_csv())
    summary = report.summary()
    (out / "summary.txt").write_text(summary + "\n")
    print(summary)
    return EXIT_OK if report.termination == "target_reached" else EXIT_TARGET


def cmd_propagate(args) -> int:
    cfg = io.read_config(args.config) if args.config else None
    if cfg is None:
        raise ValueError("propagate needs --config with a [system] section")
    system = io.system_from_config(cfg)
    pulse_path = args.pulse or (cfg.resolve(cfg.raw("pulse", "file")) if cfg.has("pulse", "file") else None)
    if pulse_path is None:
        raise ValueError("no pulse given: use --pulse or [pulse] file = PATH")
    pulse = io.read_pulse(pulse_path)
    if pulse.p != len(system.channels):
        raise ValueError(f"pulse has {pulse.p} channels, system has {len(system.channels)}")
    backends = _backends(args.backend) or ["suzuki"]
    if args.offsets:
        plan = build_plan(system, pulse.dt, io.parse_offsets(args.offsets))
    else:
        plan = mean_offset_plan(pulse, system)
    out = _out_dir(args)
    results = {}
    for name in backends:
        U = propagate(pulse, name, plan)
        results[name] = U
        io.write_matrix(out / f"propagator_{name}.txt", U)
        print(f"{name}: wrote {out / f'propagator_{name}.txt'}")
    target = None
    if cfg.has("target", "gate") or cfg.has("target", "matrix_file"):
        target = io.target_from_config(cfg, system, duration=pulse.n * pulse.dt)
        for name, U in results.items():
            print(f"{name}: fidelity to target {fidelity(target, U).phi:.12f}")
    if args.scalings:
        scalings = [float(s) for s in args.scalings.replace(",", " ").split()]
        members = robustness_ensemble(pulse, plan, scalings, jobs=args.jobs)
        for s, U in zip(scalings, members):
            exact = propagate(pulse.scaled(s), "exact", plan)
            line = f"scaling {s:g}: suzuki vs exact infidelity {infidelity(U, exact):.6e}"
            if target is not None:
                line += f", fidelity to target {fidelity(target, U).phi:.12f}"
            print(line)
    names = list(results)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            print(f"infidelity {a} vs {b}: {infidelity(results[a], results[b]):.6e}")
    return EXIT_OK


def cmd_verify(args) -> int:
    system = None
    if args.config:
        system = io.system_from_config(io.read_config(args.config))
    checks = run_checks(system, tolerance_scale=args.tolerance_scale, dt_min=args.dt_min,
                        dt_max=args.dt_max)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_TARGET


def cmd_bench(args) -> int:
    if args.repetitions < 5:
        raise ValueError("--repetitions must be at least 5")
    qs = [int(t) for t in args.qs.replace(",", " ").split()]
    if any(q < 1 for q in qs):
        raise ValueError("system sizes must be positive")
    print(f"kernels: {_kernels.BACKEND}; n = {args.n}; median of {args.repetitions} timed blocks; "
          "times per step")
    rows = bench_mod.run_bench(qs, args.n, args.repetitions, seed=args.seed or 0)
    table = bench_mod.format_table(rows)
    print(table)
    if args.kernels:
        print(bench_mod.kernel_comparison(3, args.n, args.repetitions, seed=args.seed or 0))
    if args.out:
        (_out_dir(args) / "bench.txt").write_text(table + "\n")
    if args.check:
        failures = bench_mod.check_floors(rows)
        for f in failures:
            print(f"FAIL  {f}")
        if failures:
            return EXIT_TARGET
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors: exit 1 rather than argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="run configuration file")
    common.add_argument("--backend", action="append",
                        help="exact, trotter or suzuki; repeat or comma-separate to compare")
    common.add_argument("--offsets", help="offsets in Hz, comma-separated; ';' between channels")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for ensembles")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = _Parser(prog="pulseforge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", parents=[common], help="run GRAPE on a configured problem")
    p.add_argument("--policy", help="optimizer backend policy (overrides --backend)")
    p.add_argument("--max-iterations", type=int)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("propagate", parents=[common], help="total propagator of a pulse file")
    p.add_argument("--pulse", help="pulse file (overrides [pulse] file)")
    p.add_argument("--scalings", help="RF scale factors for a robustness ensemble, e.g. 0.95,1,1.05")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("verify", parents=[common], help="accuracy self-checks")
    p.add_argument("--tolerance-scale", type=float, default=1.0,
                   help="multiply every tolerance window (0 forces failures)")
    p.add_argument("--dt-min", type=float, default=1e-6)
    p.add_argument("--dt-max", type=float, default=32e-6)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", parents=[common], help="exact vs suzuki timing table")
    p.add_argument("--qs", default="2,3,4,5", help="system sizes")
    p.add_argument("--n", type=int, default=500, help="steps per pulse")
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--kernels", action="store_true", help="also compare numba and numpy kernels")
    p.add_argument("--check", action="store_true", help="exit 2 if the speed floors are missed")
    p.set_defaults(func=cmd_bench, out=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
