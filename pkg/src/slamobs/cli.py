"""Command line entry point: ``slamobs run | check | sweep``.

Exit codes: 0 success, 1 validation error (bad flags, bad config), 2 numerical
abort (non-finite state or a Zeno guard trip).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from slamobs.checks import run_all
from slamobs.experiments import (
    ExperimentConfig,
    default_output_dir,
    preset_experiment1,
    preset_experiment2,
    run_experiment,
    sweep,
    without_noise,
    write_sweep_csv,
)
from slamobs.hybrid import NumericalAbort, ZenoError

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2
U64_MAX = 2 ** 64 - 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad input; validation errors map to 1 here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError(f"seed {text} outside [0, 2^64)")
    return v


def _positive(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--experiment", choices=["1", "2"], default="1")
    p.add_argument("--config", type=Path, help="JSON experiment config; flags override it")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--dt", type=_positive)
    p.add_argument("--duration", type=_positive, help="simulated seconds")
    p.add_argument("--out", help="output directory (default: $SLAMOBS_OUT or ./results)")
    p.add_argument("--noise", choices=["on", "off"])
    p.add_argument("--literal-jump-map", action="store_true",
                   help="scale the landmark estimate by 2q in the jump map")
    p.add_argument("--literal-noise", action="store_true",
                   help="unit-variance bearing noise instead of the default 0.05")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slamobs", description="Hybrid and smooth SLAM observers on SE_{1+n}(3).")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="simulate an experiment and write traces, summary and plots")
    _add_scenario_flags(p)
    p.add_argument("--observer", choices=["hybrid", "smooth", "both"])
    p.add_argument("--no-plots", action="store_true")

    sub.add_parser("check", help="run the oracle and invariant suites")

    p = sub.add_parser("sweep", help="initial attitude error grid, convergence-basin CSV")
    _add_scenario_flags(p)
    p.add_argument("--angles", default="0.9,0.95,0.99",
                   help="comma-separated attitude errors as fractions of pi")
    p.add_argument("--observer", choices=["hybrid", "smooth", "both"], default="both")
    p.add_argument("--keep-position", action="store_true",
                   help="keep the preset position/map estimate instead of the true ones")
    return parser


def _scenario(args) -> ExperimentConfig:
    if args.config is not None:
        try:
            cfg = ExperimentConfig.from_json(args.config.read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        except (json.JSONDecodeError, TypeError, KeyError) as exc:
            raise UsageError(f"malformed config {args.config}: {exc}") from exc
    else:
        cfg = preset_experiment1() if args.experiment == "1" else preset_experiment2()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.dt is not None or args.duration is not None:
        cfg = replace(cfg, run=replace(cfg.run, dt=args.dt or cfg.run.dt,
                                       t_end=args.duration or cfg.run.t_end))
    if args.noise == "off":
        cfg = without_noise(cfg)
    elif args.noise == "on" and not cfg.noise.enabled:
        default = preset_experiment1().noise
        cfg = replace(cfg, noise=replace(default, seed=cfg.noise.seed))
    if args.literal_jump_map:
        cfg = replace(cfg, literal_jump_map=True)
    if args.literal_noise:
        cfg = replace(cfg, literal_noise=True)
    out = args.out if args.out is not None else (
        default_output_dir() if args.config is None else cfg.output_dir)
    return replace(cfg, output_dir=out)


def _cmd_run(args) -> int:
    cfg = _scenario(args)
    if args.observer is not None:
        cfg = replace(cfg, observer=args.observer)
    bundle = run_experiment(cfg, plots=not args.no_plots)
    for name, summ in bundle["summary"]["observers"].items():
        f = summ["final"]
        print(f"{name:>6}: jumps={summ['jump_count']} att={f['att_err_rad']:.3e} rad "
              f"pos={f['pos_err_m']:.3e} m lmk={f['lmk_err_m']:.3e} m "
              f"bw={f['bias_w_err']:.3e} bv={f['bias_v_err']:.3e} V={f['lyapunov']:.3e} "
              f"({summ['wall_time_s']:.1f} s)")
    print(f"wrote {len(bundle['paths'])} files to {cfg.output_dir}")
    return EXIT_OK


def _cmd_check(args) -> int:
    ok = True
    for r in run_all():
        tag = "INFO" if r.informational else ("PASS" if r.passed else "FAIL")
        print(f"[{tag}] {r.name}: {r.detail}")
        ok &= r.passed or r.informational
    return EXIT_OK if ok else EXIT_VALIDATION


def _cmd_sweep(args) -> int:
    cfg = _scenario(args)
    if args.noise is None:
        cfg = without_noise(cfg)
    if not args.keep_position:
        # isolate the attitude error: position and map estimates start at the truth
        traj = cfg.trajectory
        cfg = replace(cfg, initial_estimate=replace(
            cfg.initial_estimate, p_hat0=tuple(float(x) for x in traj.p0), eta_scale=1.0))
    try:
        angles = [float(a) * math.pi for a in args.angles.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad --angles: {exc}") from exc
    observers = ("hybrid", "smooth") if args.observer == "both" else (args.observer,)
    rows = sweep(cfg, angles, observers, t_end=args.duration or 30.0)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sweep.csv"
    write_sweep_csv(path, rows)
    for r in rows:
        print(f"angle={r['initial_angle_rad']:.4f} {r['observer']:>6}: jumps={r['jumps']} "
              f"att={r['final_att_err_rad']:.3e} V={r['final_lyapunov']:.3e}")
    print(f"wrote {path}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "check": _cmd_check, "sweep": _cmd_sweep}[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ZenoError, NumericalAbort) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
