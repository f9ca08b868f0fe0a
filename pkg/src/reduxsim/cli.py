"""Command line entry point: ``reduxsim simulate|regionmap|invariance|ensemble``.

Exit codes: 0 ok, 2 configuration error, 3 step-size guard tripped.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional

from .config import ConfigError, ScenarioConfig, bundled_names, load_config
from .dynamics import RunLog, run_scenario
from .ensemble import causality_demo, run_ensemble, selection_probability_oracle
from .kernels import StepSizeError
from .minkowski import BoundaryStrategy, invariance_report, region_grid, write_region_csv
from .state import MeasurementMode

SEED_ENV = "REDUXSIM_SEED"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _resolve_seed(arg: Optional[int], config: ScenarioConfig) -> int:
    if arg is not None:
        return arg
    if config.seed is not None:
        return config.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        seed = int(env)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be a nonnegative integer, got {env!r}", source="environment") from None
    if seed < 0:
        raise ConfigError(f"{SEED_ENV} must be a nonnegative integer, got {env!r}", source="environment")
    return seed


def _frames(args, config: ScenarioConfig) -> list[float]:
    frames = args.frame if args.frame else list(config.frames)
    for v in frames:
        if not abs(v) < 1:
            raise ConfigError(f"--frame {v}: velocity must satisfy |v| < 1", source="command line")
    return frames


def _parse_grid(text: str) -> tuple[float, float, float, float, int, int]:
    parts = text.split(",")
    if len(parts) != 6:
        raise ConfigError("--grid expects t0,t1,x0,x1,nt,nx", source="command line")
    try:
        t0, t1, x0, x1 = (float(p) for p in parts[:4])
        nt, nx = int(parts[4]), int(parts[5])
    except ValueError:
        raise ConfigError(f"--grid {text!r}: bad number", source="command line") from None
    if nt < 1 or nx < 1 or not (t1 >= t0 and x1 >= x0):
        raise ConfigError("--grid needs t1 >= t0, x1 >= x0 and at least one node per axis", source="command line")
    return t0, t1, x0, x1, nt, nx


def _simulate(config: ScenarioConfig, seed: int) -> RunLog:
    return run_scenario(config.template(), config.currents, strategy=config.strategy,
                        t_end=config.t_end, dt=config.dt, rng=seed)


def _emit(payload: dict, out: Optional[str]) -> None:
    text = json.dumps(payload, indent=2, allow_nan=False, default=_json_default)
    if out:
        Path(out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _json_default(obj):
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _finite(x):
    """JSON has no inf/nan; map them to null."""
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    return x


# -- commands ---------------------------------------------------------------------

def cmd_simulate(args) -> int:
    config = load_config(args.config)
    seed = _resolve_seed(args.seed, config)
    log = _simulate(config, seed)
    _emit({"config": config.to_dict(), **log.to_dict()}, args.out)
    return EXIT_OK


def _hits_for(config: ScenarioConfig, seed: int):
    if config.hits != (None, None):
        return config.hits, "config"
    return _simulate(config, seed).hit_events(), "simulated"


def cmd_regionmap(args) -> int:
    config = load_config(args.config)
    seed = _resolve_seed(args.seed, config)
    strategy = BoundaryStrategy(args.strategy) if args.strategy else config.strategy
    (hit_a, hit_b), _ = _hits_for(config, seed)
    if hit_a is None and hit_b is None:
        raise ConfigError("no hits: supply 'hits' in the config or a config whose run produces a capture",
                          source=args.config)
    pad = 2.0
    grid = _parse_grid(args.grid) if args.grid else (
        0.0, config.t_end, min(config.x_a, config.x_b) - pad, max(config.x_a, config.x_b) + pad, 51, 57)
    frames = _frames(args, config) or [0.0]
    if strategy is BoundaryStrategy.HELLWIG_KRAUS:
        frames = [0.0]  # light-cone labels do not depend on the frame
    if args.out is None:
        raise ConfigError("regionmap needs --out", source="command line")
    out = Path(args.out)
    written = []
    for v in frames:
        path = out if len(frames) == 1 else out.with_name(f"{out.stem}_v{v:+.3f}{out.suffix or '.csv'}")
        write_region_csv(path, region_grid(hit_a, hit_b, strategy, grid, v))
        written.append(str(path))
    sys.stdout.write("\n".join(written) + "\n")
    return EXIT_OK


def cmd_invariance(args) -> int:
    config = load_config(args.config)
    seed = _resolve_seed(args.seed, config)
    log = _simulate(config, seed)
    report = invariance_report(log, _frames(args, config))
    report["seed"] = seed
    report["mode"] = config.mode.value
    report["hits"] = log.to_dict()["hits"]
    _emit(report, args.out)
    return EXIT_OK


def _oracle_applies(config: ScenarioConfig) -> bool:
    # The quadrature covers the race out of D0D0 only; in objective mode without
    # the selection rule, second-order currents act before the first hit.
    if config.mode is MeasurementMode.OBSERVED or config.selection_rule:
        return True
    return not any(k in config.currents.profiles for k in ("10->11", "01->11"))


def cmd_ensemble(args) -> int:
    config = load_config(args.config)
    seed = _resolve_seed(args.seed, config)
    if args.runs < 1:
        raise ConfigError("--runs must be at least 1", source="command line")
    if config.causality is not None:
        payload = causality_demo(config, args.runs, seed, args.backend)
    else:
        stats = run_ensemble(config, args.runs, seed, args.backend)
        if _oracle_applies(config):
            stats.oracle = selection_probability_oracle(config.currents, config.t_end)
        payload = stats.to_dict()
    payload["config"] = config.to_dict()
    _emit(_finite(payload), args.out)
    return EXIT_OK


# -- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reduxsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True,
                        help="config file, or a bundled scenario name: " + ", ".join(bundled_names()))
        sp.add_argument("--seed", type=int, help=f"seed (falls back to the config, then ${SEED_ENV}, then 0)")
        sp.add_argument("--out", help="output path (stdout for JSON commands if omitted)")

    sp = sub.add_parser("simulate", help="run one seeded realization and write its log as JSON")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("regionmap", help="label a (t, x) grid by reduction region and write CSV")
    common(sp)
    sp.add_argument("--grid", help="t0,t1,x0,x1,nt,nx")
    sp.add_argument("--frame", type=float, action="append", help="evaluation frame velocity (repeatable)")
    sp.add_argument("--strategy", choices=[s.value for s in BoundaryStrategy])
    sp.set_defaults(func=cmd_regionmap)

    sp = sub.add_parser("invariance", help="compare boundary counts of one run across frames")
    common(sp)
    sp.add_argument("--frame", type=float, action="append", help="frame velocity (repeatable)")
    sp.set_defaults(func=cmd_invariance)

    sp = sub.add_parser("ensemble", help="run many seeded realizations and write statistics as JSON")
    common(sp)
    sp.add_argument("--runs", type=int, default=100_000)
    sp.add_argument("--backend", choices=["numba", "numpy"])
    sp.set_defaults(func=cmd_ensemble)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StepSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
