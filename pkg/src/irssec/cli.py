"""Command-line front end.

Verbs:

* run    -- one optimization on a scenario, prints the design summary,
* sweep  -- a seeded experiment campaign written as CSV,
* oracle -- the two desk-scale brute-force oracles on a tiny scenario.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import sys

from dataclasses import replace

import numpy as np

from . import bcd, harness, rates, sub_wz
from .channel import default_scenario, generate_channels, loads_config
from .numerics import RejectedInputError, RngStream
from .solver import ProgramError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="irssec",
        description="Secrecy-rate optimization for multi-surface assisted downlinks.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value scenario file")
        p.add_argument("--seed", type=int, default=0, help="campaign seed (u64)")
        p.add_argument("--i", type=int, default=2, help="user count (ignored with --config)")
        p.add_argument("--n", type=int, default=10, help="elements per surface (ignored with --config)")
        p.add_argument("--max-rounds", type=int, default=bcd.DEFAULT_MAX_ROUNDS,
                       help="outer coordinate rounds")
        p.add_argument("--inner-max-outer", type=int, default=sub_wz.DEFAULT_MAX_OUTER,
                       help="inner successive-approximation iterations per block")

    p_run = sub.add_parser("run", help="single optimization, print the design summary")
    common(p_run)
    p_run.add_argument("--scheme", choices=harness.SCHEMES, default="proposed")

    p_sweep = sub.add_parser("sweep", help="experiment campaign emitted as CSV")
    common(p_sweep)
    p_sweep.add_argument("--param", choices=harness.SWEEP_PARAMS, required=True,
                         help="swept parameter (p_max values are dBm)")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated sweep values")
    p_sweep.add_argument("--trials", type=int, default=harness.DEFAULT_TRIALS)
    p_sweep.add_argument("--scheme", action="append", choices=harness.SCHEMES,
                         help="scheme to include (repeatable; default proposed)")
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.add_argument("--line-users", action="store_true",
                         help="place users uniformly on the reference segment")

    p_oracle = sub.add_parser("oracle", help="brute-force phase and selection oracles")
    common(p_oracle)
    p_oracle.add_argument("--levels", type=int, default=16,
                          help="quantization levels per phase element")
    return parser


def _load_scenario(args):
    if args.config:
        with open(args.config) as fh:
            cfg = loads_config(fh.read())
    else:
        cfg = default_scenario(args.i, args.n)
    return replace(cfg, seed=args.seed)


def _scheme_scenario(cfg, scheme):
    if scheme == "baseline1":
        return replace(cfg, beta_bu=2.0, beta_be=2.0)
    if scheme == "baseline2":
        return replace(cfg, k=1, irs_positions=cfg.irs_positions[:1])
    return cfg


def _cmd_run(args):
    cfg = _scheme_scenario(_load_scenario(args), args.scheme)
    stream = RngStream(cfg.seed, 11)
    cs = generate_channels(cfg, stream.substream(0))
    kwargs = dict(
        stream=stream.substream(1),
        max_rounds=args.max_rounds,
        inner_max_outer=args.inner_max_outer,
    )
    if args.scheme == "baseline1":
        cs = harness._mute_surfaces(cs)
        kwargs["block_order"] = ("wz",)
    if args.scheme == "proposed-no-an":
        kwargs["use_an"] = False
    if args.scheme == "sum-rate":
        kwargs["objective"] = bcd.OBJECTIVE_SUM_RATE
    state = bcd.optimize(cs, cfg, **kwargs)
    print(f"scheme            {args.scheme}")
    print(f"status            {state.status}")
    print(f"rounds            {state.t}")
    print(f"min secrecy rate  {state.min_rate:.9g} bits/s/Hz")
    print(f"sum secrecy rate  {state.sum_rate:.9g} bits/s/Hz")
    for i, r in enumerate(state.user_rates):
        k = int(np.argmax(state.reflect.alpha[i]))
        print(f"user {i}: rate {r:.9g}, surface {k}")
    return EXIT_NUMERICAL if state.status == sub_wz.STATUS_DEGRADED else EXIT_OK


def _cmd_sweep(args):
    values = tuple(float(v) for v in args.values.split(",") if v.strip())
    spec = harness.ExperimentSpec(
        sweep_param=args.param,
        values=values,
        trials=args.trials,
        schemes=tuple(args.scheme) if args.scheme else ("proposed",),
        i=args.i,
        n=args.n,
        seed=args.seed,
        line_users=args.line_users,
        max_rounds=args.max_rounds,
        inner_max_outer=args.inner_max_outer,
    )
    rows = harness.run_experiment(spec)
    harness.write_csv(rows, args.out)
    for (value, scheme), (mean, se, count) in sorted(harness.summarize(rows).items()):
        print(f"{args.param}={value:g} {scheme}: mean {mean:.9g} +/- {se:.3g} (n={count})")
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_oracle(args):
    cfg = _load_scenario(args)
    cs = generate_channels(cfg, RngStream(cfg.seed, 11).substream(0))
    alpha = np.zeros((cfg.i, cfg.k))
    for i in range(cfg.i):
        alpha[i, i % cfg.k] = 1.0
    ec = rates.effective_channels(
        cs, rates.ReflectConfig(mu=np.ones((cfg.k, cfg.n)), alpha=alpha)
    )
    td = sub_wz.mrt_design(ec, cfg)
    mu, phase_rate = harness.grid_oracle_phase(cs, td, alpha, cfg, levels=args.levels)
    best_alpha, alpha_rate = harness.enumerate_alpha_oracle(cs, td, mu, cfg)
    print(f"phase grid ({args.levels} levels): best min secrecy {phase_rate:.9g}")
    print(f"selection enumeration: best min secrecy {alpha_rate:.9g}")
    for i in range(cfg.i):
        print(f"user {i}: surface {int(np.argmax(best_alpha[i]))}")
    return EXIT_OK


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.verb == "run":
            return _cmd_run(args)
        if args.verb == "sweep":
            return _cmd_sweep(args)
        return _cmd_oracle(args)
    except (RejectedInputError, ProgramError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
