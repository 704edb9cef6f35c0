"""Command line entry point.

Subcommands ``maximin``, ``ee`` and ``oneway`` run one algorithm on one
channel draw; ``sweep`` runs a Monte-Carlo sweep and writes the CSV table;
``validate`` runs the oracle suites. Exit codes: 0 success, 1 configuration
error, 2 run failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time

import numpy as np

from .bench import MODES, ConfigError, SweepConfig, gen_channels, run_sweep, write_csv
from .model import ChannelSet, Dimensions, ScenarioParams, ee_objective, pair_throughputs, relay_powers
from .oracle import GridSpec, equivalence_suite, grid_search_tiny, inequality_suite
from .solve import QoSUnreachable, algorithm1, algorithm2, oneway_ee_solve

EXIT_OK, EXIT_CONFIG, EXIT_RUN = 0, 1, 2
NATS_PER_BIT = np.log(2.0)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twrelay", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default="default", help="JSON sweep config, or 'default'")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output path")

    for name, text in (
        ("maximin", "max-min exchange throughput on one draw"),
        ("ee", "energy efficiency under pair floors on one draw"),
        ("oneway", "one-way relaying energy efficiency on one draw"),
    ):
        p = sub.add_parser(name, help=text)
        common(p)
        p.add_argument("--scenario", type=int, default=0, help="index into the config's scenario list")
        p.add_argument("--budget", type=float, help="total relay budget in dBW (default: first grid value)")
        p.add_argument("--draw", type=int, default=0, help="channel realization index")
        p.add_argument("--bits", action="store_true", help="report throughput in bits instead of nats")

    p = sub.add_parser("sweep", help="Monte-Carlo sweep to CSV")
    common(p)
    p.add_argument("--realizations", type=int, help="override the realization count")
    p.add_argument("--mode", help=f"comma-separated subset of {','.join(MODES)}")
    p.add_argument("--workers", type=int, default=1, help="worker processes")

    p = sub.add_parser("validate", help="run the oracle and property suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100_000, help="inequality-suite samples")
    p.add_argument("--instances", type=int, default=100, help="equivalence-suite instances")
    p.add_argument("--toy", type=int, default=5, help="toy instances checked against the grid search")
    p.add_argument("--out", help="append a machine-readable summary to this CSV")
    return ap


def _load(args) -> SweepConfig:
    cfg = SweepConfig.load(args.config)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if getattr(args, "realizations", None) is not None:
        over["realizations"] = args.realizations
    if getattr(args, "mode", None):
        over["modes"] = [m.strip() for m in args.mode.split(",") if m.strip()]
    if over:
        cfg = SweepConfig.from_dict(cfg.to_dict() | over)
    return cfg


def _single(args) -> int:
    cfg = _load(args)
    if not 0 <= args.scenario < len(cfg.scenarios):
        raise ConfigError("scenario", f"index {args.scenario} outside 0..{len(cfg.scenarios) - 1}")
    K, M, N = cfg.scenarios[args.scenario]
    budget = cfg.budgets_dbw[0] if args.budget is None else args.budget
    ch = gen_channels(cfg.seed, Dimensions(K, M, N), args.draw)
    sp = cfg.params(K, M, budget)
    settings = cfg.settings
    unit, scale = ("bits", 1.0 / NATS_PER_BIT) if args.bits else ("nats", 1.0)

    trace = algorithm1(ch, sp, settings)
    if args.command != "maximin":
        sp = sp.with_r(cfg.r_fraction * trace.objective)
        run = algorithm2 if args.command == "ee" else oneway_ee_solve
        trace = run(ch, sp, settings)

    topo = trace.topology
    p, W = trace.point.p, trace.point.W
    R = topo.prelog * pair_throughputs(p, W, ch, sp, topo)
    print(f"scenario K={K} M={M} N_R={N}, relay budget {budget:g} dBW, draw {args.draw}")
    print(f"{args.command}: {trace.iterations} iterations, status {trace.status}")
    print(f"pair throughputs [{unit}]: " + " ".join(f"{v * scale:.6g}" for v in R))
    if args.command != "maximin":
        print(f"floor per pair [{unit}]: {sp.r[0] * topo.prelog * scale:.6g}")
    print(f"energy efficiency [{unit}/J]: {ee_objective(p, W, ch, sp, topo) * scale:.6g}")
    print(f"user powers [W]: " + " ".join(f"{v:.6g}" for v in p))
    print(f"relay powers [W]: " + " ".join(f"{v:.6g}" for v in relay_powers(p, W, ch, sp, topo)))
    if args.out:
        trace.to_csv(args.out)
    return EXIT_RUN if trace.status not in ("converged", "max_iter", "stop_rule") else EXIT_OK


def _sweep(args) -> int:
    cfg = _load(args)
    out = args.out or "sweep.csv"
    t0 = time.perf_counter()

    def progress(done, total):
        logging.getLogger(__name__).info("%d/%d draws (%.0f s)", done, total, time.perf_counter() - t0)

    res = run_sweep(cfg, workers=max(1, args.workers), progress=progress)
    write_csv(res.rows, out)
    failed = sum(r.n_success == 0 for r in res.rows)
    print(f"wrote {len(res.rows)} rows to {out}")
    if failed:
        print(f"{failed} rows have no successful run", file=sys.stderr)
        return EXIT_RUN
    return EXIT_OK


def _validate(args) -> int:
    reports = {
        "inequality": inequality_suite(args.samples, args.seed),
        "equivalence": equivalence_suite(args.instances, args.seed),
    }
    for name, rep in reports.items():
        print(f"[{name}]")
        print(rep.summary())
    rng = np.random.default_rng(args.seed)
    toy = {"maximin": 0, "ee": 0}
    for _ in range(args.toy):
        cn = lambda *s: (rng.standard_normal(s) + 1j * rng.standard_normal(s)) / np.sqrt(2)
        ch = ChannelSet(h=cn(2, 1, 1), f=cn(1, 2, 1))
        sp = ScenarioParams.from_relay_budget(1, 1, float(rng.uniform(0.0, 30.0)))
        a1 = algorithm1(ch, sp)
        toy["maximin"] += a1.objective >= 0.99 * grid_search_tiny(ch, sp).value
        sp = sp.with_r(0.5 * a1.objective)
        try:
            a2 = algorithm2(ch, sp)
        except QoSUnreachable:
            continue
        toy["ee"] += a2.objective >= 0.99 * grid_search_tiny(ch, sp, GridSpec(), "ee").value
    print("[toy oracle]")
    for k, v in toy.items():
        print(f"{k:<28} {v}/{args.toy} within 1% of the grid optimum")

    if args.out:
        with open(args.out, "a", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            for name, rep in reports.items():
                for r in rep.rows:
                    wr.writerow([name, r.name, r.samples, r.violations, f"{r.worst:.6g}"])
            for k, v in toy.items():
                wr.writerow(["toy_oracle", k, args.toy, args.toy - v, ""])
    ok = all(rep.ok for rep in reports.values()) and all(v == args.toy for v in toy.values())
    return EXIT_OK if ok else EXIT_RUN


def main(argv=None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(message)s")
    try:
        if args.command == "sweep":
            return _sweep(args)
        if args.command == "validate":
            return _validate(args)
        return _single(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (QoSUnreachable, ValueError, np.linalg.LinAlgError) as err:
        print(f"run failed: {err}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
