"""Command-line entry point: ``nyopsim [flags]`` runs a sweep and writes the report."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from typing import Optional, Sequence

from .engine import SimConfig
from .errors import NyopSimError
from .negotiation import NegotiationConfig
from .policy import PolicyParams
from .sweep import FORMATS, SweepSpec, emit, run_sweep

log = logging.getLogger("nyopsim")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nyopsim",
        description="Sweep the moving-average window over baseline and NYOP procurement "
        "and report bullwhip and fill-rate tables per tier.",
    )
    p.add_argument("--scenario", "--scenarios", dest="scenario", default="both",
                   choices=("both", "baseline", "nyop"))
    p.add_argument("--t-min", type=int, default=5)
    p.add_argument("--t-max", type=int, default=15)
    p.add_argument("--reps", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=int, default=1000)
    p.add_argument("--warmup", type=int, default=100)
    p.add_argument("--tiers", type=int, default=4)
    p.add_argument("--lead-time", type=int, default=1)
    p.add_argument("--mu", type=float, default=100.0)
    p.add_argument("--sigma", type=float, default=10.0)
    p.add_argument("--ed", type=float, default=-0.75, help="price elasticity of demand")
    p.add_argument("--es", type=float, default=1.56, help="price elasticity of supply")
    p.add_argument("--p-star", type=float, default=100.0)
    p.add_argument("--q-star", type=float, default=None,
                   help="equilibrium quantity (default mu + sigma)")
    p.add_argument("--z", type=float, default=1.0, help="safety factor")
    p.add_argument("--beta", type=float, default=0.9, help="opening bid fraction")
    p.add_argument("--max-rounds", type=int, default=3)
    p.add_argument("--share-demand", choices=("auto", "yes", "no"), default="auto",
                   help="broadcast market demand to all tiers (auto: only under NYOP)")
    p.add_argument("--convention", choices=("mixed", "baseline"), default="mixed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--trace", action="store_true",
                   help="write JSONL message traces for replication 0 of each cell")
    p.add_argument("--out-dir", default="results")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def spec_from_args(args: argparse.Namespace) -> SweepSpec:
    scenarios = ("baseline", "nyop") if args.scenario == "both" else (args.scenario,)
    share = {"auto": None, "yes": True, "no": False}[args.share_demand]
    base = SimConfig(
        n_tiers=args.tiers,
        horizon=args.horizon,
        warmup=args.warmup,
        window=args.t_min,
        mu=args.mu,
        sigma=args.sigma,
        policy=PolicyParams(lead_time=args.lead_time, safety_factor=args.z),
        negotiation=NegotiationConfig(max_rounds=args.max_rounds, opening_fraction=args.beta),
        p_star=args.p_star,
        q_star=args.q_star,
        e_d=args.ed,
        e_s=args.es,
        share_demand=share,
    )
    return SweepSpec(
        t_values=tuple(range(args.t_min, args.t_max + 1)),
        scenarios=scenarios,
        replications=args.reps,
        base_seed=args.seed,
        base=base,
        convention=args.convention,
        workers=args.workers,
        trace_dir=f"{args.out_dir}/traces" if args.trace else None,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        spec = spec_from_args(args)
    except (NyopSimError, ValueError) as exc:
        parser.error(str(exc))
    started = time.perf_counter()
    try:
        result = run_sweep(spec)
    except NyopSimError as exc:
        print(f"nyopsim: {exc}", file=sys.stderr)
        return 1
    log.info("%d runs in %.1fs", result.n_runs, time.perf_counter() - started)
    try:
        paths = emit(result, args.out_dir, args.format)
    except OSError as exc:
        print(f"nyopsim: cannot write output: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        log.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
