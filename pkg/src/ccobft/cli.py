"""Command-line front end: topology generation, optimization, simulation,
sweep campaigns, and configuration checking.

Exit codes are a stable scripting contract: 0 success, 1 usage error,
2 infeasible, 3 timeout without an incumbent.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .cco import (
    SolveLimits,
    brute_force,
    check_constraints,
    evaluate,
    load_config,
    save_result,
    solve_exact,
    solve_heuristic,
)
from .errors import (
    InfeasibleConfigurationError,
    InfeasibleInstanceError,
    SolveTimeoutError,
)
from .experiments import (
    NODE_SIZES,
    NODE_SWEEP_VERIFY_COST_US,
    PAYLOAD_SIZES,
    TEE_FAILURE_FRACTION,
    fallback_compare,
    node_sweep,
    payload_sweep,
    write_tables,
)
from .model import load_instance, ms_to_us, save_instance
from .sim import (
    Arrival,
    FaultPlan,
    Target,
    Workload,
    run,
    sample_fault_plan,
)
from .topology import clustered_instance, lognormal_instance, uniform_instance

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_TIMEOUT = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad flags; the scripting contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fail(message: str, code: int) -> int:
    print(message, file=sys.stderr)
    return code


# -- gen-topology ----------------------------------------------------------------


def cmd_gen_topology(args) -> int:
    try:
        if args.kind == "uniform":
            instance = uniform_instance(
                n=args.n,
                f=args.f,
                seed=args.seed,
                low_ms=args.low_ms,
                high_ms=args.high_ms,
                v_members=args.v_members,
                byzantine_cap=args.byzantine_cap,
                crash_cap=args.crash_cap,
            )
        elif args.kind == "clustered":
            instance = clustered_instance(
                n=args.n,
                f=args.f,
                seed=args.seed,
                clusters=args.clusters,
                intra_ms=args.intra_ms,
                inter_ms=args.inter_ms,
                v_members=args.v_members,
                byzantine_cap=args.byzantine_cap,
                crash_cap=args.crash_cap,
            )
        else:
            instance = lognormal_instance(
                n=args.n,
                f=args.f,
                seed=args.seed,
                mu=args.mu,
                sigma=args.sigma,
                v_members=args.v_members,
                byzantine_cap=args.byzantine_cap,
                crash_cap=args.crash_cap,
            )
    except ValueError as exc:
        return _fail(f"gen-topology: {exc}", EXIT_USAGE)
    save_instance(instance, args.out)
    print(f"wrote {args.out} (n={instance.n}, f={instance.params.f})")
    return EXIT_OK


# -- optimize --------------------------------------------------------------------


def cmd_optimize(args) -> int:
    instance = load_instance(args.instance)
    limits = SolveLimits(
        time_budget=args.time_budget,
        node_cap_exact=args.node_cap,
        optimality_required=args.require_optimal,
    )
    try:
        if args.solver == "exact":
            result = solve_exact(instance, limits)
        elif args.solver == "brute":
            result = brute_force(instance)
        else:
            result = solve_heuristic(
                instance, seed=args.seed, iteration_budget=args.iterations
            )
    except InfeasibleInstanceError as exc:
        return _fail(f"optimize: infeasible: {exc}", EXIT_INFEASIBLE)
    except SolveTimeoutError as exc:
        return _fail(f"optimize: timeout: {exc}", EXIT_TIMEOUT)
    except ValueError as exc:
        return _fail(f"optimize: {exc}", EXIT_USAGE)
    for phase, value in result.latency.as_ms_dict().items():
        print(f"{phase:>6}: {value:.3f} ms")
    print(f"method: {result.method}  optimal: {result.optimal}  gap: {result.gap:.4f}")
    if args.out:
        save_result(result, args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


# -- simulate --------------------------------------------------------------------


def _parse_pairs(pairs: list[str], value_type, flag: str) -> dict[int, object]:
    out = {}
    for raw in pairs:
        node, sep, value = raw.partition(":")
        if not sep:
            raise ValueError(f"{flag} wants NODE:VALUE, got {raw!r}")
        out[int(node)] = value_type(value)
    return out


def _build_fault_plan(args, instance) -> tuple[FaultPlan, dict[int, int]]:
    recoveries = {
        node: ms_to_us(at)
        for node, at in _parse_pairs(args.tee_recover, float, "--tee-recover").items()
    }
    if args.sample_faults:
        plan = sample_fault_plan(
            instance,
            seed=args.seed,
            crash_at_us=ms_to_us(args.crash_at_ms),
            tee_at_us=ms_to_us(args.tee_at_ms),
        )
        return plan, recoveries
    crashes = {
        node: ms_to_us(at)
        for node, at in _parse_pairs(args.crash, float, "--crash").items()
    }
    tee = {
        node: ms_to_us(at)
        for node, at in _parse_pairs(args.tee_fail, float, "--tee-fail").items()
    }
    slow = _parse_pairs(args.slow, float, "--slow")
    return FaultPlan(slow=slow, crashes=crashes, tee_failures=tee), recoveries


def cmd_simulate(args) -> int:
    instance = load_instance(args.instance)
    config = load_config(args.config)
    workload = Workload(
        total_requests=args.requests,
        arrival=Arrival(args.arrival),
        rate_per_s=args.rate,
        payload_bytes=args.payload_bytes,
        target=Target(args.target),
        pinned_committee=args.pinned_committee,
    )
    try:
        plan, recoveries = _build_fault_plan(args, instance)
    except ValueError as exc:
        return _fail(f"simulate: {exc}", EXIT_USAGE)
    try:
        report = run(
            instance,
            config,
            workload,
            plan,
            seed=args.seed,
            bandwidth_bps=args.bandwidth_gbps * 1e9,
            verify_cost_us=args.verify_cost_us,
            client_delay_us=ms_to_us(args.client_delay_ms),
            tee_recoveries=recoveries or None,
            trace_path=args.trace,
        )
    except (InfeasibleConfigurationError, ValueError) as exc:
        return _fail(f"simulate: infeasible: {exc}", EXIT_INFEASIBLE)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    report.write_csv(prefix.with_suffix(".csv"))
    report.write_json(prefix.with_suffix(".json"))
    summary = report.summary_dict()
    print(
        f"committed {report.committed}/{report.total_requests}"
        f" stalled {report.stalled}"
        f" throughput {summary['throughput_ops']:.1f} op/s"
        f" mean latency {summary['latency_ms']['mean']:.3f} ms"
    )
    print(f"wrote {prefix.with_suffix('.csv')} and {prefix.with_suffix('.json')}")
    return EXIT_OK


# -- experiment ------------------------------------------------------------------


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(part) for part in raw.split(",") if part.strip())


def cmd_experiment(args) -> int:
    if args.name == "node_sweep":
        result = node_sweep(
            sizes=args.sizes,
            seeds=args.seeds,
            base_seed=args.base_seed,
            verify_cost_us=args.verify_cost_us,
            jobs=args.jobs,
        )
    elif args.name == "payload_sweep":
        result = payload_sweep(
            payloads=args.payloads,
            n=args.n,
            seeds=args.seeds,
            base_seed=args.base_seed,
            jobs=args.jobs,
        )
    else:
        result = fallback_compare(
            n=args.n,
            seeds=args.seeds,
            base_seed=args.base_seed,
            fraction=args.fraction,
            jobs=args.jobs,
        )
    paths = write_tables(result, args.out_dir)
    for path in paths:
        print(f"wrote {path}")
    for line in result.errors:
        print(f"cell failed: {line}", file=sys.stderr)
    return EXIT_OK


# -- check -----------------------------------------------------------------------


def cmd_check(args) -> int:
    instance = load_instance(args.instance)
    config = load_config(args.config)
    violations = check_constraints(instance, config)
    if violations:
        for violation in violations:
            print(str(violation))
        return EXIT_INFEASIBLE
    breakdown = evaluate(instance, config)
    print("configuration ok")
    for phase, value in breakdown.as_ms_dict().items():
        print(f"{phase:>6}: {value:.3f} ms")
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="ccobft", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen-topology", help="write a synthetic instance file")
    gen.add_argument("--kind", choices=("uniform", "clustered", "lognormal"),
                     default="uniform")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--f", type=int, default=1)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.add_argument("--v-members", type=int, default=4)
    gen.add_argument("--byzantine-cap", type=float, default=1.0)
    gen.add_argument("--crash-cap", type=float, default=1.0)
    gen.add_argument("--low-ms", type=float, default=0.5)
    gen.add_argument("--high-ms", type=float, default=20.0)
    gen.add_argument("--clusters", type=int, default=5)
    gen.add_argument("--intra-ms", type=float, default=0.1)
    gen.add_argument("--inter-ms", type=float, default=5.0)
    gen.add_argument("--mu", type=float, default=0.5)
    gen.add_argument("--sigma", type=float, default=0.8)
    gen.set_defaults(func=cmd_gen_topology)

    opt = sub.add_parser("optimize", help="solve for a committee configuration")
    opt.add_argument("instance")
    opt.add_argument("--solver", choices=("exact", "heuristic", "brute"),
                     default="heuristic")
    opt.add_argument("--seed", type=int, default=0)
    opt.add_argument("--iterations", type=int, default=4000)
    opt.add_argument("--time-budget", type=float, default=60.0)
    opt.add_argument("--node-cap", type=int, default=16)
    opt.add_argument("--require-optimal", action="store_true")
    opt.add_argument("--out", default="")
    opt.set_defaults(func=cmd_optimize)

    simp = sub.add_parser("simulate", help="run one simulation and export results")
    simp.add_argument("instance")
    simp.add_argument("config")
    simp.add_argument("--requests", type=int, default=100)
    simp.add_argument("--arrival", choices=[a.value for a in Arrival],
                      default=Arrival.CLOSED_LOOP.value)
    simp.add_argument("--rate", type=float, default=0.0,
                      help="poisson arrivals per second")
    simp.add_argument("--payload-bytes", type=int, default=0)
    simp.add_argument("--target", choices=[t.value for t in Target],
                      default=Target.ROUND_ROBIN.value)
    simp.add_argument("--pinned-committee", type=int, default=0)
    simp.add_argument("--seed", type=int, default=0)
    simp.add_argument("--bandwidth-gbps", type=float, default=1.0)
    simp.add_argument("--verify-cost-us", type=int, default=0)
    simp.add_argument("--client-delay-ms", type=float, default=0.0)
    simp.add_argument("--crash", action="append", default=[], metavar="NODE:MS")
    simp.add_argument("--tee-fail", action="append", default=[], metavar="NODE:MS")
    simp.add_argument("--tee-recover", action="append", default=[], metavar="NODE:MS")
    simp.add_argument("--slow", action="append", default=[], metavar="NODE:MULT")
    simp.add_argument("--sample-faults", action="store_true",
                      help="draw faults from the instance rates instead of flags")
    simp.add_argument("--crash-at-ms", type=float, default=0.0)
    simp.add_argument("--tee-at-ms", type=float, default=0.0)
    simp.add_argument("--trace", default=None, help="write a message trace JSONL")
    simp.add_argument("--out-prefix", default="simrun")
    simp.set_defaults(func=cmd_simulate)

    exp = sub.add_parser("experiment", help="run a sweep campaign and export CSVs")
    exp.add_argument("name", choices=("node_sweep", "payload_sweep",
                                      "fallback_compare"))
    exp.add_argument("--out-dir", default="results")
    exp.add_argument("--seeds", type=int, default=None)
    exp.add_argument("--base-seed", type=int, default=2026)
    exp.add_argument("--jobs", type=int, default=None,
                     help="worker processes (default: CCOBFT_JOBS or core count)")
    exp.add_argument("--sizes", type=_int_list, default=NODE_SIZES)
    exp.add_argument("--payloads", type=_int_list, default=PAYLOAD_SIZES)
    exp.add_argument("--n", type=int, default=40)
    exp.add_argument("--fraction", type=float, default=TEE_FAILURE_FRACTION)
    exp.add_argument("--verify-cost-us", type=int, default=NODE_SWEEP_VERIFY_COST_US)
    exp.set_defaults(func=cmd_experiment)

    chk = sub.add_parser("check", help="validate a configuration file")
    chk.add_argument("instance")
    chk.add_argument("config")
    chk.set_defaults(func=cmd_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seeds", None) is None and args.command == "experiment":
        args.seeds = 30 if args.name == "fallback_compare" else 3
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        return _fail(f"{args.command}: missing file: {exc.filename}", EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
