"""Scenario runner: single runs, sweeps, plan inspection, validation, figures.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 simulation error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from fractions import Fraction

from . import oracle, simcore
from .addrspace import AddressRange
from .node import LOCAL_DELIVERY, Mode, NodeEngine, NoRoute
from .scenario import MODE_NAMES, ScenarioError, parse_failure, parse_scenario
from .simcore import (CSV_COLUMNS, Metrics, SimConfig, TopologySpec,
                      aggregate_rows, metrics_row, run_with_state, sweep,
                      write_csv, write_trace)
from .topology import FailureKind, FailureModel

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_SIMULATION = 3


def _seed_from(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MHCL_SEED")
    return int(env) if env else 0


def _config_from(args) -> SimConfig:
    failure = FailureModel()
    if args.failure != "none":
        failure = FailureModel(FailureKind(args.failure), args.rate)
    return SimConfig(
        topology=TopologySpec(args.topology, args.n, getattr(args, "topology_file", "")),
        mode=MODE_NAMES[args.mode],
        failure=failure,
        reserve=Fraction(args.reserve),
        addr_width=args.addr_width,
        start_jitter_max_ms=args.start_jitter,
        seed=_seed_from(args),
    )


def _add_scenario_flags(p: argparse.ArgumentParser):
    p.add_argument("--topology", choices=["grid", "uniform", "file"], default="grid")
    p.add_argument("--n", type=int, default=9, help="node count (perfect square for grid)")
    p.add_argument("--topology-file", default="", help="node list for --topology file")
    p.add_argument("--mode", choices=sorted(MODE_NAMES), default="greedy")
    p.add_argument("--failure", choices=["none", "tx", "rx"], default="none")
    p.add_argument("--rate", type=float, default=0.0, help="failure probability")
    p.add_argument("--reserve", default="1/16", help="reserve fraction, e.g. 1/16 or 0.0625")
    p.add_argument("--addr-width", type=int, default=16, dest="addr_width")
    p.add_argument("--start-jitter", type=float, default=1000.0, dest="start_jitter",
                   help="max randomized node start time [ms]")
    p.add_argument("--seed", type=int, default=None,
                   help="run seed (falls back to MHCL_SEED, then 0)")


def cmd_run(args) -> int:
    config = _config_from(args)
    metrics, _ = run_with_state(config)
    scenario_id = f"{args.topology}-n{args.n}-{args.mode}-{config.failure.label()}"
    print(f"scenario      {scenario_id}  seed={metrics.seed}")
    print(f"dag depth     {metrics.dag_depth}")
    print(f"setup [ms]    {metrics.setup_ms:.3f}")
    print(f"dio msgs      {metrics.dio_count}  (retx {metrics.dio_retx})")
    print(f"dao msgs      {metrics.dao_count}  (retx {metrics.dao_retx})")
    print(f"addr rate     {metrics.addr_rate:.6f}")
    print(f"up rate       {metrics.up_rate:.6f}")
    print(f"down rate     {metrics.down_rate:.6f}")
    print(f"timed out     {int(metrics.timed_out)}")
    if metrics.app_drops:
        drops = ", ".join(f"{k}={v}" for k, v in sorted(metrics.app_drops.items()))
        print(f"app drops     {drops}")
    if args.trace:
        write_trace(metrics, args.trace)
        print(f"trace         {args.trace} ({len(metrics.packet_trace)} lines)")
    if args.out:
        write_csv([metrics_row(scenario_id, metrics)], args.out)
        print(f"csv           {args.out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.config:
        matrix = parse_scenario(args.config)
        if args.seeds:
            matrix.seeds = _parse_seed_list(args.seeds)
        entries = matrix.entries()
    else:
        seeds = _parse_seed_list(args.seeds) if args.seeds else list(range(10))
        failure = FailureModel() if args.failure == "none" else \
            FailureModel(FailureKind(args.failure), args.rate)
        entries = []
        base = _config_from(args)
        scenario_id = f"{args.topology}-n{args.n}-{args.mode}-{failure.label()}"
        for seed in seeds:
            entries.append((scenario_id, replace(base, failure=failure, seed=seed)))
    rows = sweep(entries)
    write_csv(rows, args.out)
    print(f"{len(rows)} rows -> {args.out}")
    _print_summary(rows)
    return EXIT_OK


def _parse_seed_list(text: str) -> list[int]:
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    return seeds


def _print_summary(rows: list[list[str]]):
    means = {r[0]: r for r in rows if r[1] == "mean"}
    cis = {r[0]: r for r in rows if r[1] == "ci95"}
    if not means:
        return
    print(f"{'scenario':<36} {'setup_ms':>18} {'msgs':>14} {'addr':>14} {'down':>14}")
    idx = {name: CSV_COLUMNS.index(name) for name in
           ("setup_ms", "dio_count", "dao_count", "addr_rate", "down_rate")}
    for sid in sorted(means):
        m, c = means[sid], cis.get(sid)

        def cell(col, width=0):
            mv = float(m[idx[col]])
            hv = float(c[idx[col]]) if c else 0.0
            return f"{mv:.1f}±{hv:.1f}" if col in ("setup_ms", "dio_count", "dao_count") \
                else f"{mv:.3f}±{hv:.3f}"

        msgs = (float(m[idx["dio_count"]]) + float(m[idx["dao_count"]]))
        msgs_ci = (float(c[idx["dio_count"]]) + float(c[idx["dao_count"]])) if c else 0.0
        print(f"{sid:<36} {cell('setup_ms'):>18} {f'{msgs:.0f}±{msgs_ci:.0f}':>14} "
              f"{cell('addr_rate'):>14} {cell('down_rate'):>14}")


def cmd_plan(args) -> int:
    if args.mode == "baseline":
        print("plan is only defined for the hierarchical modes", file=sys.stderr)
        return EXIT_CONFIG
    seed = _seed_from(args)
    topo = TopologySpec(args.topology, args.n, args.topology_file).build(seed)
    parents = topo.preferred_parents()
    plan = oracle.oracle_plan(parents, topo.root_id,
                              AddressRange(0, 2 ** args.addr_width),
                              args.mode, Fraction(args.reserve))
    print(f"{'node':>6} {'parent':>6} {'own':>8} {'range':>20}")
    for nid in sorted(plan):
        own, rng = plan[nid]
        parent = parents.get(nid, "-")
        print(f"{nid:>6} {parent!s:>6} {own:>8} {rng!s:>20}")
    return EXIT_OK


def cmd_validate(args) -> int:
    config = _config_from(args)
    failures = []

    def check(name, ok, detail=""):
        print(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
        if not ok:
            failures.append(name)

    metrics, sim = run_with_state(config)
    repeat, _ = run_with_state(config)
    check("determinism: identical rows and traces",
          metrics_row("v", metrics) == metrics_row("v", repeat)
          and metrics.packet_trace == repeat.packet_trace)

    resolved = (metrics.ups_delivered + metrics.downs_delivered
                + sum(metrics.app_drops.values()))
    check("conservation: every app message resolved once",
          resolved == metrics.ups_sent + metrics.downs_sent,
          f"{resolved} of {metrics.ups_sent + metrics.downs_sent}")

    if config.mode is not Mode.BASELINE_STORING:
        engines = sim.engines
        addresses = [e.own_address for e in engines.values() if e.own_address is not None]
        check("address uniqueness", len(addresses) == len(set(addresses)))
        ok_tables = all(
            len(e.routing_table) == len(e.children) - len(set(e.unaddressed_children))
            for e in engines.values())
        check("routing table size equals addressed child count", ok_tables)
        contain_ok = True
        for nid, eng in engines.items():
            if nid == sim.root or eng.own_address is None:
                continue
            parent_range = engines[sim.parents[nid]].assigned_range
            contain_ok &= bool(parent_range) and parent_range.contains(eng.own_address)
        check("hierarchical containment of own addresses", contain_ok)
        if config.failure.kind is FailureKind.NONE:
            check("loss-free addressing completeness", metrics.addr_rate == 1.0,
                  f"rate {metrics.addr_rate:.6f}")
            if config.start_jitter_max_ms == 0:
                plan = oracle.oracle_plan(
                    sim.parents, sim.root, AddressRange(0, 2 ** config.addr_width),
                    config.mode.value, config.reserve)
                got = {nid: (e.own_address, e.assigned_range)
                       for nid, e in engines.items()}
                check("plan matches one-pass reference", got == plan)

    if failures:
        print(f"{len(failures)} check(s) failed")
        return EXIT_VALIDATION
    print("all checks passed")
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import render_report
    created = render_report(args.csv, args.outdir)
    for path in created:
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mhcl",
        description="Hierarchical host-configuration protocol simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single scenario and print a summary")
    _add_scenario_flags(p_run)
    p_run.add_argument("--trace", default="", help="write the packet trace here")
    p_run.add_argument("--out", default="", help="write a one-row CSV here")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a scenario matrix and export CSV")
    _add_scenario_flags(p_sweep)
    p_sweep.add_argument("--config", default="", help="scenario file with sweep axes")
    p_sweep.add_argument("--seeds", default="", help="seed list, e.g. 0..9 or 1,2,3")
    p_sweep.add_argument("--out", default="sweep.csv")
    p_sweep.set_defaults(func=cmd_sweep)

    p_plan = sub.add_parser("plan", help="print the reference address plan")
    _add_scenario_flags(p_plan)
    p_plan.set_defaults(func=cmd_plan)

    p_val = sub.add_parser("validate", help="run the invariant suite on a scenario")
    _add_scenario_flags(p_val)
    p_val.set_defaults(func=cmd_validate)

    p_rep = sub.add_parser("report", help="render figures from a sweep CSV")
    p_rep.add_argument("--csv", required=True)
    p_rep.add_argument("--outdir", default="", help="defaults to the CSV directory")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except simcore.ProtocolStall as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
