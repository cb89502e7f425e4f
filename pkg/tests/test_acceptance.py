"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Equivalence and completeness criteria run with synchronized starts (the
analytical model assumes simultaneous starts) and a zero reserve fraction:
equal splitting exhausts a 16-bit space on the deepest corner-rooted grid
when 6.25% is withheld at every level, which is the documented motivation
for the proportional variant, not a protocol defect.  The exhaustion
behavior itself is asserted in test_simcore.
"""

import math
import random
import statistics
from fractions import Fraction

import pytest

from mhcl.addrspace import (AddressRange, InsufficientSpace,
                            partition_aggregate, partition_greedy)
from mhcl.messages import decode, encode
from mhcl.node import Mode
from mhcl.oracle import oracle_plan, oracle_route
from mhcl.simcore import (SimConfig, TopologySpec, metrics_row, run,
                          run_with_state, sweep, write_csv)
from mhcl.topology import FailureKind, FailureModel, make_grid, make_uniform
from tests.test_addrspace import largest_remainder_reference
from tests.test_messages import random_message

SIZES = (9, 25, 49, 81, 121, 169)
KINDS = ("grid", "uniform")
MODES = (Mode.GREEDY, Mode.AGGREGATE)
FULL_SPACE = AddressRange(0, 65536)


def report(number, ok, detail):
    print(f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def sync_config(kind, n, mode, seed=1, **kwargs):
    defaults = dict(topology=TopologySpec(kind, n), mode=mode, seed=seed,
                    start_jitter_max_ms=0.0, reserve=Fraction(0))
    defaults.update(kwargs)
    return SimConfig(**defaults)


@pytest.fixture(scope="module")
def sync_runs():
    """Loss-free synchronized runs shared by criteria 1-3."""
    results = {}
    for kind in KINDS:
        for n in SIZES:
            for mode in MODES:
                results[(kind, n, mode)] = run_with_state(sync_config(kind, n, mode))
    return results


def test_criterion_1_oracle_equivalence(sync_runs):
    """Plans and forwarding paths match the one-pass reference exactly."""
    checked_paths = 0
    for (kind, n, mode), (metrics, sim) in sync_runs.items():
        plan = oracle_plan(sim.parents, sim.root, FULL_SPACE, mode.value, Fraction(0))
        got = {nid: (e.own_address, e.assigned_range)
               for nid, e in sim.engines.items()}
        assert got == plan, f"plan mismatch: {kind} n={n} {mode.value}"
        for nid, eng in sim.engines.items():
            if nid == sim.root:
                continue
            expected = oracle_route(sim.parents, plan, eng.own_address, sim.root)
            node, path = sim.root, [sim.root]
            while node != nid:
                node = sim.engines[node].forward_down(eng.own_address)
                path.append(node)
            assert path == expected, f"path mismatch to {nid}: {kind} n={n}"
            checked_paths += 1
    report(1, True, f"plans and {checked_paths} forwarding paths equal the "
                    f"reference on {len(sync_runs)} runs")


def test_criterion_2_addressing_completeness(sync_runs):
    """Loss-free synchronized runs address every node."""
    rates = {key: metrics.addr_rate for key, (metrics, _) in sync_runs.items()}
    ok = all(rate == 1.0 for rate in rates.values())
    worst = min(rates.values())
    report(2, ok, f"addressing rate 1.0 on all {len(rates)} runs "
                  f"(worst {worst:.6f})")


def test_criterion_3_message_bound(sync_runs):
    """Control traffic bounded per node and linear in n."""
    for (kind, n, mode), (m, _) in sync_runs.items():
        assert m.dio_retx == 0 and m.dao_retx == 0, "loss-free retransmission"
        budget = (4 if mode is Mode.GREEDY else 6) * (n - 1)
        assert m.control_total <= budget, \
            f"{kind} n={n} {mode.value}: {m.control_total} > {budget}"
    worst_residual = 0.0
    for mode in MODES:
        xs = [float(n) for n in SIZES]
        ys = [float(sync_runs[("grid", n, mode)][0].control_total) for n in SIZES]
        slope, intercept = statistics.linear_regression(xs, ys)
        for x, y in zip(xs, ys):
            fitted = slope * x + intercept
            worst_residual = max(worst_residual, abs(fitted - y) / y)
    report(3, worst_residual < 0.05,
           f"totals within 4(n-1)/6(n-1); linear-fit residual "
           f"{worst_residual:.4%} < 5%")


def test_criterion_4_time_bound():
    """Setup time is affine in grid depth with synchronized starts."""
    r_squared = {}
    for mode in MODES:
        depths, setups = [], []
        for n in SIZES:
            per_seed = []
            for seed in range(5):
                cfg = sync_config("grid", n, mode, seed=seed,
                                  link_delay_ms=20.0, link_jitter_ms=0.0)
                per_seed.append(run(cfg).setup_ms)
            depths.append(2 * (math.isqrt(n) - 1))
            setups.append(statistics.fmean(per_seed))
        r_squared[mode.value] = statistics.correlation(depths, setups) ** 2
    ok = all(r2 > 0.95 for r2 in r_squared.values())
    detail = ", ".join(f"{mode} R^2={r2:.4f}" for mode, r2 in r_squared.items())
    report(4, ok, f"setup vs depth affine: {detail}")


def test_criterion_5_failure_resilience():
    """Addressing at 10% loss stays above the per-hop retry bound."""
    topo = make_grid(81)
    hops = topo.hop_counts()
    per_hop = 1.0 - 0.1 ** 4  # four transmissions per acknowledged message
    bound = statistics.fmean(per_hop ** hops[nid]
                             for nid in topo.positions if nid != topo.root_id)
    details = []
    ok = True
    for kind in (FailureKind.TX, FailureKind.RX):
        rates = []
        for seed in range(20):
            cfg = SimConfig(topology=TopologySpec("grid", 81), mode=Mode.GREEDY,
                            failure=FailureModel(kind, 0.10), seed=seed)
            rates.append(run(cfg).addr_rate)
        mean = statistics.fmean(rates)
        binomial_se = math.sqrt(bound * (1 - bound) / (80 * len(rates)))
        empirical_se = (statistics.stdev(rates) / math.sqrt(len(rates))
                        if len(rates) > 1 else 0.0)
        threshold = bound - 3 * max(binomial_se, empirical_se)
        ok &= mean >= threshold
        details.append(f"{kind.value}: mean {mean:.5f} >= {threshold:.5f}")
    report(5, ok, f"bound {bound:.5f}; " + "; ".join(details))


def test_criterion_6_delivery_gap_vs_baseline():
    """Hierarchical addressing beats the capacity-20 storing table by >= 2x."""
    baseline = run(SimConfig(topology=TopologySpec("grid", 169),
                             mode=Mode.BASELINE_STORING, seed=1,
                             start_jitter_max_ms=0.0, baseline_capacity=20))
    hierarchical = run(sync_config("grid", 169, Mode.AGGREGATE,
                                   reserve=Fraction(1, 16)))
    ratio = hierarchical.down_rate / baseline.down_rate
    report(6, ratio >= 2.0,
           f"down delivery {hierarchical.down_rate:.4f} vs baseline "
           f"{baseline.down_rate:.4f} (ratio {ratio:.1f}x >= 2x)")


def test_criterion_7_topology_statistics():
    """Reported DAG heights: uniform mean in [5, 10], grid exactly 20."""
    depths = [make_uniform(121, seed=seed).depth() for seed in range(30)]
    mean_depth = statistics.fmean(depths)
    grid_depth = make_grid(121).depth()
    ok = 5.0 <= mean_depth <= 10.0 and grid_depth == 20
    report(7, ok, f"uniform n=121 mean depth {mean_depth:.2f} in [5, 10]; "
                  f"grid n=121 corner depth {grid_depth} == 20")


def test_criterion_8_determinism():
    """Same seed, same bytes: CSV rows and packet traces."""
    cfg = SimConfig(topology=TopologySpec("uniform", 49), mode=Mode.AGGREGATE,
                    failure=FailureModel(FailureKind.TX, 0.05), seed=13)
    a, b = run(cfg), run(cfg)
    rows_equal = metrics_row("s", a) == metrics_row("s", b)
    trace_equal = a.packet_trace == b.packet_trace
    entries = [(f"u49-agg-tx5", SimConfig(topology=TopologySpec("uniform", 49),
                                          mode=Mode.AGGREGATE,
                                          failure=FailureModel(FailureKind.TX, 0.05),
                                          seed=seed)) for seed in range(3)]
    csv_equal = sweep(entries) == sweep(entries)
    ok = rows_equal and trace_equal and csv_equal
    report(8, ok, f"rows={rows_equal}, trace={trace_equal} "
                  f"({len(a.packet_trace)} lines), sweep CSV={csv_equal}")


def test_criterion_9_property_suites():
    """Codec round-trip and partition properties over 10^4 random cases."""
    rng = random.Random(0xACCE)
    for _ in range(10_000):
        msg = random_message(rng)
        assert decode(encode(msg)) == msg
    cases = 0
    rng = random.Random(0x9A57)
    while cases < 10_000:
        length = rng.randrange(1, 4096)
        k = rng.randrange(0, 9)
        r = Fraction(rng.randrange(0, 16), 16)
        space = AddressRange(rng.randrange(0, 65536 - length), length)
        ids = list(range(k))
        equal_size = rng.randrange(1, 60)
        try:
            grd = partition_greedy(space, ids, r)
            agg = partition_aggregate(space, [(i, equal_size) for i in ids], r)
        except InsufficientSpace:
            continue
        cases += 1
        # exact accounting, disjointness, and the equal-sizes equivalence
        assert sum(rr.length for _, rr in grd.child_ranges) \
            + grd.reserve.length + 1 == length
        assert agg.lengths() == grd.lengths()
        assert agg.reserve == grd.reserve
        cursor = space.start + 1
        for _, rr in grd.child_ranges:
            assert rr.start == cursor
            cursor += rr.length
        if k and len({s for s in [equal_size]}) and rng.random() < 0.2:
            sizes = [(i, rng.randrange(1, 60)) for i in ids]
            try:
                prop = partition_aggregate(space, sizes, r)
            except InsufficientSpace:
                continue
            usable = length - 1 - int(r * length)
            reference = largest_remainder_reference(usable, sorted(sizes))
            if min(reference.values()) >= 1 and len({s for _, s in sizes}) > 1:
                assert prop.lengths() == reference
    report(9, True, f"codec round-trip 10^4 cases; partition properties "
                    f"{cases} cases")
