"""Deterministic discrete-event simulator for the addressing protocols.

One run builds a topology, drives one engine per node through randomized
start times, timer expiries, and message transits with Bernoulli loss
injection, then plays the bidirectional application-traffic phase and
collects metrics.  Everything is derived from the configured seed: two
runs with equal configs produce byte-identical CSV rows and packet traces.
"""

from __future__ import annotations

import heapq
import math
import random
import statistics
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .addrspace import AddressRange, DEFAULT_RESERVE
from .messages import AppData, Direction, MsgKind, encode
from .node import (ArmTimer, BaselineEngine, Deliver, DropMsg, Mode,
                   NodeEngine, SendMsg, StabilizationParams)
from .topology import (FailureKind, FailureModel, LossOutcome, Topology,
                       load_nodes, make_grid, make_uniform, sample_loss)


class ProtocolStall(RuntimeError):
    """A loss-free run failed to address the whole network."""


@dataclass(frozen=True)
class TopologySpec:
    kind: str = "grid"          # grid | uniform | file
    n: int = 9
    path: str = ""

    def build(self, seed: int) -> Topology:
        if self.kind == "grid":
            return make_grid(self.n)
        if self.kind == "uniform":
            return make_uniform(self.n, seed)
        if self.kind == "file":
            return load_nodes(self.path)
        raise ValueError(f"unknown topology kind {self.kind!r}")


@dataclass(frozen=True)
class SimConfig:
    topology: TopologySpec = TopologySpec()
    mode: Mode = Mode.GREEDY
    failure: FailureModel = FailureModel()
    reserve: Fraction = DEFAULT_RESERVE
    params: StabilizationParams = StabilizationParams()
    addr_width: int = 16
    start_jitter_max_ms: float = 1000.0
    link_delay_ms: float = 5.0
    link_jitter_ms: float = 2.0
    app_start_ms: float = 180_000.0
    msg_window_ms: float = 180_000.0
    horizon_ms: float = 600_000.0
    baseline_capacity: int = 20
    baseline_advert_interval_ms: float = 30_000.0
    seed: int = 0


@dataclass
class Metrics:
    mode: str
    topology: str
    n: int
    seed: int
    dag_depth: int
    setup_ms: float = 0.0
    dio_count: int = 0
    dao_count: int = 0
    dio_retx: int = 0
    dao_retx: int = 0
    addr_rate: float = 1.0
    up_rate: float = 1.0
    down_rate: float = 1.0
    timed_out: bool = False
    addressed_count: int = 0
    ups_sent: int = 0
    ups_delivered: int = 0
    downs_sent: int = 0
    downs_delivered: int = 0
    app_drops: Counter = field(default_factory=Counter)
    address_log: list = field(default_factory=list)   # (node, address, time_ms)
    packet_trace: list = field(default_factory=list)  # formatted lines
    engine_events: list = field(default_factory=list)  # (node, message)

    @property
    def control_total(self) -> int:
        return self.dio_count + self.dao_count


_OUTCOME_LABEL = {
    LossOutcome.DELIVER_ALL: "DELIVERED",
    LossOutcome.DROP_ALL: "DROP_TX",
    LossOutcome.DROP_DEST_ONLY: "DROP_RX",
}


class _Run:
    def __init__(self, config: SimConfig):
        self.config = config
        self.topo = config.topology.build(config.seed)
        self.parents = self.topo.preferred_parents()
        self.root = self.topo.root_id
        self.link_rng = random.Random(f"{config.seed}/links")
        self.start_rng = random.Random(f"{config.seed}/start")

        self.engines = {}
        for nid in sorted(self.topo.positions):
            rng = random.Random(f"{config.seed}/node/{nid}")
            if config.mode is Mode.BASELINE_STORING:
                eng = BaselineEngine(
                    nid, is_root=(nid == self.root), params=config.params, rng=rng,
                    table_capacity=config.baseline_capacity,
                    advert_interval_ms=config.baseline_advert_interval_ms)
            else:
                eng = NodeEngine(
                    nid, config.mode, is_root=(nid == self.root),
                    params=config.params, rng=rng, reserve=config.reserve,
                    addr_width=config.addr_width,
                    root_range=AddressRange(0, 2 ** config.addr_width)
                    if nid == self.root else None)
            eng.set_parent_candidate(self.parents.get(nid))
            self.engines[nid] = eng

        self.heap = []
        self._tie = 0
        self.now = 0.0
        self.metrics = Metrics(
            mode=config.mode.value, topology=self.topo.label,
            n=self.topo.n, seed=config.seed, dag_depth=self.topo.depth())
        self.addressed_at = {}
        self.root_ready_ms = None
        self.baseline_root_routes = 0
        self.app_state = {}        # (direction, app_seq) -> outcome string
        self.app_outstanding = 0
        self.apps_launched = 0
        self.apps_expected = self.topo.n - 1

    # -- scheduling ---------------------------------------------------------

    def _push(self, time_ms: float, kind: str, payload):
        self._tie += 1
        heapq.heappush(self.heap, (time_ms, self._tie, kind, payload))

    def _schedule_initial(self):
        for nid in sorted(self.engines):
            start = self.start_rng.uniform(0, self.config.start_jitter_max_ms)
            self._push(start, "start", nid)
        for nid in sorted(self.engines):
            if nid != self.root:
                self._push(self.config.app_start_ms, "app", nid)

    # -- command processing --------------------------------------------------

    def _register_app(self, msg: AppData):
        key = (msg.direction, msg.app_seq)
        if key not in self.app_state:
            self.app_state[key] = "pending"
            self.app_outstanding += 1
            if msg.direction is Direction.UP:
                self.metrics.ups_sent += 1
            else:
                self.metrics.downs_sent += 1

    def _resolve_app(self, msg: AppData, outcome: str):
        key = (msg.direction, msg.app_seq)
        self._register_app(msg)
        if self.app_state[key] != "pending":
            return
        self.app_state[key] = outcome
        self.app_outstanding -= 1
        if outcome == "delivered":
            if msg.direction is Direction.UP:
                self.metrics.ups_delivered += 1
            else:
                self.metrics.downs_delivered += 1
        else:
            self.metrics.app_drops[outcome] += 1

    def _count_control(self, msg, retransmission: bool):
        if self.now > self.config.msg_window_ms:
            return
        if msg.kind in (MsgKind.DIO_MHCL, MsgKind.DIOACK_MHCL):
            self.metrics.dio_count += 1
            if retransmission:
                self.metrics.dio_retx += 1
        elif msg.kind in (MsgKind.DAO_MHCL, MsgKind.DAOACK_MHCL):
            self.metrics.dao_count += 1
            if retransmission:
                self.metrics.dao_retx += 1

    def _transmit(self, cmd: SendMsg):
        msg = cmd.msg
        self._count_control(msg, cmd.retransmission)
        if isinstance(msg, AppData):
            self._register_app(msg)
        outcome = sample_loss(self.config.failure, self.link_rng)
        self.metrics.packet_trace.append(
            f"{self.now:.3f} {msg.src} {msg.dst} {msg.kind.name} "
            f"{_OUTCOME_LABEL[outcome]} {encode(msg).hex()}")
        if outcome is LossOutcome.DELIVER_ALL:
            delay = self.config.link_delay_ms + self.link_rng.uniform(
                -self.config.link_jitter_ms, self.config.link_jitter_ms)
            self._push(self.now + max(delay, 0.001), "msg", msg)
        elif isinstance(msg, AppData):
            self._resolve_app(msg, "loss")  # application traffic has no retry

    def _process(self, nid: int, commands):
        for cmd in commands:
            if isinstance(cmd, SendMsg):
                self._transmit(cmd)
            elif isinstance(cmd, ArmTimer):
                self._push(self.now + cmd.delay_ms, "timer", (nid, cmd.key))
            elif isinstance(cmd, Deliver):
                self._resolve_app(cmd.msg, "delivered")
            elif isinstance(cmd, DropMsg):
                self._resolve_app(cmd.msg, cmd.reason.value)
            else:
                raise TypeError(f"unknown command {cmd!r}")
        self._observe(nid)

    def _observe(self, nid: int):
        eng = self.engines[nid]
        if isinstance(eng, NodeEngine):
            if eng.own_address is not None and nid not in self.addressed_at:
                self.addressed_at[nid] = self.now
                self.metrics.address_log.append((nid, eng.own_address, self.now))
            if eng.is_root and eng.distribution_done and self.root_ready_ms is None:
                self.root_ready_ms = self.now
        elif eng.is_root and len(eng.routes) > self.baseline_root_routes:
            self.baseline_root_routes = len(eng.routes)
            self.root_ready_ms = self.now

    # -- main loop -----------------------------------------------------------

    def run(self) -> Metrics:
        self._schedule_initial()
        self._observe(self.root)  # the root holds its range from the start
        while self.heap:
            t, _, kind, payload = heapq.heappop(self.heap)
            if t > self.config.horizon_ms:
                self.metrics.timed_out = True
                break
            self.now = t
            if kind == "start":
                self._process(payload, self.engines[payload].on_start())
            elif kind == "timer":
                nid, key = payload
                self._process(nid, self.engines[nid].on_timer(key))
            elif kind == "msg":
                nid = payload.dst
                self._process(nid, self.engines[nid].on_message(payload))
            elif kind == "app":
                self.apps_launched += 1
                self._process(payload, self.engines[payload].send_app_up(payload))
            if (self.apps_launched == self.apps_expected
                    and self.app_outstanding == 0
                    and self.now >= self.config.app_start_ms):
                break
        return self._finish()

    def _finish(self) -> Metrics:
        m = self.metrics
        if self.app_outstanding > 0:
            m.timed_out = True
        non_root = self.topo.n - 1
        if self.config.mode is Mode.BASELINE_STORING:
            m.addr_rate = 1.0  # static addressing: every node is born addressed
            m.addressed_count = non_root
        else:
            m.addressed_count = sum(1 for nid in self.addressed_at if nid != self.root)
            m.addr_rate = m.addressed_count / non_root if non_root else 1.0
        addressed_times = [t for nid, t in self.addressed_at.items() if nid != self.root]
        m.setup_ms = max([self.root_ready_ms or 0.0] + addressed_times)
        m.up_rate = m.ups_delivered / m.ups_sent if m.ups_sent else 1.0
        m.down_rate = m.downs_delivered / m.downs_sent if m.downs_sent else 1.0
        for nid in sorted(self.engines):
            for note in self.engines[nid].events:
                m.engine_events.append((nid, note))
        if (self.config.failure.kind is FailureKind.NONE
                and self.config.mode is not Mode.BASELINE_STORING
                and m.addr_rate < 1.0):
            unexplained = self._unexplained_unaddressed()
            if unexplained:
                raise ProtocolStall(
                    f"loss-free run left nodes {sorted(unexplained)} unaddressed "
                    f"without an allocation failure (mode={m.mode}, n={m.n}, "
                    f"seed={m.seed})")
        return m

    def _unexplained_unaddressed(self) -> set:
        """Unaddressed nodes not covered by a recorded allocation failure.

        Address-space exhaustion is a legitimate run outcome (the affected
        child and its whole subtree stay unaddressed); anything else in a
        loss-free run is a protocol stall.
        """
        victims = set()
        for eng in self.engines.values():
            victims.update(eng.unaddressed_children)
            victims.update(eng.gave_up)
        explained = set()
        for nid in self.engines:
            node = nid
            while node is not None:
                if node in victims:
                    explained.add(nid)
                    break
                node = self.parents.get(node)
        return {nid for nid, eng in self.engines.items()
                if eng.own_address is None and nid not in explained}


def run(config: SimConfig) -> Metrics:
    """Execute one simulation run and return its metrics."""
    return _Run(config).run()


def run_with_state(config: SimConfig) -> tuple[Metrics, "_Run"]:
    """Like run(), but also returns the finished simulation for inspection
    of final engine state (address plans, routing tables, topology)."""
    sim = _Run(config)
    metrics = sim.run()
    return metrics, sim


def run_baseline_storing(config: SimConfig) -> Metrics:
    """Run the bounded-table comparison protocol."""
    if config.mode is not Mode.BASELINE_STORING:
        raise ValueError("config.mode must be BASELINE_STORING")
    return run(config)


# -- sweeps and CSV export -----------------------------------------------------

CSV_COLUMNS = ["scenario_id", "seed", "mode", "topology", "n", "dag_depth",
               "setup_ms", "dio_count", "dao_count", "addr_rate", "up_rate",
               "down_rate", "timed_out"]


def metrics_row(scenario_id: str, m: Metrics) -> list[str]:
    return [scenario_id, str(m.seed), m.mode, m.topology, str(m.n),
            str(m.dag_depth), f"{m.setup_ms:.3f}", str(m.dio_count),
            str(m.dao_count), f"{m.addr_rate:.6f}", f"{m.up_rate:.6f}",
            f"{m.down_rate:.6f}", str(int(m.timed_out))]


def _mean_ci(values: list[float]) -> tuple[float, float]:
    mean = statistics.fmean(values)
    if len(values) < 2:
        return mean, 0.0
    half = 1.96 * statistics.stdev(values) / math.sqrt(len(values))
    return mean, half


def aggregate_rows(scenario_id: str, runs: list[Metrics]) -> list[list[str]]:
    """Mean and 95% confidence half-width rows for one scenario."""
    fields = [
        ("dag_depth", lambda m: float(m.dag_depth)),
        ("setup_ms", lambda m: m.setup_ms),
        ("dio_count", lambda m: float(m.dio_count)),
        ("dao_count", lambda m: float(m.dao_count)),
        ("addr_rate", lambda m: m.addr_rate),
        ("up_rate", lambda m: m.up_rate),
        ("down_rate", lambda m: m.down_rate),
        ("timed_out", lambda m: float(m.timed_out)),
    ]
    stats = {name: _mean_ci([get(m) for m in runs]) for name, get in fields}
    first = runs[0]
    mean_row = [scenario_id, "mean", first.mode, first.topology, str(first.n)]
    ci_row = [scenario_id, "ci95", first.mode, first.topology, str(first.n)]
    for name, _ in fields:
        mean, half = stats[name]
        mean_row.append(f"{mean:.6f}")
        ci_row.append(f"{half:.6f}")
    return [mean_row, ci_row]


def sweep(entries: list[tuple[str, SimConfig]]) -> list[list[str]]:
    """Run every (scenario_id, config) entry; per-run rows then aggregates.

    Rows are ordered by scenario id, then seed, so repeated sweeps over the
    same entries are byte-identical.
    """
    by_scenario: dict[str, list[Metrics]] = {}
    rows = []
    for scenario_id, config in sorted(entries, key=lambda e: (e[0], e[1].seed)):
        try:
            m = run(config)
        except Exception as exc:  # error-tagged row, sweep continues
            rows.append([scenario_id, str(config.seed), config.mode.value,
                         config.topology.kind, str(config.topology.n),
                         "error", f"{type(exc).__name__}: {exc}",
                         "", "", "", "", "", ""])
            continue
        by_scenario.setdefault(scenario_id, []).append(m)
        rows.append(metrics_row(scenario_id, m))
    for scenario_id in sorted(by_scenario):
        rows.extend(aggregate_rows(scenario_id, by_scenario[scenario_id]))
    return rows


def write_csv(rows: list[list[str]], path: str):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_trace(metrics: Metrics, path: str):
    with open(path, "w") as fh:
        for line in metrics.packet_trace:
            fh.write(line + "\n")
