"""Per-node protocol engine, event-driven and free of clocks and sockets.

Engines consume injected events (timer fired, message received) and emit
commands (send a message, arm a timer, deliver or drop an application
packet).  The host owns timekeeping and transport, which keeps the protocol
logic deterministic and unit-testable: feed an event list, inspect the
command list.

Setup runs in three overlapping stages driven by doubling timers that
reset on change and declare stability after a full quiet run at their
maximum interval:

* parent stabilization - a node commits to its preferred parent, and in
  greedy mode registers with it (child report with count 0);
* topology accounting - greedy parents count children until quiet;
  aggregate nodes additionally report their exact subtree size upward once
  every known child has reported (registration first, one completion
  report after, corrections only if late information arrives);
* address distribution - starting at the root, each node partitions its
  range among its children and pushes one allocation message per child,
  acknowledged and retransmitted a bounded number of times.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Union

from .addrspace import (AddressRange, DEFAULT_RESERVE, InsufficientSpace,
                        allocate_delayed, as_fraction, partition_aggregate,
                        partition_greedy)
from .messages import (AppData, Dao, DaoAck, Dio, DioAck, Direction,
                       MhclMessage, MsgKind)

MAX_RETRANSMISSIONS = 3      # extra transmissions after the first
FALLBACK_QUIET_EXPIRIES = 8  # quiet max-interval expiries before giving up on stragglers


class Mode(Enum):
    GREEDY = "greedy"
    AGGREGATE = "aggregate"
    BASELINE_STORING = "baseline"


class TimerKind(Enum):
    PARENT = "parent"
    CHILDREN = "children"
    AGG = "agg"
    ROOT_AGG = "root_agg"
    ACK = "ack"
    ADVERT = "advert"


@dataclass(frozen=True)
class TimerKey:
    kind: TimerKind
    seq: int = 0


@dataclass(frozen=True)
class SendMsg:
    msg: MhclMessage
    retransmission: bool = False


@dataclass(frozen=True)
class ArmTimer:
    key: TimerKey
    delay_ms: float


@dataclass(frozen=True)
class Deliver:
    msg: AppData


class DropReason(Enum):
    NO_ROUTE = "noroute"
    UNADDRESSED = "unaddressed"


@dataclass(frozen=True)
class DropMsg:
    msg: AppData
    reason: DropReason


Command = Union[SendMsg, ArmTimer, Deliver, DropMsg]


class NoRoute(LookupError):
    """No routing-table entry covers the destination address."""


class NoParent(LookupError):
    """Upward forwarding requested at the root."""


class LocalDelivery:
    """Sentinel: the destination address is this node's own."""

    def __repr__(self):
        return "LOCAL_DELIVERY"


LOCAL_DELIVERY = LocalDelivery()


@dataclass(frozen=True)
class StabilizationParams:
    """Timer multipliers; the base interval is 2**dio_min_exp milliseconds."""

    sp_child: int = 2
    sp_parent: int = 4
    sp_leaf: int = 4
    sp_root: int = 8
    dio_min_exp: int = 6

    def __post_init__(self):
        for name in ("sp_child", "sp_parent", "sp_leaf", "sp_root", "dio_min_exp"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def interval_ms(self) -> float:
        return float(2 ** self.dio_min_exp)


class TrickleTimer:
    """Doubling timer: starts in (base/2, base], doubles while quiet, caps at max."""

    def __init__(self, base_ms: float, max_mult: int, rng: random.Random):
        self.base = base_ms
        self.max = base_ms * max_mult
        self.rng = rng
        self.interval: Optional[float] = None

    def reset(self) -> float:
        # rng.random() is in [0, 1), so the draw lands in (base/2, base].
        self.interval = self.base - self.rng.random() * (self.base / 2)
        return self.interval

    start = reset

    def at_max(self) -> bool:
        return self.interval is not None and self.interval >= self.max

    def double(self) -> float:
        self.interval = min(self.interval * 2, self.max)
        return self.interval


class _EngineBase:
    """Shared plumbing: identity, sequence numbers, pending acks, parent timer."""

    def __init__(self, node_id: int, *, is_root: bool,
                 params: StabilizationParams, rng: random.Random):
        self.node_id = node_id
        self.is_root = is_root
        self.params = params
        self.rng = rng
        self.preferred_parent: Optional[int] = None
        self._observed_parent: Optional[int] = None
        self._parent_changed = False
        self.parent_defined = is_root
        self.parent_timer = TrickleTimer(params.interval_ms, params.sp_child, rng)
        self.ack_timeout_ms = params.interval_ms
        self._seq = 0
        self.pending: dict[int, tuple[MhclMessage, int]] = {}
        self.gave_up: list[int] = []   # dst ids whose acked send exhausted retries
        self.events: list[str] = []    # non-fatal protocol anomalies, for the host log

    # -- helpers -----------------------------------------------------------

    def _next_seq(self) -> int:
        self._seq = (self._seq + 1) & 0xFFFF
        return self._seq

    def _send_acked(self, msg: MhclMessage, budget: int = MAX_RETRANSMISSIONS) -> list[Command]:
        self.pending[msg.seq] = (msg, budget)
        return [SendMsg(msg),
                ArmTimer(TimerKey(TimerKind.ACK, msg.seq), self.ack_timeout_ms)]

    def _ack_for(self, msg: MhclMessage) -> MhclMessage:
        if msg.kind is MsgKind.DAO_MHCL:
            return DaoAck(self.node_id, msg.src, self._next_seq(), msg.seq)
        return DioAck(self.node_id, msg.src, self._next_seq(), msg.seq)

    def set_parent_candidate(self, parent_id: Optional[int]):
        """Inject the current best upstream neighbor (hop count, then id)."""
        if self._observed_parent is not None and parent_id != self._observed_parent:
            self._parent_changed = True
        self._observed_parent = parent_id
        self.preferred_parent = parent_id

    def _consume_parent_changed(self) -> bool:
        changed, self._parent_changed = self._parent_changed, False
        return changed

    # -- event dispatch ----------------------------------------------------

    def on_timer(self, key: TimerKey) -> list[Command]:
        if key.kind is TimerKind.PARENT:
            return self.on_parent_timer(self._consume_parent_changed())
        if key.kind is TimerKind.ACK:
            return self._on_ack_timeout(key.seq)
        return self._on_other_timer(key)

    def _on_other_timer(self, key: TimerKey) -> list[Command]:
        raise NotImplementedError

    def on_message(self, msg: MhclMessage) -> list[Command]:
        if msg.kind in (MsgKind.DIOACK_MHCL, MsgKind.DAOACK_MHCL):
            self.pending.pop(msg.acked_seq, None)
            return []
        if msg.kind is MsgKind.DAO_MHCL:
            return self.on_dao_received(msg)
        if msg.kind is MsgKind.DIO_MHCL:
            return self.on_dio_received(msg)
        return self.on_app_received(msg)

    # -- parent stabilization ------------------------------------------------

    def on_parent_timer(self, parent_changed: bool) -> list[Command]:
        """Doubling timer on the preferred-parent choice; quiet run commits it."""
        if self.parent_defined or self.is_root:
            return []
        if parent_changed:
            return [ArmTimer(TimerKey(TimerKind.PARENT), self.parent_timer.reset())]
        if not self.parent_timer.at_max():
            return [ArmTimer(TimerKey(TimerKind.PARENT), self.parent_timer.double())]
        self.parent_defined = True
        return self._on_parent_defined()

    def _on_parent_defined(self) -> list[Command]:
        return []

    def _on_ack_timeout(self, seq: int) -> list[Command]:
        entry = self.pending.get(seq)
        if entry is None:
            return []
        msg, budget = entry
        if budget <= 0:
            del self.pending[seq]
            # An unacknowledged allocation leaves the child unaddressed; an
            # unacknowledged report leaves this node unregistered upstream.
            victim = msg.dst if msg.kind is MsgKind.DIO_MHCL else self.node_id
            self.gave_up.append(victim)
            self.events.append(f"give-up {msg.kind.name} seq={seq} dst={msg.dst}")
            return []
        self.pending[seq] = (msg, budget - 1)
        return [SendMsg(msg, retransmission=True),
                ArmTimer(TimerKey(TimerKind.ACK, seq), self.ack_timeout_ms)]

    def on_dao_received(self, msg: Dao) -> list[Command]:
        raise NotImplementedError

    def on_dio_received(self, msg: Dio) -> list[Command]:
        raise NotImplementedError

    def on_app_received(self, msg: AppData) -> list[Command]:
        raise NotImplementedError

    def forward_up(self) -> int:
        if self.is_root:
            raise NoParent(f"node {self.node_id} is the root")
        return self.preferred_parent


class NodeEngine(_EngineBase):
    """Hierarchical-addressing node in greedy or aggregate mode."""

    def __init__(self, node_id: int, mode: Mode, *, is_root: bool,
                 params: StabilizationParams = StabilizationParams(),
                 rng: Optional[random.Random] = None,
                 reserve=DEFAULT_RESERVE, addr_width: int = 16,
                 root_range: Optional[AddressRange] = None,
                 root_address: int = 0):
        if mode not in (Mode.GREEDY, Mode.AGGREGATE):
            raise ValueError(f"NodeEngine does not run mode {mode}")
        super().__init__(node_id, is_root=is_root, params=params,
                         rng=rng or random.Random(node_id))
        self.mode = mode
        self.reserve_fraction = as_fraction(reserve)
        self.addr_width = addr_width
        self.root_address = root_address

        # children: id -> reported subtree size (None until a count arrives).
        self.children: dict[int, Optional[int]] = {}
        self.children_defined = False
        self.children_timer = TrickleTimer(params.interval_ms, params.sp_parent, self.rng)
        self._children_dirty = False

        # Aggregate accounting.
        self.announced = False
        self.complete_sent = False
        self.last_sent_count: Optional[int] = None
        self.agg_timer = TrickleTimer(params.interval_ms, params.sp_leaf, self.rng)
        self._agg_set_dirty = False
        self._agg_quiet = False
        self._agg_quiet_streak = 0
        self.descendants_defined = False
        self.root_agg_timer = TrickleTimer(params.interval_ms, params.sp_root, self.rng)
        self._root_dirty = False
        self._root_quiet_streak = 0

        # Addressing state.
        self.assigned_range: Optional[AddressRange] = None
        self.own_address: Optional[int] = None
        self.reserve: Optional[AddressRange] = None
        self.routing_table: list[tuple[int, int]] = []  # (final address, child id), sorted
        self.unaddressed_children: list[int] = []
        self.distribution_done = False
        if is_root:
            if root_range is None:
                root_range = AddressRange(0, 2 ** addr_width)
            self.assigned_range = root_range
            self.own_address = root_range.start

    # -- lifecycle -----------------------------------------------------------

    def on_start(self) -> list[Command]:
        """Arm the stabilization timers; roots skip parent selection."""
        cmds = []
        if not self.is_root:
            cmds.append(ArmTimer(TimerKey(TimerKind.PARENT), self.parent_timer.start()))
        if self.mode is Mode.GREEDY:
            cmds.append(ArmTimer(TimerKey(TimerKind.CHILDREN), self.children_timer.start()))
        elif self.is_root:
            cmds.append(ArmTimer(TimerKey(TimerKind.ROOT_AGG), self.root_agg_timer.start()))
        else:
            cmds.append(ArmTimer(TimerKey(TimerKind.AGG), self.agg_timer.start()))
        return cmds

    def _on_other_timer(self, key: TimerKey) -> list[Command]:
        if key.kind is TimerKind.CHILDREN:
            changed, self._children_dirty = self._children_dirty, False
            return self.on_children_timer(changed)
        if key.kind is TimerKind.AGG:
            return self.on_leaf_agg_timer()
        if key.kind is TimerKind.ROOT_AGG:
            changed, self._root_dirty = self._root_dirty, False
            return self.on_root_agg_timer(changed)
        raise ValueError(f"unexpected timer {key}")

    def _on_parent_defined(self) -> list[Command]:
        # Register with the parent right away in both modes (count 0 = "I am
        # your child").  Sending the aggregate registration here rather than
        # at the next aggregation expiry keeps every registration ahead of
        # the parent's quiet window, so parents never conclude their child
        # set early in a synchronized loss-free run.
        self.announced = True
        dao = Dao(self.node_id, self.preferred_parent, self._next_seq(), 0)
        return self._send_acked(dao)

    # -- greedy child counting ------------------------------------------------

    def on_children_timer(self, count_changed: bool) -> list[Command]:
        """Doubling timer on the child set; quiet run freezes it."""
        if self.children_defined or self.mode is not Mode.GREEDY:
            return []
        if count_changed:
            return [ArmTimer(TimerKey(TimerKind.CHILDREN), self.children_timer.reset())]
        if not self.children_timer.at_max():
            return [ArmTimer(TimerKey(TimerKind.CHILDREN), self.children_timer.double())]
        self.children_defined = True
        if self.assigned_range is not None:
            return self.distribute_addresses()
        return []

    # -- aggregate accounting ---------------------------------------------------

    def on_leaf_agg_timer(self) -> list[Command]:
        """Aggregation loop for non-root aggregate nodes; runs until addressed."""
        if self.mode is not Mode.AGGREGATE or self.is_root:
            return []
        if self.assigned_range is not None:
            return []  # address received ends the loop
        cmds = []
        if self.parent_defined and not self.announced:
            self.announced = True
            dao = Dao(self.node_id, self.preferred_parent, self._next_seq(), 0)
            cmds += self._send_acked(dao)
        if self._agg_set_dirty:
            self._agg_set_dirty = False
            self._agg_quiet = False
            self._agg_quiet_streak = 0
            delay = self.agg_timer.reset()
        elif self.agg_timer.at_max():
            self._agg_quiet = True
            self._agg_quiet_streak += 1
            delay = self.agg_timer.interval
        else:
            delay = self.agg_timer.double()
        cmds.append(ArmTimer(TimerKey(TimerKind.AGG), delay))
        cmds += self._maybe_report_count()
        return cmds

    def _subtree_count(self) -> int:
        # Children that registered but never reported count as size 1.
        return 1 + sum(v if v is not None else 1 for v in self.children.values())

    def _maybe_report_count(self) -> list[Command]:
        """Send the subtree size upward once the picture below is complete.

        The first report requires registration, a quiet child set, and a
        count from every known child; after FALLBACK_QUIET_EXPIRIES quiet
        max-interval expiries stragglers are written off at size 1 so a
        lost report cannot stall the network.  Later corrections (late
        joiners, straggler counts) propagate immediately when the value
        changes, so upstream stability detectors keep being fed.
        """
        if self.is_root or self.mode is not Mode.AGGREGATE:
            return []
        if not (self.parent_defined and self.announced):
            return []
        if not self.complete_sent:
            if not self._agg_quiet:
                return []
            all_reported = all(v is not None for v in self.children.values())
            if not all_reported and self._agg_quiet_streak < FALLBACK_QUIET_EXPIRIES:
                return []
        count = self._subtree_count()
        if self.complete_sent and count == self.last_sent_count:
            return []
        self.complete_sent = True
        self.last_sent_count = count
        dao = Dao(self.node_id, self.preferred_parent, self._next_seq(), count)
        return self._send_acked(dao)

    def on_root_agg_timer(self, count_changed: bool) -> list[Command]:
        """Root-side stability detector for the aggregation phase."""
        if self.mode is not Mode.AGGREGATE or not self.is_root or self.descendants_defined:
            return []
        if count_changed:
            self._root_quiet_streak = 0
            return [ArmTimer(TimerKey(TimerKind.ROOT_AGG), self.root_agg_timer.reset())]
        if not self.root_agg_timer.at_max():
            return [ArmTimer(TimerKey(TimerKind.ROOT_AGG), self.root_agg_timer.double())]
        self._root_quiet_streak += 1
        # An empty child set is indistinguishable from children that have
        # not announced yet (staggered starts), so it only passes through
        # the straggler fallback, never through the vacuous all-reported.
        all_reported = bool(self.children) and all(
            v is not None for v in self.children.values())
        if all_reported or self._root_quiet_streak >= FALLBACK_QUIET_EXPIRIES:
            self.descendants_defined = True
            return self.distribute_addresses()
        return [ArmTimer(TimerKey(TimerKind.ROOT_AGG), self.root_agg_timer.interval)]

    # -- message handlers ---------------------------------------------------

    def on_dao_received(self, msg: Dao) -> list[Command]:
        """Register or update a child; every report is acknowledged."""
        cmds = [SendMsg(self._ack_for(msg))]
        sender, value = msg.src, msg.descendant_count
        new_child = sender not in self.children

        if self.mode is Mode.GREEDY:
            if new_child:
                if self.children_defined:
                    if self.distribution_done:
                        cmds += self._allocate_delayed_child(sender)
                        return cmds
                    # Frozen but not yet partitioned: fold the latecomer in.
                    self.events.append(f"late child {sender} absorbed before partition")
                self.children[sender] = None
                self._children_dirty = True
            return cmds

        # Aggregate mode.
        if new_child:
            if self.distribution_done:
                self.children[sender] = value if value >= 1 else None
                cmds += self._allocate_delayed_child(sender)
                return cmds
            self.children[sender] = None
            self._agg_set_dirty = True
            self._root_dirty = True
        if value >= 1 and self.children.get(sender) != value:
            if self.distribution_done:
                self.events.append(f"stale count {value} from child {sender}")
                return cmds
            self.children[sender] = value
            self._root_dirty = True
        cmds += self._maybe_report_count()
        return cmds

    def on_dio_received(self, msg: Dio) -> list[Command]:
        """Accept an address range from the parent and acknowledge it."""
        rng = AddressRange(msg.first_address, msg.partition_size)
        cmds = [SendMsg(self._ack_for(msg))]
        if self.assigned_range is not None:
            if self.assigned_range != rng:
                self.events.append(
                    f"range conflict: held {self.assigned_range}, offered {rng}")
            return cmds  # duplicate: just re-ack
        self.assigned_range = rng
        self.own_address = rng.start
        if self.mode is Mode.GREEDY:
            if self.children_defined:
                cmds += self.distribute_addresses()
        else:
            # Non-root aggregate nodes partition immediately with the counts
            # reported so far; later counts follow the delayed path.
            cmds += self.distribute_addresses()
        return cmds

    def on_app_received(self, msg: AppData) -> list[Command]:
        if msg.direction is Direction.UP:
            if not self.is_root:
                fwd = AppData(self.node_id, self.forward_up(), self._next_seq(),
                              msg.dest_address, Direction.UP, msg.app_seq)
                return [SendMsg(fwd)]
            cmds: list[Command] = [Deliver(msg)]
            reply = AppData(self.node_id, self.node_id, self._next_seq(),
                            msg.dest_address, Direction.DOWN, msg.app_seq)
            if msg.dest_address == self.own_address:
                # Origin had no address of its own to answer to.
                cmds.append(DropMsg(reply, DropReason.UNADDRESSED))
                return cmds
            cmds += self._route_down(reply)
            return cmds
        # Downward traffic.
        if self.own_address is None:
            return [DropMsg(msg, DropReason.UNADDRESSED)]
        if msg.dest_address == self.own_address:
            return [Deliver(msg)]
        return self._route_down(msg)

    def _route_down(self, msg: AppData) -> list[Command]:
        try:
            hop = self.forward_down(msg.dest_address)
        except NoRoute:
            return [DropMsg(msg, DropReason.NO_ROUTE)]
        fwd = AppData(self.node_id, hop, self._next_seq(),
                      msg.dest_address, Direction.DOWN, msg.app_seq)
        return [SendMsg(fwd)]

    # -- distribution and forwarding --------------------------------------------

    def _eligible_to_distribute(self) -> bool:
        if self.assigned_range is None or self.distribution_done:
            return False
        if self.mode is Mode.GREEDY:
            return self.children_defined
        return self.descendants_defined if self.is_root else True

    def distribute_addresses(self) -> list[Command]:
        """Partition the assigned range and push one allocation per child.

        On InsufficientSpace the node still addresses the ascending-id
        prefix of children that fits and records the rest as unaddressed.
        """
        if not self._eligible_to_distribute():
            return []
        self.distribution_done = True
        ids = sorted(self.children)
        result = None
        while True:
            try:
                if self.mode is Mode.GREEDY:
                    result = partition_greedy(self.assigned_range, ids,
                                              self.reserve_fraction)
                else:
                    sizes = [(cid, self.children[cid] or 1) for cid in ids]
                    result = partition_aggregate(self.assigned_range, sizes,
                                                 self.reserve_fraction)
                break
            except InsufficientSpace:
                if not ids:
                    raise
                dropped = ids.pop()
                self.unaddressed_children.append(dropped)
                self.events.append(f"allocation failure: no space for child {dropped}")
        self.reserve = result.reserve
        cmds = []
        for cid, rng in result.child_ranges:
            self.routing_table.append((rng.last, cid))
            dio = Dio(self.node_id, cid, self._next_seq(), rng.start, rng.length)
            cmds += self._send_acked(dio)
        self.routing_table.sort()
        return cmds

    def _allocate_delayed_child(self, child_id: int) -> list[Command]:
        """Serve a latecomer from the reserve pool (equal split)."""
        if self.reserve is None:
            return []
        try:
            result = allocate_delayed(self.reserve, [child_id], self.reserve_fraction)
        except InsufficientSpace:
            self.unaddressed_children.append(child_id)
            self.events.append(f"allocation failure: reserve too small for {child_id}")
            return []
        self.reserve = result.reserve
        (cid, rng), = result.child_ranges
        self.routing_table.append((rng.last, cid))
        self.routing_table.sort()
        dio = Dio(self.node_id, cid, self._next_seq(), rng.start, rng.length)
        return self._send_acked(dio)

    def forward_down(self, dest: int):
        """Next hop for a destination address: linear scan of sorted finals."""
        if self.own_address is None:
            raise NoRoute(f"node {self.node_id} holds no address")
        if dest == self.own_address:
            return LOCAL_DELIVERY
        if self.assigned_range is None or not self.assigned_range.contains(dest):
            raise NoRoute(f"{dest} outside range of node {self.node_id}")
        for final, child in self.routing_table:
            if dest <= final:
                return child
        raise NoRoute(f"{dest} falls in the reserve of node {self.node_id}")

    def send_app_up(self, app_seq: int) -> list[Command]:
        """Originate one upward application message (the traffic phase).

        dest_address carries the reply-to address: the node's own address,
        or the root's address when this node was never addressed (the root
        then knows no answer can be routed).
        """
        if self.is_root:
            return []
        reply_to = self.own_address if self.own_address is not None else self.root_address
        msg = AppData(self.node_id, self.forward_up(), self._next_seq(),
                      reply_to, Direction.UP, app_seq)
        return [SendMsg(msg)]


class BaselineEngine(_EngineBase):
    """Bounded-capacity storing-mode comparison node.

    Every node advertises itself periodically; each hop on the way to the
    root stores a per-destination route while it has table space (full
    tables reject new routes) and forwards the advertisement upward.
    Downward forwarding needs a stored route, otherwise the packet is
    dropped.  Addresses are the node ids themselves.
    """

    def __init__(self, node_id: int, *, is_root: bool,
                 params: StabilizationParams = StabilizationParams(),
                 rng: Optional[random.Random] = None,
                 table_capacity: int = 20,
                 advert_interval_ms: float = 30_000.0):
        super().__init__(node_id, is_root=is_root, params=params,
                         rng=rng or random.Random(node_id))
        self.table_capacity = table_capacity
        self.advert_interval_ms = advert_interval_ms
        self.routes: dict[int, int] = {}  # destination id -> next-hop child
        self.rejected_routes = 0

    def on_start(self) -> list[Command]:
        if self.is_root:
            return []
        return [ArmTimer(TimerKey(TimerKind.PARENT), self.parent_timer.start())]

    def _on_parent_defined(self) -> list[Command]:
        return self._advertise() + [
            ArmTimer(TimerKey(TimerKind.ADVERT), self.advert_interval_ms)]

    def _on_other_timer(self, key: TimerKey) -> list[Command]:
        if key.kind is TimerKind.ADVERT:
            return self._advertise() + [
                ArmTimer(TimerKey(TimerKind.ADVERT), self.advert_interval_ms)]
        raise ValueError(f"unexpected timer {key}")

    def _advertise(self) -> list[Command]:
        dao = Dao(self.node_id, self.preferred_parent, self._next_seq(), self.node_id)
        return [SendMsg(dao)]

    def on_dao_received(self, msg: Dao) -> list[Command]:
        """Store a route for the advertised destination, forward the advert up."""
        cmds = [SendMsg(self._ack_for(msg))]
        target = msg.descendant_count
        if target not in self.routes:
            if len(self.routes) < self.table_capacity:
                self.routes[target] = msg.src
            else:
                self.rejected_routes += 1
        if not self.is_root:
            fwd = Dao(self.node_id, self.preferred_parent, self._next_seq(), target)
            cmds.append(SendMsg(fwd))
        return cmds

    def on_dio_received(self, msg: Dio) -> list[Command]:
        self.events.append("unexpected allocation message in baseline mode")
        return [SendMsg(self._ack_for(msg))]

    def on_app_received(self, msg: AppData) -> list[Command]:
        if msg.direction is Direction.UP:
            if not self.is_root:
                fwd = AppData(self.node_id, self.forward_up(), self._next_seq(),
                              msg.dest_address, Direction.UP, msg.app_seq)
                return [SendMsg(fwd)]
            cmds: list[Command] = [Deliver(msg)]
            reply = AppData(self.node_id, self.node_id, self._next_seq(),
                            msg.dest_address, Direction.DOWN, msg.app_seq)
            cmds += self._route_down(reply)
            return cmds
        if msg.dest_address == self.node_id:
            return [Deliver(msg)]
        return self._route_down(msg)

    def _route_down(self, msg: AppData) -> list[Command]:
        hop = self.routes.get(msg.dest_address)
        if hop is None:
            return [DropMsg(msg, DropReason.NO_ROUTE)]
        fwd = AppData(self.node_id, hop, self._next_seq(),
                      msg.dest_address, Direction.DOWN, msg.app_seq)
        return [SendMsg(fwd)]

    def send_app_up(self, app_seq: int) -> list[Command]:
        if self.is_root:
            return []
        msg = AppData(self.node_id, self.forward_up(), self._next_seq(),
                      self.node_id, Direction.UP, app_seq)
        return [SendMsg(msg)]
