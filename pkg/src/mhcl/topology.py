"""Experiment topologies and the probabilistic link-failure model.

Nodes live on a plane; two nodes are adjacent iff their Euclidean distance
is within the transmission range.  Topologies are immutable after
construction and fully reproducible from their parameters and seed.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

DEFAULT_TX_RANGE = 50.0
GRID_SPACING = 35.0
# Links right at the nominal radio range are not usable in practice; the
# margin drops them.  In particular grid diagonals (35 * sqrt(2) = 49.5 m)
# do not form links, which yields the 4-neighborhood and the corner-root
# depth of 2 * (sqrt(n) - 1) that the experiments assume.
LINK_MARGIN = 0.98


class NotASquare(ValueError):
    """Grid sizes must be perfect squares."""


class DisconnectedAfterRetries(RuntimeError):
    """Uniform placement failed to produce a connected graph."""


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Topology:
    positions: dict[int, Position]
    root_id: int
    tx_range: float = DEFAULT_TX_RANGE
    label: str = "custom"
    _adjacency: dict[int, tuple[int, ...]] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        adj = {nid: [] for nid in self.positions}
        ids = sorted(self.positions)
        usable = self.tx_range * LINK_MARGIN
        for i, u in enumerate(ids):
            for v in ids[i + 1:]:
                if self.positions[u].distance(self.positions[v]) <= usable:
                    adj[u].append(v)
                    adj[v].append(u)
        object.__setattr__(self, "_adjacency",
                           {nid: tuple(sorted(ns)) for nid, ns in adj.items()})

    @property
    def n(self) -> int:
        return len(self.positions)

    def neighbors(self, node_id: int) -> tuple[int, ...]:
        return self._adjacency[node_id]

    def hop_counts(self) -> dict[int, int]:
        """BFS distance from the root for every reachable node."""
        hops = {self.root_id: 0}
        queue = deque([self.root_id])
        while queue:
            u = queue.popleft()
            for v in self.neighbors(u):
                if v not in hops:
                    hops[v] = hops[u] + 1
                    queue.append(v)
        return hops

    def is_connected(self) -> bool:
        return len(self.hop_counts()) == self.n

    def depth(self) -> int:
        return max(self.hop_counts().values())

    def preferred_parents(self) -> dict[int, int]:
        """Parent choice per node: a neighbor one hop closer to the root,
        ties broken by the smallest node id."""
        hops = self.hop_counts()
        parents = {}
        for nid in sorted(self.positions):
            if nid == self.root_id or nid not in hops:
                continue
            candidates = [v for v in self.neighbors(nid) if hops.get(v) == hops[nid] - 1]
            parents[nid] = min(candidates)
        return parents


def make_grid(n: int, spacing: float = GRID_SPACING,
              tx_range: float = DEFAULT_TX_RANGE) -> Topology:
    """Regular sqrt(n) x sqrt(n) grid, root at the (0, 0) corner.

    With 35 m spacing and 50 m range each interior node has exactly four
    neighbors, since the diagonal distance 35 * sqrt(2) exceeds the range.
    """
    side = math.isqrt(n)
    if side * side != n or n < 1:
        raise NotASquare(f"{n} is not a perfect square")
    positions = {
        i * side + j: Position(i * spacing, j * spacing)
        for i in range(side) for j in range(side)
    }
    return Topology(positions, root_id=0, tx_range=tx_range, label="grid")


def make_uniform(n: int, seed: int, tx_range: float = DEFAULT_TX_RANGE,
                 max_attempts: int = 100) -> Topology:
    """n nodes placed i.i.d. uniformly in a square of side (sqrt(n) - 2) * 35 m.

    The root is the node nearest the square's center.  Placement is retried
    with derived seeds until the graph is connected.
    """
    if n < 9:
        raise ValueError(f"uniform topology needs n >= 9, got {n}")
    side = (math.sqrt(n) - 2) * GRID_SPACING
    for attempt in range(max_attempts):
        rng = random.Random(f"uniform:{seed}:{attempt}")
        positions = {
            i: Position(rng.uniform(0, side), rng.uniform(0, side))
            for i in range(n)
        }
        center = Position(side / 2, side / 2)
        root = min(positions, key=lambda i: (positions[i].distance(center), i))
        topo = Topology(positions, root_id=root, tx_range=tx_range, label="uniform")
        if topo.is_connected():
            return topo
    raise DisconnectedAfterRetries(
        f"no connected uniform placement for n={n}, seed={seed} "
        f"after {max_attempts} attempts")


class FailureKind(Enum):
    NONE = "none"
    TX = "tx"
    RX = "rx"


class LossOutcome(Enum):
    DELIVER_ALL = "deliver"
    DROP_ALL = "drop_tx"       # transmitter-side: nobody receives
    DROP_DEST_ONLY = "drop_rx"  # receiver-side: only the destination misses


@dataclass(frozen=True)
class FailureModel:
    kind: FailureKind = FailureKind.NONE
    rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"failure rate out of [0, 1]: {self.rate}")

    def label(self) -> str:
        if self.kind is FailureKind.NONE:
            return "none"
        return f"{self.kind.value}{int(round(self.rate * 100))}"


def sample_loss(model: FailureModel, rng: random.Random) -> LossOutcome:
    """Draw the fate of one transmission under the failure model."""
    if model.kind is FailureKind.NONE or model.rate == 0.0:
        return LossOutcome.DELIVER_ALL
    if rng.random() >= model.rate:
        return LossOutcome.DELIVER_ALL
    if model.kind is FailureKind.TX:
        return LossOutcome.DROP_ALL
    return LossOutcome.DROP_DEST_ONLY


def save_nodes(topo: Topology, path: str):
    """Write a reproducible plain-text node list (id, x, y)."""
    with open(path, "w") as fh:
        fh.write(f"# root {topo.root_id} tx_range {topo.tx_range}\n")
        for nid in sorted(topo.positions):
            pos = topo.positions[nid]
            fh.write(f"{nid} {pos.x:.6f} {pos.y:.6f}\n")


def load_nodes(path: str) -> Topology:
    """Read a node list written by save_nodes."""
    root_id = 0
    tx_range = DEFAULT_TX_RANGE
    positions = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) >= 4 and parts[0] == "root":
                    root_id = int(parts[1])
                    tx_range = float(parts[3])
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'id x y'")
            positions[int(parts[0])] = Position(float(parts[1]), float(parts[2]))
    if root_id not in positions:
        raise ValueError(f"{path}: root {root_id} not among nodes")
    return Topology(positions, root_id=root_id, tx_range=tx_range, label="file")
