"""Brute-force reference computations for tests and plan inspection.

These recompute the global address plan, routes, and subtree sizes directly
from a parent map in one pass.  They exist to cross-check the distributed
protocol; nothing in the engine or simulator depends on them.
"""

from __future__ import annotations

from .addrspace import (AddressRange, DEFAULT_RESERVE, InsufficientSpace,
                        partition_aggregate, partition_greedy)

ParentMap = dict  # node id -> parent id, root absent


class NoSuchAddress(LookupError):
    """Destination address is not allocated anywhere in the plan."""


def _children_of(parent_map: ParentMap, root_id: int) -> dict[int, list[int]]:
    children = {root_id: []}
    for node in parent_map:
        children.setdefault(node, [])
    for node, parent in sorted(parent_map.items()):
        children.setdefault(parent, []).append(node)
    return children


def validate_parent_map(parent_map: ParentMap, root_id: int):
    """Every node must reach the root without cycles."""
    for start in parent_map:
        seen = {start}
        node = start
        while node != root_id:
            if node not in parent_map:
                raise ValueError(f"node {node} has no path to root {root_id}")
            node = parent_map[node]
            if node in seen:
                raise ValueError(f"cycle through node {node}")
            seen.add(node)


def oracle_subtree_sizes(parent_map: ParentMap, root_id: int) -> dict[int, int]:
    """Size of the subtree rooted at each node (the node itself included)."""
    validate_parent_map(parent_map, root_id)
    sizes = {node: 1 for node in parent_map}
    sizes[root_id] = 1
    # Accumulate bottom-up: order nodes by decreasing depth.
    def depth(node):
        d = 0
        while node != root_id:
            node = parent_map[node]
            d += 1
        return d
    for node in sorted(parent_map, key=depth, reverse=True):
        sizes[parent_map[node]] += sizes[node]
    return sizes


def oracle_plan(parent_map: ParentMap, root_id: int, root_range: AddressRange,
                mode: str = "greedy", r=DEFAULT_RESERVE) -> dict[int, tuple[int, AddressRange]]:
    """Recursively apply the partition rules from the root downward.

    Returns node id -> (own address, assigned range).  Matches the outcome
    of a loss-free distributed run node for node.
    """
    if mode not in ("greedy", "aggregate"):
        raise ValueError(f"unknown mode {mode!r}")
    validate_parent_map(parent_map, root_id)
    children = _children_of(parent_map, root_id)
    sizes = oracle_subtree_sizes(parent_map, root_id)

    plan = {}

    def descend(node: int, rng: AddressRange):
        plan[node] = (rng.start, rng)
        kids = children.get(node, [])
        if not kids:
            return
        try:
            if mode == "greedy":
                result = partition_greedy(rng, kids, r)
            else:
                result = partition_aggregate(rng, [(k, sizes[k]) for k in kids], r)
        except InsufficientSpace as exc:
            raise InsufficientSpace(f"at node {node}: {exc}") from exc
        for kid, kid_range in result.child_ranges:
            descend(kid, kid_range)

    descend(root_id, root_range)
    return plan


def oracle_route(parent_map: ParentMap, plan: dict[int, tuple[int, AddressRange]],
                 dest: int, root_id: int) -> list[int]:
    """Root-to-owner path: descend into the unique child whose range holds dest."""
    children = _children_of(parent_map, root_id)
    node = root_id
    path = [node]
    while True:
        own, rng = plan[node]
        if own == dest:
            return path
        nxt = None
        for kid in children.get(node, []):
            if kid in plan and plan[kid][1].contains(dest):
                nxt = kid
                break
        if nxt is None:
            raise NoSuchAddress(f"address {dest} not allocated below node {node}")
        node = nxt
        path.append(node)
