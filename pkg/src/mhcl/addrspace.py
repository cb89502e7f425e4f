"""Hierarchical partitioning of a contiguous host-address space.

A node owns a half-open interval of host addresses.  It keeps the first
address of the interval for itself, carves contiguous sub-ranges for its
children, and withholds a reserve tail for late joiners.  Two split rules
are provided: equal shares (one-hop greedy) and shares proportional to
reported subtree sizes (aggregate).  All arithmetic is exact, so no address
is ever lost or handed out twice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

DEFAULT_RESERVE = Fraction(1, 16)
DEFAULT_WIDTH = 16


class InsufficientSpace(ValueError):
    """A range cannot give every requested child at least one address."""


def as_fraction(r) -> Fraction:
    """Normalize a reserve fraction to an exact rational in [0, 1).

    Floats are interpreted through their decimal text (0.05 means 1/20,
    not the nearest binary float), so configured percentages stay exact.
    """
    f = Fraction(str(r)) if isinstance(r, float) else Fraction(r)
    if not 0 <= f < 1:
        raise ValueError(f"reserve fraction must be in [0, 1): {r!r}")
    return f


@dataclass(frozen=True)
class AddressRange:
    """Half-open interval [start, start + length) of host addresses."""

    start: int
    length: int

    def __post_init__(self):
        if self.start < 0 or self.length < 0:
            raise ValueError(f"invalid range [{self.start}, +{self.length})")

    @property
    def end(self) -> int:
        return self.start + self.length

    @property
    def last(self) -> int:
        """Final address inside the range (requires length >= 1)."""
        if self.length < 1:
            raise ValueError("empty range has no last address")
        return self.end - 1

    def contains(self, addr: int) -> bool:
        return self.start <= addr < self.end

    def __str__(self):
        return f"[{self.start},{self.end})"


def contains(rng: AddressRange, addr: int) -> bool:
    """True iff addr falls inside the half-open range."""
    return rng.contains(addr)


@dataclass(frozen=True)
class PartitionResult:
    """Outcome of splitting one range among children.

    own_address is the first address of the partitioned range, or None for
    reserve-pool allocations where the owner already holds an address.  The
    reserve may have length 0; every child range has length >= 1.
    """

    own_address: int | None
    child_ranges: tuple[tuple[int, AddressRange], ...]
    reserve: AddressRange

    def range_of(self, child_id: int) -> AddressRange:
        for cid, rng in self.child_ranges:
            if cid == child_id:
                return rng
        raise KeyError(child_id)

    def lengths(self) -> dict[int, int]:
        return {cid: rng.length for cid, rng in self.child_ranges}


def _reserve_base(rng_length: int, r: Fraction) -> int:
    return int(r * rng_length)  # floor, exact rational arithmetic


def _layout(start: int, lengths: Sequence[tuple[int, int]], end: int) -> tuple[tuple[tuple[int, AddressRange], ...], AddressRange]:
    """Place child ranges back to back from start; reserve gets the tail."""
    ranges = []
    cursor = start
    for cid, length in lengths:
        ranges.append((cid, AddressRange(cursor, length)))
        cursor += length
    return tuple(ranges), AddressRange(cursor, end - cursor)


def partition_greedy(rng: AddressRange, child_ids: Sequence[int],
                     r=DEFAULT_RESERVE) -> PartitionResult:
    """Equal split: every child gets floor(usable / k) addresses.

    usable = length - 1 (own address) - floor(r * length).  Division
    remainders flow into the reserve, which sits at the tail of the range.
    Children are laid out in ascending id order right after the own address.
    """
    r = as_fraction(r)
    if rng.length < 1:
        raise InsufficientSpace(f"range {rng} is empty")
    ids = sorted(child_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("child ids must be distinct")
    base = _reserve_base(rng.length, r)
    usable = rng.length - 1 - base
    k = len(ids)
    if k == 0:
        children, reserve = _layout(rng.start + 1, [], rng.end)
        return PartitionResult(rng.start, children, reserve)
    if usable < k:
        raise InsufficientSpace(
            f"{usable} usable addresses in {rng} for {k} children")
    per_child = usable // k
    children, reserve = _layout(
        rng.start + 1, [(cid, per_child) for cid in ids], rng.end)
    return PartitionResult(rng.start, children, reserve)


def partition_aggregate(rng: AddressRange, child_subtree_sizes: Sequence[tuple[int, int]],
                        r=DEFAULT_RESERVE) -> PartitionResult:
    """Proportional split by reported subtree sizes, largest-remainder rounding.

    Child i gets floor(usable * size_i / total); leftover addresses go one
    by one to the children with the largest fractional remainders (ties
    broken by ascending child id).  When every reported size is equal the
    split degenerates to the equal split of partition_greedy, remainders
    included, so both rules agree exactly on that case.
    """
    r = as_fraction(r)
    if rng.length < 1:
        raise InsufficientSpace(f"range {rng} is empty")
    pairs = sorted(child_subtree_sizes)
    ids = [cid for cid, _ in pairs]
    if len(set(ids)) != len(ids):
        raise ValueError("child ids must be distinct")
    for cid, size in pairs:
        if size < 1:
            raise ValueError(f"subtree size for child {cid} must be >= 1")
    k = len(pairs)
    if k == 0:
        children, reserve = _layout(rng.start + 1, [], rng.end)
        return PartitionResult(rng.start, children, reserve)
    base = _reserve_base(rng.length, r)
    usable = rng.length - 1 - base
    if usable < k:
        raise InsufficientSpace(
            f"{usable} usable addresses in {rng} for {k} children")

    sizes = [size for _, size in pairs]
    if len(set(sizes)) == 1:
        # Equal sizes: identical to the greedy layout (leftovers to reserve).
        return partition_greedy(rng, ids, r)

    total = sum(sizes)
    shares = [Fraction(usable * size, total) for size in sizes]
    floors = [int(s) for s in shares]
    leftover = usable - sum(floors)
    # Largest fractional remainder first; ties by ascending child id.
    order = sorted(range(k), key=lambda i: (-(shares[i] - floors[i]), ids[i]))
    lengths = list(floors)
    for i in order[:leftover]:
        lengths[i] += 1
    # Minimum viable allocation: a heavily outnumbered child can round to
    # zero; top it up from the largest allocation (ties donate from the
    # smaller subtree so proportional ordering survives).  usable >= k
    # guarantees a donor with at least 2 addresses exists.
    for i in range(k):
        while lengths[i] < 1:
            donor = max(range(k), key=lambda j: (lengths[j], -sizes[j], ids[j]))
            lengths[donor] -= 1
            lengths[i] += 1
    children, reserve = _layout(
        rng.start + 1, list(zip(ids, lengths)), rng.end)
    return PartitionResult(rng.start, children, reserve)


def allocate_delayed(reserve: AddressRange, new_child_ids: Sequence[int],
                     r=DEFAULT_RESERVE) -> PartitionResult:
    """Carve ranges for late joiners out of a reserve pool.

    Same rounding as the equal split, but no own address is consumed: the
    first new child starts at the very beginning of the reserve.  Returns a
    PartitionResult with own_address None and the shrunken reserve tail.
    """
    r = as_fraction(r)
    ids = sorted(new_child_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("child ids must be distinct")
    k = len(ids)
    if k == 0:
        return PartitionResult(None, (), reserve)
    base = _reserve_base(reserve.length, r)
    usable = reserve.length - base
    if usable < k:
        raise InsufficientSpace(
            f"{usable} usable addresses in reserve {reserve} for {k} children")
    per_child = usable // k
    children, tail = _layout(
        reserve.start, [(cid, per_child) for cid in ids], reserve.end)
    return PartitionResult(None, children, tail)
