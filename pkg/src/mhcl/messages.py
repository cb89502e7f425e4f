"""Control and application messages with a bit-exact wire codec.

Every message shares a fixed header, big-endian throughout:

    [kind: 1][flag: 1][src: 2][dst: 2][seq: 2][options ...]

followed by kind-specific options, each field 2 bytes.  Lengths are fixed
per kind, so truncation, unknown kinds, and flag/kind mismatches are all
detectable at decode time.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Union


class MalformedMessage(ValueError):
    """Bytes that do not decode to a valid message."""


class MsgKind(IntEnum):
    DIO_MHCL = 1
    DIOACK_MHCL = 2
    DAO_MHCL = 3
    DAOACK_MHCL = 4
    APP_DATA = 5


class Direction(IntEnum):
    UP = 0
    DOWN = 1


# Flag values are fixed per kind; acks carry 2, address/topology traffic 1.
KIND_FLAG = {
    MsgKind.DIO_MHCL: 1,
    MsgKind.DIOACK_MHCL: 2,
    MsgKind.DAO_MHCL: 1,
    MsgKind.DAOACK_MHCL: 2,
    MsgKind.APP_DATA: 0,
}

_HEADER = struct.Struct(">BBHHH")
_U16 = 0xFFFF


def _check_u16(name: str, value: int):
    if not 0 <= value <= _U16:
        raise ValueError(f"{name} out of 16-bit range: {value}")


@dataclass(frozen=True)
class Dio:
    """Address allocation from parent to child: first address + range size."""

    src: int
    dst: int
    seq: int
    first_address: int
    partition_size: int
    kind = MsgKind.DIO_MHCL

    def __post_init__(self):
        for name in ("src", "dst", "seq", "first_address", "partition_size"):
            _check_u16(name, getattr(self, name))
        if self.partition_size < 1:
            raise ValueError("partition_size must be >= 1")


@dataclass(frozen=True)
class DioAck:
    src: int
    dst: int
    seq: int
    acked_seq: int
    kind = MsgKind.DIOACK_MHCL

    def __post_init__(self):
        for name in ("src", "dst", "seq", "acked_seq"):
            _check_u16(name, getattr(self, name))


@dataclass(frozen=True)
class Dao:
    """Child-to-parent report.

    descendant_count 0 plays the "I am your child" role; a value >= 1
    carries the sender's subtree size in the aggregate phase.
    """

    src: int
    dst: int
    seq: int
    descendant_count: int
    kind = MsgKind.DAO_MHCL

    def __post_init__(self):
        for name in ("src", "dst", "seq", "descendant_count"):
            _check_u16(name, getattr(self, name))


@dataclass(frozen=True)
class DaoAck:
    src: int
    dst: int
    seq: int
    acked_seq: int
    kind = MsgKind.DAOACK_MHCL

    def __post_init__(self):
        for name in ("src", "dst", "seq", "acked_seq"):
            _check_u16(name, getattr(self, name))


@dataclass(frozen=True)
class AppData:
    """Application payload for the traffic phase.

    dest_address is the routing target for DOWN packets; for UP packets it
    carries the originator's own address so the root can answer without any
    out-of-band knowledge.  app_seq identifies the end-to-end exchange.
    """

    src: int
    dst: int
    seq: int
    dest_address: int
    direction: Direction
    app_seq: int
    kind = MsgKind.APP_DATA

    def __post_init__(self):
        for name in ("src", "dst", "seq", "dest_address", "app_seq"):
            _check_u16(name, getattr(self, name))
        if self.direction not in (Direction.UP, Direction.DOWN):
            raise ValueError(f"bad direction {self.direction}")


MhclMessage = Union[Dio, DioAck, Dao, DaoAck, AppData]

WIRE_SIZE = {
    MsgKind.DIO_MHCL: _HEADER.size + 4,
    MsgKind.DIOACK_MHCL: _HEADER.size + 2,
    MsgKind.DAO_MHCL: _HEADER.size + 2,
    MsgKind.DAOACK_MHCL: _HEADER.size + 2,
    MsgKind.APP_DATA: _HEADER.size + 6,
}


def encode(msg: MhclMessage) -> bytes:
    """Serialize a message; inverse of decode."""
    head = _HEADER.pack(msg.kind, KIND_FLAG[msg.kind], msg.src, msg.dst, msg.seq)
    if isinstance(msg, Dio):
        return head + struct.pack(">HH", msg.first_address, msg.partition_size)
    if isinstance(msg, (DioAck, DaoAck)):
        return head + struct.pack(">H", msg.acked_seq)
    if isinstance(msg, Dao):
        return head + struct.pack(">H", msg.descendant_count)
    if isinstance(msg, AppData):
        return head + struct.pack(">HHH", msg.dest_address, msg.direction, msg.app_seq)
    raise TypeError(f"not a message: {msg!r}")


def decode(data: bytes) -> MhclMessage:
    """Parse wire bytes, raising MalformedMessage on any inconsistency."""
    if len(data) < _HEADER.size:
        raise MalformedMessage(f"truncated message ({len(data)} bytes)")
    kind_byte, flag, src, dst, seq = _HEADER.unpack_from(data)
    try:
        kind = MsgKind(kind_byte)
    except ValueError:
        raise MalformedMessage(f"unknown kind byte 0x{kind_byte:02x}") from None
    if flag != KIND_FLAG[kind]:
        raise MalformedMessage(f"flag {flag} inconsistent with {kind.name}")
    if len(data) != WIRE_SIZE[kind]:
        raise MalformedMessage(
            f"{kind.name} must be {WIRE_SIZE[kind]} bytes, got {len(data)}")
    body = data[_HEADER.size:]
    if kind is MsgKind.DIO_MHCL:
        first, size = struct.unpack(">HH", body)
        if size < 1:
            raise MalformedMessage("DIO_MHCL with zero partition size")
        return Dio(src, dst, seq, first, size)
    if kind is MsgKind.DIOACK_MHCL:
        return DioAck(src, dst, seq, struct.unpack(">H", body)[0])
    if kind is MsgKind.DAO_MHCL:
        return Dao(src, dst, seq, struct.unpack(">H", body)[0])
    if kind is MsgKind.DAOACK_MHCL:
        return DaoAck(src, dst, seq, struct.unpack(">H", body)[0])
    dest, direction, app_seq = struct.unpack(">HHH", body)
    if direction not in (0, 1):
        raise MalformedMessage(f"bad direction field {direction}")
    return AppData(src, dst, seq, dest, Direction(direction), app_seq)
