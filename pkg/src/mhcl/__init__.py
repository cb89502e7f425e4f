"""Hierarchical host-address configuration: protocol engine plus simulator."""

from .addrspace import (AddressRange, DEFAULT_RESERVE, InsufficientSpace,
                        PartitionResult, allocate_delayed, contains,
                        partition_aggregate, partition_greedy)
from .messages import (AppData, Dao, DaoAck, Dio, DioAck, Direction,
                       MalformedMessage, MhclMessage, MsgKind, decode, encode)
from .node import (BaselineEngine, Mode, NodeEngine, StabilizationParams,
                   TrickleTimer)
from .simcore import (Metrics, ProtocolStall, SimConfig, TopologySpec, run,
                      run_baseline_storing, run_with_state, sweep, write_csv)
from .topology import (FailureKind, FailureModel, Topology, make_grid,
                       make_uniform, sample_loss)

__all__ = [
    "AddressRange", "DEFAULT_RESERVE", "InsufficientSpace", "PartitionResult",
    "allocate_delayed", "contains", "partition_aggregate", "partition_greedy",
    "AppData", "Dao", "DaoAck", "Dio", "DioAck", "Direction",
    "MalformedMessage", "MhclMessage", "MsgKind", "decode", "encode",
    "BaselineEngine", "Mode", "NodeEngine", "StabilizationParams", "TrickleTimer",
    "Metrics", "ProtocolStall", "SimConfig", "TopologySpec", "run",
    "run_baseline_storing", "run_with_state", "sweep", "write_csv",
    "FailureKind", "FailureModel", "Topology", "make_grid", "make_uniform",
    "sample_loss",
]
