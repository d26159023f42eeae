"""rocesim: packet-level RoCE fabric simulation for distributed training.

A deterministic discrete-event simulator of lossless Ethernet fabrics
(single switch and two-level CLOS) running collective-communication
workloads under six congestion-control policies: PFC-only, DCQCN, DCTCP,
TIMELY, HPCC and HPCC-PINT.
"""

from .collectives import (
    CollectivePlan,
    chunk_pipeline,
    dump_plan_csv,
    lower_bound_ns,
    plan_allreduce_1d,
    plan_allreduce_2d,
    plan_alltoall,
    plan_incast,
)
from .engine import EventLoop, SimTime
from .fabric import FabricParams, KernelCapacities, Network
from .simulator import CollectiveResult, FabricSimulator
from .topology import (
    FlowKey,
    LinkSpec,
    NodeId,
    NodeKind,
    Topology,
    build_clos,
    build_single_switch,
    ecmp_select,
)
from .transport import (
    CcParams,
    DCQCN,
    DCTCP,
    HPCC,
    HPCC_PINT,
    PFC_ONLY,
    TIMELY,
    VARIANT_NAMES,
)

__version__ = "0.1.0"

__all__ = [
    "CollectivePlan",
    "CollectiveResult",
    "CcParams",
    "EventLoop",
    "FabricParams",
    "FabricSimulator",
    "FlowKey",
    "KernelCapacities",
    "LinkSpec",
    "Network",
    "NodeId",
    "NodeKind",
    "SimTime",
    "Topology",
    "build_clos",
    "build_single_switch",
    "chunk_pipeline",
    "dump_plan_csv",
    "ecmp_select",
    "lower_bound_ns",
    "plan_allreduce_1d",
    "plan_allreduce_2d",
    "plan_alltoall",
    "plan_incast",
    "PFC_ONLY",
    "DCQCN",
    "DCTCP",
    "TIMELY",
    "HPCC",
    "HPCC_PINT",
    "VARIANT_NAMES",
]
