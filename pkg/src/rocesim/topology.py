"""Fabric topologies: single-switch star and two-level CLOS with ECMP uplinks.

The CLOS build mirrors a dedicated training fabric: racks of servers, each
server hosting eight NPUs behind a logical lossless scale-up switch, every
NPU owning one NIC link to its top-of-rack switch, and every TOR connected
to every spine.  Construction validates 1:1 subscription per TOR (total
uplink bandwidth equals total downlink bandwidth) unless explicitly
overridden.

Unit trap, made explicit on purpose: scale-up bandwidth is quoted in
GigaBYTES/s while NIC and TOR-spine links are in Gigabits/s.  All
bandwidth fields here are plain bits/s; the config layer parses the
suffixed strings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class NodeKind(Enum):
    NPU = "npu"
    TOR = "tor"
    SPINE = "spine"
    NVSWITCH = "nvswitch"


@dataclass(frozen=True, order=True)
class NodeId:
    kind: NodeKind
    index: int

    def __str__(self) -> str:
        return f"{self.kind.value}{self.index}"


@dataclass(frozen=True)
class LinkSpec:
    bandwidth_bps: int
    latency_ns: int

    def __post_init__(self):
        if self.bandwidth_bps <= 0:
            raise ValueError(f"link bandwidth must be positive, got {self.bandwidth_bps}")
        if self.latency_ns < 0:
            raise ValueError(f"link latency must be non-negative, got {self.latency_ns}")


@dataclass(frozen=True)
class FlowKey:
    src: NodeId
    dst: NodeId
    flow_tag: int


# Defaults follow the reference platform: 200 Gbps / 500 ns scale-out links,
# 200 GBps / 25 ns scale-up, 32 MB shared switch buffers.
DEFAULT_NIC_LINK = LinkSpec(200 * 10**9, 500)
DEFAULT_SCALE_UP_LINK = LinkSpec(8 * 200 * 10**9, 25)
DEFAULT_BUFFER_BYTES = 32 * 10**6


@dataclass
class Topology:
    kind: str  # "single_switch" | "clos"
    nodes: list[NodeId]
    links: dict[tuple[NodeId, NodeId], LinkSpec]
    uplink_groups: dict[NodeId, list[NodeId]]  # TOR -> ordered spine list
    scale_up_groups: dict[int, list[NodeId]]  # server index -> member NPUs
    buffer_bytes: int
    n_npus: int
    racks: int = 1
    servers_per_rack: int = 0
    npus_per_server: int = 0
    spines: int = 0

    def npu(self, i: int) -> NodeId:
        return NodeId(NodeKind.NPU, i)

    def rack_of(self, npu_index: int) -> int:
        if self.kind == "single_switch":
            return 0
        return npu_index // (self.servers_per_rack * self.npus_per_server)

    def server_of(self, npu_index: int) -> int:
        if self.kind == "single_switch":
            return npu_index  # no scale-up network; each NPU is its own server
        return npu_index // self.npus_per_server

    def route(self, key: FlowKey) -> list[NodeId]:
        """Full node path of a flow; a pure function of the key."""
        src, dst = key.src, key.dst
        if src == dst:
            raise ValueError("flow source and destination must differ")
        if self.kind == "single_switch":
            sw = NodeId(NodeKind.TOR, 0)
            return [src, sw, dst]
        si, di = src.index, dst.index
        if self.server_of(si) == self.server_of(di):
            return [src, NodeId(NodeKind.NVSWITCH, self.server_of(si)), dst]
        sr, dr = self.rack_of(si), self.rack_of(di)
        if sr == dr:
            return [src, NodeId(NodeKind.TOR, sr), dst]
        tor = NodeId(NodeKind.TOR, sr)
        group = self.uplink_groups[tor]
        spine = group[ecmp_select(key, len(group))]
        return [src, tor, spine, NodeId(NodeKind.TOR, dr), dst]

    def link_rows(self) -> list[tuple[str, str, int, int]]:
        """(src, dst, bandwidth_bps, latency_ns) per directed link, sorted."""
        rows = [
            (str(a), str(b), spec.bandwidth_bps, spec.latency_ns)
            for (a, b), spec in self.links.items()
        ]
        rows.sort()
        return rows


def _mix64(x: int) -> int:
    x &= 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


def ecmp_hash(src_index: int, dst_index: int, flow_tag: int) -> int:
    """Fixed, seedless 64-bit mix of the flow identity."""
    h = _mix64(flow_tag * 0x9E3779B97F4A7C15 + 0xD1B54A32D192ED03)
    h = _mix64(h ^ (dst_index * 0x8CB92BA72F3D8DD7))
    h = _mix64(h ^ (src_index * 0xA0761D6478BD642F))
    return h


def ecmp_select(key: FlowKey, group_size: int) -> int:
    """Deterministic uniform-intent index into an ECMP group."""
    if group_size <= 0:
        raise ValueError("ECMP group must be non-empty")
    if group_size == 1:
        return 0
    return ecmp_hash(key.src.index, key.dst.index, key.flow_tag) % group_size


def ecmp_select_array(
    src_index: np.ndarray, dst_index: np.ndarray, flow_tag: np.ndarray, group_size: int
) -> np.ndarray:
    """Vectorized ecmp_select over op tables; bit-identical to the scalar form."""
    if group_size <= 0:
        raise ValueError("ECMP group must be non-empty")
    M = np.uint64(0xFFFFFFFFFFFFFFFF)

    def mix(x):
        x = x & M
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))

    with np.errstate(over="ignore"):
        h = mix(
            flow_tag.astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15)
            + np.uint64(0xD1B54A32D192ED03)
        )
        h = mix(h ^ (dst_index.astype(np.uint64) * np.uint64(0x8CB92BA72F3D8DD7)))
        h = mix(h ^ (src_index.astype(np.uint64) * np.uint64(0xA0761D6478BD642F)))
    return (h % np.uint64(group_size)).astype(np.int64)


def build_single_switch(
    n_npus: int,
    link: LinkSpec = DEFAULT_NIC_LINK,
    buffer_bytes: int = DEFAULT_BUFFER_BYTES,
) -> Topology:
    """Star of ``n_npus`` NPUs on one switch, identical links everywhere."""
    if n_npus < 2:
        raise ValueError(f"a star needs at least 2 NPUs, got {n_npus}")
    sw = NodeId(NodeKind.TOR, 0)
    nodes = [NodeId(NodeKind.NPU, i) for i in range(n_npus)] + [sw]
    links: dict[tuple[NodeId, NodeId], LinkSpec] = {}
    for i in range(n_npus):
        npu = NodeId(NodeKind.NPU, i)
        links[(npu, sw)] = link
        links[(sw, npu)] = link
    return Topology(
        kind="single_switch",
        nodes=nodes,
        links=links,
        uplink_groups={},
        scale_up_groups={},
        buffer_bytes=buffer_bytes,
        n_npus=n_npus,
    )


def build_clos(
    racks: int,
    servers_per_rack: int = 2,
    npus_per_server: int = 8,
    spines: int = 8,
    nic_link: LinkSpec = DEFAULT_NIC_LINK,
    tor_spine_link: LinkSpec | None = None,
    scale_up_link: LinkSpec = DEFAULT_SCALE_UP_LINK,
    buffer_bytes: int = DEFAULT_BUFFER_BYTES,
    allow_oversubscription: bool = False,
) -> Topology:
    """Two-level CLOS: one TOR per rack, every TOR wired to every spine.

    When ``tor_spine_link`` is omitted, the uplink bandwidth is sized so that
    per-TOR uplink capacity exactly equals downlink capacity (1:1 full
    subscription).  Passing an explicit spec that breaks the 1:1 ratio is an
    error unless ``allow_oversubscription`` is set.
    """
    for name, v in (("racks", racks), ("servers_per_rack", servers_per_rack),
                    ("npus_per_server", npus_per_server), ("spines", spines)):
        if v < 1:
            raise ValueError(f"{name} must be >= 1, got {v}")

    npus_per_rack = servers_per_rack * npus_per_server
    downlink_bps = npus_per_rack * nic_link.bandwidth_bps
    if tor_spine_link is None:
        if downlink_bps % spines != 0:
            raise ValueError(
                f"cannot split {downlink_bps} bps of downlink evenly over "
                f"{spines} spines; pass tor_spine_link explicitly"
            )
        tor_spine_link = LinkSpec(downlink_bps // spines, nic_link.latency_ns)
    uplink_bps = spines * tor_spine_link.bandwidth_bps
    if uplink_bps != downlink_bps and not allow_oversubscription:
        raise ValueError(
            f"subscription ratio is not 1:1 (uplink {uplink_bps} bps vs "
            f"downlink {downlink_bps} bps per TOR); set allow_oversubscription "
            "to build anyway"
        )

    n_npus = racks * npus_per_rack
    n_servers = racks * servers_per_rack
    nodes: list[NodeId] = [NodeId(NodeKind.NPU, i) for i in range(n_npus)]
    tors = [NodeId(NodeKind.TOR, r) for r in range(racks)]
    spine_nodes = [NodeId(NodeKind.SPINE, s) for s in range(spines)]
    nvswitches = [NodeId(NodeKind.NVSWITCH, s) for s in range(n_servers)]
    nodes += tors + spine_nodes + nvswitches

    links: dict[tuple[NodeId, NodeId], LinkSpec] = {}
    scale_up_groups: dict[int, list[NodeId]] = {}
    for i in range(n_npus):
        npu = NodeId(NodeKind.NPU, i)
        rack = i // npus_per_rack
        server = i // npus_per_server
        links[(npu, tors[rack])] = nic_link
        links[(tors[rack], npu)] = nic_link
        links[(npu, nvswitches[server])] = scale_up_link
        links[(nvswitches[server], npu)] = scale_up_link
        scale_up_groups.setdefault(server, []).append(npu)
    for tor in tors:
        for spine in spine_nodes:
            links[(tor, spine)] = tor_spine_link
            links[(spine, tor)] = tor_spine_link

    return Topology(
        kind="clos",
        nodes=nodes,
        links=links,
        uplink_groups={tor: list(spine_nodes) for tor in tors},
        scale_up_groups=scale_up_groups,
        buffer_bytes=buffer_bytes,
        n_npus=n_npus,
        racks=racks,
        servers_per_rack=servers_per_rack,
        npus_per_server=npus_per_server,
        spines=spines,
    )
