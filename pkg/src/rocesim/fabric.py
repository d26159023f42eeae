"""Switch and link dataplane: network assembly over the compiled kernel.

``Network`` turns a :class:`~rocesim.topology.Topology` plus fabric/CC
parameters into the kernel's array state: one directed egress port per
link, shared-buffer switches with ECN thresholds scaled to link rate, PFC
thresholds, and the pools for packets, flows, send-ops and dependency
groups.  It also owns readback of everything the kernel measured: queue
timelines, PAUSE counters, byte conservation and per-op completion times.

Semantics implemented by the kernel (see _kernel.py):

* store-and-forward output-queued switches; a packet occupies the shared
  buffer from arrival until its last bit leaves the egress port;
* ECN marking on DATA when the egress queue exceeds kmin (probabilistic
  up to kmax, certain beyond), thresholds proportional to link rate;
* per-hop telemetry records appended per traversed switch in HPCC mode
  (wire size grows by one record per hop); 8-bit quantized bottleneck
  utilization stamped on every Nth packet in PINT mode (flat 1 B of
  overhead on every DATA packet);
* PFC: per-ingress byte accounting against the shared pool; crossing
  xoff sends PAUSE to that upstream port, falling below xon sends
  RESUME.  ACK/CNP ride a strict-priority control class that PAUSE does
  not stop;
* 64 B ACKs per received DATA packet on the reverse path through the
  same fabric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernel as K
from .errors import SimulationError
from .topology import NodeId, NodeKind, Topology
from .transport import CF_NCOLS, CI_NCOLS, CcParams, MAX_HOPS, VARIANT_NAMES

_INF = 1 << 62


@dataclass
class FabricParams:
    """Dataplane constants; every experiment can retune them via config."""

    mtu_bytes: int = 1000
    header_bytes: int = 48
    ack_bytes: int = 64
    int_record_bytes: int = 16
    pint_extra_bytes: int = 1
    ecn_kmin_bytes: int = 400_000
    ecn_kmax_bytes: int = 1_600_000
    ecn_pmax: float = 0.2
    ecn_ref_bw_bps: int = 200 * 10**9  # thresholds scale linearly with link rate
    pfc_enabled: bool = True
    pfc_xoff_bytes: int = 1_700_000  # 85% of a 2 MB per-ingress share
    pfc_xon_bytes: int | None = None  # default: xoff minus two wire MTUs
    record_timeline: bool = True
    timeline_resolution_ns: int = 1000

    @property
    def wire_mtu(self) -> int:
        return self.mtu_bytes + self.header_bytes

    def xon(self) -> int:
        if self.pfc_xon_bytes is not None:
            return self.pfc_xon_bytes
        return self.pfc_xoff_bytes - 2 * self.wire_mtu


@dataclass
class KernelCapacities:
    heap: int = 1 << 18
    packets: int = 1 << 17
    flows: int = 1 << 15
    ops: int = 1 << 16
    groups: int = 1 << 13
    waiters: int = 1 << 18
    plans: int = 64
    timeline_rows: int = 1 << 21

    def scaled_for(self, max_plan_ops: int, max_plan_groups: int,
                   max_plan_waiters: int, concurrent: int = 2) -> "KernelCapacities":
        """Grow pools to hold ``concurrent`` plans of the given worst size."""
        need_ops = max(self.ops, concurrent * max_plan_ops + 1024)
        need_groups = max(self.groups, concurrent * max_plan_groups + 64)
        need_waiters = max(self.waiters, concurrent * max_plan_waiters + 1024)
        need_flows = max(self.flows, min(need_ops, 1 << 18))
        heap = max(self.heap, 2 * need_flows + (1 << 16))
        return KernelCapacities(
            heap=heap,
            packets=self.packets,
            flows=need_flows,
            ops=need_ops,
            groups=need_groups,
            waiters=need_waiters,
            plans=self.plans,
            timeline_rows=self.timeline_rows,
        )


class _ExtentPool:
    """First-fit free-extent allocator over a fixed-size arena."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._free: list[tuple[int, int]] = [(0, capacity)]  # (start, length)

    def alloc(self, n: int) -> int | None:
        if n == 0:
            return 0
        for i, (start, length) in enumerate(self._free):
            if length >= n:
                if length == n:
                    del self._free[i]
                else:
                    self._free[i] = (start + n, length - n)
                return start
        return None

    def free(self, start: int, n: int) -> None:
        if n == 0:
            return
        self._free.append((start, n))
        self._free.sort()
        merged: list[tuple[int, int]] = []
        for s, ln in self._free:
            if merged and merged[-1][0] + merged[-1][1] == s:
                merged[-1] = (merged[-1][0], merged[-1][1] + ln)
            else:
                merged.append((s, ln))
        self._free = merged

    def available(self, n: int) -> bool:
        return any(length >= n for _, length in self._free)


class PlanRun:
    """A collective plan admitted to the kernel; handles readback/release."""

    def __init__(self, network: "Network", plan, slot: int,
                 op_base: int, group_base: int, waiter_base: int):
        self.network = network
        self.plan = plan
        self.slot = slot
        self.op_base = op_base
        self.group_base = group_base
        self.waiter_base = waiter_base
        self.n_ops = plan.n_ops
        self.start_ns: int = -1
        self.finish_ns: int = -1
        self.released = False

    def flow_records(self) -> np.ndarray:
        """(tag, src, dst, bytes, start_ns, finish_ns) per op, tag-sorted."""
        op = self.network.op_i[self.op_base : self.op_base + self.n_ops]
        rec = np.empty((self.n_ops, 6), dtype=np.int64)
        rec[:, 0] = op[:, K.OP_TAG]
        rec[:, 1] = op[:, K.OP_SRC]
        rec[:, 2] = op[:, K.OP_DST]
        rec[:, 3] = op[:, K.OP_BYTES]
        rec[:, 4] = op[:, K.OP_START]
        rec[:, 5] = op[:, K.OP_FINISH]
        return rec[np.argsort(rec[:, 0], kind="stable")]


_ERR_TEXT = {
    K.ERR_HEAP_FULL: "event heap capacity exhausted",
    K.ERR_PKT_POOL: "packet pool exhausted",
    K.ERR_FL_POOL: "flow pool exhausted",
    K.ERR_BUF_OVERFLOW: "switch shared buffer overflowed with PFC enabled",
    K.ERR_BAD_PATH: "packet ran past the end of its route",
    K.ERR_TIME: "event time ran backwards",
}


class Network:
    """Kernel-backed fabric instance for one simulation run."""

    def __init__(
        self,
        topology: Topology,
        cc_variant: int,
        cc_params: CcParams | None = None,
        fabric_params: FabricParams | None = None,
        seed: int = 1,
        capacities: KernelCapacities | None = None,
    ):
        self.topology = topology
        self.variant = cc_variant
        self.cc_params = cc_params or CcParams()
        self.fp = fabric_params or FabricParams()
        self.caps = capacities or KernelCapacities()
        self.seed = seed
        self._build()

    # -- construction --------------------------------------------------------

    def _build(self) -> None:
        topo = self.topology
        fp = self.fp
        switches = [n for n in topo.nodes if n.kind != NodeKind.NPU]
        self.switch_index = {n: i for i, n in enumerate(switches)}
        self.switch_names = [str(n) for n in switches]
        self.n_switches = len(switches)
        self.n_hosts = topo.n_npus
        self.device_names = self.switch_names + [
            str(NodeId(NodeKind.NPU, h)) for h in range(self.n_hosts)
        ]

        links = list(topo.links.items())
        n_ports = len(links)
        if n_ports >= 1 << 16:
            raise ValueError("too many ports for the packed-path encoding")
        port_of = {pair: i for i, (pair, _) in enumerate(links)}

        ports = np.zeros((n_ports, K.PI_NCOLS), dtype=np.int64)
        ports_pmax = np.zeros(n_ports, dtype=np.float64)
        for i, ((a, b), spec) in enumerate(links):
            ports[i, K.PI_BW] = spec.bandwidth_bps
            ports[i, K.PI_LAT] = spec.latency_ns
            ports[i, K.PI_CUR] = -1
            ports[i, K.PI_QHEAD] = -1
            ports[i, K.PI_QTAIL] = -1
            ports[i, K.PI_CHEAD] = -1
            ports[i, K.PI_CTAIL] = -1
            ports[i, K.PI_RING_HEAD] = -1
            ports[i, K.PI_RING_TAIL] = -1
            ports[i, K.PI_PINT_TS] = -1
            if a.kind == NodeKind.NPU:
                ports[i, K.PI_SW] = -1
                ports[i, K.PI_OWNER_DEV] = self.n_switches + a.index
            else:
                ports[i, K.PI_SW] = self.switch_index[a]
                ports[i, K.PI_OWNER_DEV] = self.switch_index[a]
            if b.kind == NodeKind.NPU:
                ports[i, K.PI_PEER_KIND] = 1
                ports[i, K.PI_PEER] = b.index
                ports[i, K.PI_PEER_DEV] = self.n_switches + b.index
            else:
                ports[i, K.PI_PEER_KIND] = 0
                ports[i, K.PI_PEER] = self.switch_index[b]
                ports[i, K.PI_PEER_DEV] = self.switch_index[b]
            ports[i, K.PI_REV] = port_of[(b, a)]
            scale = spec.bandwidth_bps / fp.ecn_ref_bw_bps
            ports[i, K.PI_KMIN] = int(round(fp.ecn_kmin_bytes * scale))
            ports[i, K.PI_KMAX] = int(round(fp.ecn_kmax_bytes * scale))
            ports_pmax[i] = fp.ecn_pmax
        self.port_of = port_of
        self.n_ports = n_ports

        sw_i = np.zeros((self.n_switches, K.SW_NCOLS), dtype=np.int64)
        sw_i[:, K.SW_BUF] = topo.buffer_bytes
        sw_i[:, K.SW_TL_BUCKET] = -1

        # Host-indexed route fragments for the kernel's path builder.
        nh = self.n_hosts
        host_nic = np.full(nh, -1, dtype=np.int64)
        host_su = np.full(nh, -1, dtype=np.int64)
        host_tor = np.full(nh, -1, dtype=np.int64)
        host_server = np.full(nh, -1, dtype=np.int64)
        tor_to_host = np.full(nh, -1, dtype=np.int64)
        nvsw_to_host = np.full(nh, -1, dtype=np.int64)
        tors = [n for n in switches if n.kind == NodeKind.TOR]
        spines = [n for n in switches if n.kind == NodeKind.SPINE]
        self.tor_nodes = tors
        self.spine_nodes = spines
        tor_ord = {n: i for i, n in enumerate(tors)}
        spine_ord = {n: i for i, n in enumerate(spines)}
        tor_up = np.full((max(len(tors), 1), max(len(spines), 1)), -1, dtype=np.int64)
        spine_down = np.full((max(len(spines), 1), max(len(tors), 1)), -1, dtype=np.int64)
        for (a, b), _spec in links:
            if a.kind == NodeKind.NPU:
                if b.kind == NodeKind.NVSWITCH:
                    host_su[a.index] = port_of[(a, b)]
                    host_server[a.index] = b.index
                else:
                    host_nic[a.index] = port_of[(a, b)]
                    host_tor[a.index] = tor_ord[b]
            elif b.kind == NodeKind.NPU:
                if a.kind == NodeKind.NVSWITCH:
                    nvsw_to_host[b.index] = port_of[(a, b)]
                else:
                    tor_to_host[b.index] = port_of[(a, b)]
            elif a.kind == NodeKind.TOR and b.kind == NodeKind.SPINE:
                tor_up[tor_ord[a], spine_ord[b]] = port_of[(a, b)]
            elif a.kind == NodeKind.SPINE and b.kind == NodeKind.TOR:
                spine_down[spine_ord[a], tor_ord[b]] = port_of[(a, b)]
        host_server[host_server < 0] = 0

        caps = self.caps
        misc = np.zeros(K.MISC_SLOTS, dtype=np.int64)
        misc[K.M_PKT_FREE] = 0
        misc[K.M_FL_FREE] = 0
        misc[K.M_RNG] = (self.seed * 0x9E3779B97F4A7C15 + 0x2545F4914F6CDD1D) & (
            (1 << 63) - 1
        ) | 1

        pk_i = np.zeros((caps.packets, K.PK_NCOLS), dtype=np.int64)
        pk_i[:, K.PK_QNEXT] = np.arange(1, caps.packets + 1)
        pk_i[-1, K.PK_QNEXT] = -1
        int_mode = self.variant == K.HPCC
        pk_int = np.zeros(
            (caps.packets if int_mode else 1, K.INT_FIELDS * MAX_HOPS), dtype=np.int64
        )

        fl_i = np.zeros((caps.flows, K.FL_NCOLS), dtype=np.int64)
        fl_i[:, K.FL_NEXT] = np.arange(1, caps.flows + 1)
        fl_i[-1, K.FL_NEXT] = -1
        fl_i[:, K.FL_OP] = -1
        fl_f = np.zeros((caps.flows, CF_NCOLS), dtype=np.float64)
        fl_ci = np.zeros((caps.flows, CI_NCOLS), dtype=np.int64)
        fl_int = np.zeros(
            (caps.flows if int_mode else 1, 2 * MAX_HOPS), dtype=np.int64
        )

        op_i = np.zeros((caps.ops, K.OP_NCOLS), dtype=np.int64)
        g_cnt = np.zeros(caps.groups, dtype=np.int64)
        g_wstart = np.zeros(caps.groups, dtype=np.int64)
        g_wlen = np.zeros(caps.groups, dtype=np.int64)
        gw_op = np.zeros(caps.waiters, dtype=np.int64)
        pl_i = np.zeros((caps.plans, K.PL_NCOLS), dtype=np.int64)
        done_ring = np.zeros(caps.plans, dtype=np.int64)

        tl_n = caps.timeline_rows if fp.record_timeline else 1
        tl_t = np.zeros(tl_n, dtype=np.int64)
        tl_sw = np.zeros(tl_n, dtype=np.int64)
        tl_b = np.zeros(tl_n, dtype=np.int64)

        line_rate = self._line_rate()
        base_rtt = self.base_rtt_ns()
        self.params_vec = self.cc_params.vector(line_rate, base_rtt, fp.mtu_bytes)

        ki = np.zeros(K.KI_NCOLS, dtype=np.int64)
        ki[K.KI_MTU] = fp.mtu_bytes
        ki[K.KI_HDR] = fp.header_bytes
        ki[K.KI_ACK] = fp.ack_bytes
        ki[K.KI_INTREC] = fp.int_record_bytes
        ki[K.KI_PINT_EXTRA] = fp.pint_extra_bytes
        ki[K.KI_VARIANT] = self.variant
        ki[K.KI_ECN_ON] = 1 if self.variant in (K.DCQCN, K.DCTCP) else 0
        ki[K.KI_INT_ON] = 1 if self.variant == K.HPCC else 0
        ki[K.KI_PINT_ON] = 1 if self.variant == K.HPCC_PINT else 0
        ki[K.KI_PFC_ON] = 1 if fp.pfc_enabled else 0
        ki[K.KI_XOFF] = fp.pfc_xoff_bytes
        ki[K.KI_XON] = fp.xon()
        ki[K.KI_TLRES] = fp.timeline_resolution_ns
        ki[K.KI_TL_ON] = 1 if fp.record_timeline else 0
        ki[K.KI_NSW] = self.n_switches
        ki[K.KI_NHOSTS] = self.n_hosts
        ki[K.KI_NSPINES] = len(spines)
        ki[K.KI_NTORS] = len(tors)
        ki[K.KI_PINT_PERIOD] = max(1, self.cc_params.pint.feedback_period)
        ki[K.KI_DROP_WHEN_FULL] = 0 if fp.pfc_enabled else 1

        self.misc = misc
        self.op_i = op_i
        self.pl_i = pl_i
        self.sw_i = sw_i
        self.ports_i = ports
        self.tl = (tl_t, tl_sw, tl_b)
        self.st = (
            misc,
            np.zeros(caps.heap, dtype=np.int64),
            np.zeros(caps.heap, dtype=np.int64),
            np.zeros(caps.heap, dtype=np.int64),
            np.zeros(caps.heap, dtype=np.int64),
            np.zeros(caps.heap, dtype=np.int64),
            ports,
            ports_pmax,
            sw_i,
            np.zeros(self.n_switches + self.n_hosts, dtype=np.int64),
            np.zeros(self.n_switches + self.n_hosts, dtype=np.int64),
            tl_t,
            tl_sw,
            tl_b,
            pk_i,
            pk_int,
            op_i,
            fl_i,
            fl_f,
            fl_ci,
            fl_int,
            g_cnt,
            g_wstart,
            g_wlen,
            gw_op,
            pl_i,
            host_nic,
            host_su,
            host_tor,
            host_server,
            tor_to_host,
            nvsw_to_host,
            tor_up,
            spine_down,
            self.params_vec,
            ki,
            done_ring,
        )
        self._op_pool = _ExtentPool(caps.ops)
        self._group_pool = _ExtentPool(caps.groups)
        self._waiter_pool = _ExtentPool(caps.waiters)
        self._plan_slots = list(range(caps.plans))
        self._active_plans: dict[int, PlanRun] = {}

    def _line_rate(self) -> int:
        topo = self.topology
        for (a, b), spec in topo.links.items():
            if a.kind == NodeKind.NPU and b.kind != NodeKind.NVSWITCH:
                return spec.bandwidth_bps
        raise ValueError("topology has no NPU NIC links")

    def base_rtt_ns(self) -> int:
        """Propagation plus serialization along the longest configured path,
        for one full-size DATA packet out and one ACK back."""
        topo = self.topology
        fp = self.fp
        from .topology import FlowKey

        # NPU 0 to the last NPU crosses racks whenever the fabric has them.
        nodes = topo.route(FlowKey(topo.npu(0), topo.npu(topo.n_npus - 1), 0))
        rtt = 0.0
        for a, b in zip(nodes, nodes[1:]):
            fwd = topo.links[(a, b)]
            rev = topo.links[(b, a)]
            rtt += fwd.latency_ns + fp.wire_mtu * 8e9 / fwd.bandwidth_bps
            rtt += rev.latency_ns + fp.ack_bytes * 8e9 / rev.bandwidth_bps
        return int(round(rtt))

    # -- plan admission --------------------------------------------------------

    def can_admit(self, plan) -> bool:
        return (
            bool(self._plan_slots)
            and self._op_pool.available(plan.n_ops)
            and self._group_pool.available(plan.n_groups)
            and self._waiter_pool.available(len(plan.waiter_ops))
        )

    def add_plan(self, plan) -> PlanRun | None:
        """Admit a collective plan; returns None when pools are full."""
        if not self.can_admit(plan):
            return None
        op_base = self._op_pool.alloc(plan.n_ops)
        group_base = self._group_pool.alloc(plan.n_groups)
        waiter_base = self._waiter_pool.alloc(len(plan.waiter_ops))
        slot = self._plan_slots.pop(0)
        now = int(self.misc[K.M_NOW])

        sl = slice(op_base, op_base + plan.n_ops)
        op = self.op_i
        op[sl, K.OP_SRC] = plan.op_src
        op[sl, K.OP_DST] = plan.op_dst
        op[sl, K.OP_BYTES] = plan.op_bytes
        op[sl, K.OP_TAG] = plan.op_tag
        op[sl, K.OP_PENDING] = plan.op_pending
        for col, dep in ((K.OP_MG0, 0), (K.OP_MG1, 1), (K.OP_MG2, 2)):
            g = plan.op_groups[:, dep].astype(np.int64)
            op[sl, col] = np.where(g >= 0, g + group_base, -1)
        op[sl, K.OP_PLAN] = slot
        op[sl, K.OP_SPINE] = plan.op_spine
        op[sl, K.OP_VIA] = plan.op_via
        op[sl, K.OP_START] = -1
        op[sl, K.OP_FINISH] = -1
        op[sl, K.OP_STATE] = K.OP_WAITING
        op[sl, K.OP_FLOW] = -1

        gsl = slice(group_base, group_base + plan.n_groups)
        self.st[K.ST_G_CNT][gsl] = plan.group_counts
        self.st[K.ST_G_WSTART][gsl] = plan.group_wstart + waiter_base
        self.st[K.ST_G_WLEN][gsl] = plan.group_wlen
        self.st[K.ST_GW_OP][
            waiter_base : waiter_base + len(plan.waiter_ops)
        ] = plan.waiter_ops + op_base

        self.pl_i[slot, K.PL_REMAINING] = plan.n_ops
        self.pl_i[slot, K.PL_STATE] = 1
        self.pl_i[slot, K.PL_START] = now
        self.pl_i[slot, K.PL_FINISH] = -1

        run = PlanRun(self, plan, slot, op_base, group_base, waiter_base)
        run.start_ns = now
        self._active_plans[slot] = run
        K.launch_ready_ops(self.st, op_base, plan.n_ops, now)
        self._check_error()
        return run

    def release_plan(self, run: PlanRun) -> None:
        if run.released:
            return
        self._op_pool.free(run.op_base, run.n_ops)
        self._group_pool.free(run.group_base, run.plan.n_groups)
        self._waiter_pool.free(run.waiter_base, len(run.plan.waiter_ops))
        self.pl_i[run.slot, K.PL_STATE] = 0
        self._plan_slots.append(run.slot)
        self._plan_slots.sort()
        del self._active_plans[run.slot]
        run.released = True

    # -- running ----------------------------------------------------------------

    def run(self, until: int | None = None, stop_on_plan_done: bool = True):
        """Advance the dataplane; returns (now, status, completed PlanRuns)."""
        limit = _INF if until is None else until
        status = K.run(self.st, limit, 1 if stop_on_plan_done else 0)
        self._check_error()
        done: list[PlanRun] = []
        n_done = int(self.misc[K.M_DONE_N])
        for i in range(n_done):
            slot = int(self.st[K.ST_DONE][i])
            run = self._active_plans[slot]
            run.finish_ns = int(self.pl_i[slot, K.PL_FINISH])
            done.append(run)
        self.misc[K.M_DONE_N] = 0
        return int(self.misc[K.M_NOW]), status, done

    def _check_error(self) -> None:
        code = int(self.misc[K.M_ERR])
        if code:
            detail = _ERR_TEXT.get(code, f"kernel error {code}")
            arg = int(self.misc[K.M_ERR_ARG])
            raise SimulationError(f"{detail} (arg={arg}, t={int(self.misc[K.M_NOW])})")

    @property
    def now_ns(self) -> int:
        return int(self.misc[K.M_NOW])

    def next_event_time(self) -> int | None:
        if self.misc[K.M_HEAP_N] == 0:
            return None
        return int(self.st[K.ST_HP_T][0])

    # -- measurements --------------------------------------------------------------

    @property
    def injected_payload_bytes(self) -> int:
        return int(self.misc[K.M_INJ_PAYLOAD])

    @property
    def delivered_payload_bytes(self) -> int:
        return int(self.misc[K.M_DLV_PAYLOAD])

    @property
    def dropped_packets(self) -> int:
        return int(self.misc[K.M_DROPS])

    @property
    def duplicate_acks(self) -> int:
        return int(self.misc[K.M_DUP_ACKS])

    @property
    def events_processed(self) -> int:
        return int(self.misc[K.M_EVENTS])

    @property
    def ecn_marks(self) -> int:
        return int(self.misc[K.M_ECN_MARKS])

    @property
    def data_packets_delivered(self) -> int:
        return int(self.misc[K.M_DATA_DELIVERED])

    @property
    def telemetry_records_delivered(self) -> int:
        return int(self.misc[K.M_INT_RECORDS_DELIVERED])

    def pause_counts(self) -> dict[str, tuple[int, int]]:
        """device name -> (pause_frames_sent, pause_frames_received)."""
        sent = self.st[K.ST_PAUSE_SENT]
        rcvd = self.st[K.ST_PAUSE_RCVD]
        return {
            name: (int(sent[i]), int(rcvd[i]))
            for i, name in enumerate(self.device_names)
        }

    def total_pause_frames(self) -> int:
        return int(self.st[K.ST_PAUSE_SENT].sum())

    def peak_queue_bytes(self) -> int:
        if self.n_switches == 0:
            return 0
        return int(self.sw_i[:, K.SW_PEAK].max())

    def switch_peaks(self) -> dict[str, int]:
        return {
            name: int(self.sw_i[i, K.SW_PEAK])
            for i, name in enumerate(self.switch_names)
        }

    def queue_timeline(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(time_ns, switch_index, max_queue_bytes) rows, time-ordered."""
        K.flush_timelines(self.st)
        self._check_error()
        n = int(self.misc[K.M_TL_N])
        t, sw, b = self.tl
        order = np.lexsort((sw[:n], t[:n]))
        return t[:n][order], sw[:n][order], b[:n][order]

    @property
    def timeline_overflowed(self) -> bool:
        return bool(self.misc[K.M_TL_OVF])

    def assert_conserved(self) -> None:
        """With PFC on, every injected payload byte must have been delivered."""
        if self.misc[K.M_FL_INUSE] != 0:
            raise SimulationError(
                f"{int(self.misc[K.M_FL_INUSE])} flows still active"
            )
        if self.fp.pfc_enabled and self.dropped_packets:
            raise SimulationError(f"{self.dropped_packets} drops with PFC enabled")
        if self.injected_payload_bytes != self.delivered_payload_bytes:
            raise SimulationError(
                f"byte conservation violated: injected "
                f"{self.injected_payload_bytes} != delivered "
                f"{self.delivered_payload_bytes}"
            )

    def describe(self) -> str:
        return (
            f"{self.topology.kind} fabric, {self.n_hosts} NPUs, "
            f"{self.n_switches} switches, cc={VARIANT_NAMES[self.variant]}"
        )
