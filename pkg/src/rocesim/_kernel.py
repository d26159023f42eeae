"""Compiled packet dataplane.

Everything per-packet lives here: the event heap, store-and-forward ports,
shared-buffer switches with ECN marking / telemetry stamping / PFC
PAUSE-RESUME, end-host packet emission and ACK processing, and the launch
graph that releases point-to-point sends when their dependency groups
complete.  The control plane (topology construction, collective planning,
the training-loop clock, reporting) stays in plain Python and exchanges
numpy arrays with this module.

State is a single tuple of preallocated numpy arrays; the ``ST_*``,
column and event constants below define the layout.  All functions are
numba-compiled; setting ``NUMBA_DISABLE_JIT=1`` runs them as pure Python
for debugging.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .transport import (
    CF_NEXT_EMIT,
    CF_RATE,
    CF_WINDOW,
    CI_LASTUPD_SEQ,
    CI_PREV_INT,
    CI_WACK,
    CI_WBYTES,
    CI_WMARK,
    DCQCN,
    DCTCP,
    HPCC,
    HPCC_PINT,
    INT_FIELDS,
    MAX_HOPS,
    PP_BASE_RTT,
    PP_DCQCN_ALPHA_TIMER,
    PP_DCQCN_CNP_INTERVAL,
    PP_LINE_RATE,
    PP_PINT_PERIOD,
    TIMELY,
    cc_init,
    dcqcn_on_bytes_sent,
    dcqcn_on_cnp,
    dcqcn_on_timer,
    dctcp_on_ack_window,
    hpcc_remember_stack,
    hpcc_utilization,
    hpcc_window_update,
    pint_on_ack,
    pint_quantize,
    timely_on_rtt,
)

# --- state tuple layout -----------------------------------------------------
ST_MISC = 0
ST_HP_T = 1
ST_HP_S = 2
ST_HP_K = 3
ST_HP_A = 4
ST_HP_B = 5
ST_PORT = 6
ST_PORT_PMAX = 7
ST_SW = 8
ST_PAUSE_SENT = 9
ST_PAUSE_RCVD = 10
ST_TL_T = 11
ST_TL_SW = 12
ST_TL_B = 13
ST_PK = 14
ST_PK_INT = 15
ST_OP = 16
ST_FL = 17
ST_FL_F = 18
ST_FL_CI = 19
ST_FL_INT = 20
ST_G_CNT = 21
ST_G_WSTART = 22
ST_G_WLEN = 23
ST_GW_OP = 24
ST_PL = 25
ST_HOST_NIC = 26
ST_HOST_SU = 27
ST_HOST_TOR = 28
ST_HOST_SERVER = 29
ST_TOR_TO_HOST = 30
ST_NVSW_TO_HOST = 31
ST_TOR_UP = 32
ST_SPINE_DOWN = 33
ST_P = 34
ST_KI = 35
ST_DONE = 36

# --- misc scalar slots -------------------------------------------------------
M_HEAP_N = 0
M_SEQ = 1
M_NOW = 2
M_PKT_FREE = 3
M_FL_FREE = 4
M_ERR = 5
M_ERR_ARG = 6
M_DONE_N = 7
M_TL_N = 8
M_TL_OVF = 9
M_RNG = 10
M_INJ_PAYLOAD = 11
M_DLV_PAYLOAD = 12
M_DROPS = 13
M_DUP_ACKS = 14
M_PKT_INUSE = 15
M_PKT_HW = 16
M_FL_INUSE = 17
M_FL_HW = 18
M_EVENTS = 19
M_ECN_MARKS = 20
M_DATA_DELIVERED = 21
M_INT_RECORDS_DELIVERED = 22
MISC_SLOTS = 24

# --- event kinds --------------------------------------------------------------
EV_TXDONE = 0
EV_ARRIVAL = 1
EV_TIMER = 2
EV_READY = 3
EV_PAUSE = 4

# --- port columns --------------------------------------------------------------
PI_BW = 0
PI_LAT = 1
PI_CARRY = 2
PI_BUSY = 3
PI_PAUSED = 4
PI_CUR = 5
PI_QHEAD = 6
PI_QTAIL = 7
PI_CHEAD = 8
PI_CTAIL = 9
PI_DEPTH = 10
PI_TXBYTES = 11
PI_SW = 12          # owner switch index, -1 for host ports
PI_OWNER_DEV = 13
PI_PEER_KIND = 14   # 0 = switch, 1 = host
PI_PEER = 15        # peer switch index or host index
PI_PEER_DEV = 16
PI_REV = 17         # reverse-direction port
PI_BACKLOG = 18     # bytes buffered downstream that arrived via this port
PI_PAUSE_FLAG = 19  # downstream currently holds this port paused
PI_RING_HEAD = 20   # host ports: ready-flow ring
PI_RING_TAIL = 21
PI_KMIN = 22
PI_KMAX = 23
PI_PINT_TS = 24
PI_PINT_TXB = 25
PI_PINT_UTX = 26   # cached tx-utilization term, in millionths
PI_NCOLS = 27

# --- switch columns ------------------------------------------------------------
SW_OCC = 0
SW_BUF = 1
SW_PEAK = 2
SW_TL_BUCKET = 3
SW_TL_MAX = 4
SW_NCOLS = 5

# --- packet columns ------------------------------------------------------------
PK_FLOW = 0
PK_KIND = 1      # 0 data, 1 ack, 2 cnp
PK_SIZE = 2      # wire bytes
PK_PAYLOAD = 3
PK_CUM = 4       # ack: cumulative acked payload bytes
PK_SENDTS = 5    # data send time, echoed on the ack
PK_ECN = 6       # mark on data; echo on ack
PK_HOP = 7
PK_INGRESS = 8
PK_QNEXT = 9
PK_INTN = 10
PK_PINT = 11     # -1 not carrying; >= 0 quantized bottleneck utilization
PK_NCOLS = 12

KIND_DATA = 0
KIND_ACK = 1
KIND_CNP = 2

# --- op (one point-to-point send) columns ---------------------------------------
OP_SRC = 0
OP_DST = 1
OP_BYTES = 2
OP_TAG = 3
OP_PENDING = 4
OP_MG0 = 5
OP_MG1 = 6
OP_MG2 = 7
OP_PLAN = 8
OP_SPINE = 9
OP_START = 10
OP_FINISH = 11
OP_STATE = 12    # 0 free, 1 waiting, 2 active, 3 done
OP_FLOW = 13
OP_VIA = 14      # 0 scale-out (NIC), 1 scale-up (intra-server switch)
OP_NCOLS = 15

OP_FREE = 0
OP_WAITING = 1
OP_ACTIVE = 2
OP_DONE = 3

# --- active flow columns ----------------------------------------------------------
FL_OP = 0
FL_SENT = 1
FL_ACKED = 2
FL_RCVD = 3
FL_PKTS = 4
FL_DUPS = 5
FL_LAST_CNP = 6
FL_NEXT = 7
FL_IN_RING = 8
FL_PORT = 9
FL_FPATH = 10    # four 16-bit egress port ids packed little-endian
FL_RPATH = 11
FL_FPLEN = 12
FL_RPLEN = 13
FL_WAKE = 14     # a pacing wake-up event is pending
FL_NCOLS = 15

# --- plan columns -------------------------------------------------------------------
PL_REMAINING = 0
PL_STATE = 1
PL_START = 2
PL_FINISH = 3
PL_NCOLS = 4

# --- int knobs (ki vector) ------------------------------------------------------------
KI_MTU = 0
KI_HDR = 1
KI_ACK = 2
KI_INTREC = 3
KI_PINT_EXTRA = 4
KI_VARIANT = 5
KI_ECN_ON = 6
KI_INT_ON = 7
KI_PINT_ON = 8
KI_PFC_ON = 9
KI_XOFF = 10
KI_XON = 11
KI_TLRES = 12
KI_TL_ON = 13
KI_NSW = 14
KI_NHOSTS = 15
KI_NSPINES = 16
KI_NTORS = 17
KI_PINT_PERIOD = 18
KI_DROP_WHEN_FULL = 19
KI_NCOLS = 20

# --- error codes -----------------------------------------------------------------------
ERR_HEAP_FULL = 1
ERR_PKT_POOL = 2
ERR_FL_POOL = 3
ERR_BUF_OVERFLOW = 4
ERR_BAD_PATH = 5
ERR_TIME = 6

RUN_LIMIT = 0
RUN_PLAN_DONE = 1
RUN_IDLE = 2

_INF = 1 << 62


# --- heap --------------------------------------------------------------------

@njit(cache=True)
def _push(st, t, k, a, b):
    misc = st[ST_MISC]
    hp_t = st[ST_HP_T]
    n = misc[M_HEAP_N]
    if n >= hp_t.shape[0]:
        misc[M_ERR] = ERR_HEAP_FULL
        return
    hp_s = st[ST_HP_S]
    hp_k = st[ST_HP_K]
    hp_a = st[ST_HP_A]
    hp_b = st[ST_HP_B]
    s = misc[M_SEQ]
    misc[M_SEQ] = s + 1
    hp_t[n] = t
    hp_s[n] = s
    hp_k[n] = k
    hp_a[n] = a
    hp_b[n] = b
    i = n
    while i > 0:
        p = (i - 1) >> 1
        if hp_t[p] > hp_t[i] or (hp_t[p] == hp_t[i] and hp_s[p] > hp_s[i]):
            hp_t[p], hp_t[i] = hp_t[i], hp_t[p]
            hp_s[p], hp_s[i] = hp_s[i], hp_s[p]
            hp_k[p], hp_k[i] = hp_k[i], hp_k[p]
            hp_a[p], hp_a[i] = hp_a[i], hp_a[p]
            hp_b[p], hp_b[i] = hp_b[i], hp_b[p]
            i = p
        else:
            break
    misc[M_HEAP_N] = n + 1


@njit(cache=True)
def _pop(st):
    misc = st[ST_MISC]
    hp_t = st[ST_HP_T]
    hp_s = st[ST_HP_S]
    hp_k = st[ST_HP_K]
    hp_a = st[ST_HP_A]
    hp_b = st[ST_HP_B]
    t = hp_t[0]
    k = hp_k[0]
    a = hp_a[0]
    b = hp_b[0]
    n = misc[M_HEAP_N] - 1
    misc[M_HEAP_N] = n
    hp_t[0] = hp_t[n]
    hp_s[0] = hp_s[n]
    hp_k[0] = hp_k[n]
    hp_a[0] = hp_a[n]
    hp_b[0] = hp_b[n]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= n:
            break
        m = l
        r = l + 1
        if r < n and (hp_t[r] < hp_t[l] or (hp_t[r] == hp_t[l] and hp_s[r] < hp_s[l])):
            m = r
        if hp_t[m] < hp_t[i] or (hp_t[m] == hp_t[i] and hp_s[m] < hp_s[i]):
            hp_t[i], hp_t[m] = hp_t[m], hp_t[i]
            hp_s[i], hp_s[m] = hp_s[m], hp_s[i]
            hp_k[i], hp_k[m] = hp_k[m], hp_k[i]
            hp_a[i], hp_a[m] = hp_a[m], hp_a[i]
            hp_b[i], hp_b[m] = hp_b[m], hp_b[i]
            i = m
        else:
            break
    return t, k, a, b


@njit(cache=True)
def _rng01(misc):
    # xorshift64*; value in [0, 1)
    x = misc[M_RNG]
    x ^= x >> 12
    x ^= (x << 25) & 0x7FFFFFFFFFFFFFFF
    x ^= x >> 27
    misc[M_RNG] = x
    return ((x * 0x2545F4914F6CDD1D) & 0x7FFFFFFFFFFFFFFF) / 9.223372036854776e18


# --- pools ---------------------------------------------------------------------

@njit(cache=True)
def _alloc_pkt(st):
    misc = st[ST_MISC]
    head = misc[M_PKT_FREE]
    if head < 0:
        misc[M_ERR] = ERR_PKT_POOL
        return -1
    pk = st[ST_PK]
    misc[M_PKT_FREE] = pk[head, PK_QNEXT]
    misc[M_PKT_INUSE] += 1
    if misc[M_PKT_INUSE] > misc[M_PKT_HW]:
        misc[M_PKT_HW] = misc[M_PKT_INUSE]
    pk[head, PK_QNEXT] = -1
    return head


@njit(cache=True)
def _free_pkt(st, pkt):
    misc = st[ST_MISC]
    pk = st[ST_PK]
    pk[pkt, PK_QNEXT] = misc[M_PKT_FREE]
    misc[M_PKT_FREE] = pkt
    misc[M_PKT_INUSE] -= 1


@njit(cache=True)
def _alloc_flow(st):
    misc = st[ST_MISC]
    head = misc[M_FL_FREE]
    if head < 0:
        misc[M_ERR] = ERR_FL_POOL
        return -1
    fl = st[ST_FL]
    misc[M_FL_FREE] = fl[head, FL_NEXT]
    misc[M_FL_INUSE] += 1
    if misc[M_FL_INUSE] > misc[M_FL_HW]:
        misc[M_FL_HW] = misc[M_FL_INUSE]
    return head


@njit(cache=True)
def _free_flow(st, f):
    misc = st[ST_MISC]
    fl = st[ST_FL]
    fl[f, FL_OP] = -1
    fl[f, FL_NEXT] = misc[M_FL_FREE]
    misc[M_FL_FREE] = f
    misc[M_FL_INUSE] -= 1


# --- ready ring (host egress ports) ---------------------------------------------

@njit(cache=True)
def _ring_append(st, port, f):
    ports = st[ST_PORT]
    fl = st[ST_FL]
    fl[f, FL_NEXT] = -1
    fl[f, FL_IN_RING] = 1
    tail = ports[port, PI_RING_TAIL]
    if tail < 0:
        ports[port, PI_RING_HEAD] = f
    else:
        fl[tail, FL_NEXT] = f
    ports[port, PI_RING_TAIL] = f


@njit(cache=True)
def _ring_pop(st, port):
    ports = st[ST_PORT]
    fl = st[ST_FL]
    head = ports[port, PI_RING_HEAD]
    if head < 0:
        return -1
    nxt = fl[head, FL_NEXT]
    ports[port, PI_RING_HEAD] = nxt
    if nxt < 0:
        ports[port, PI_RING_TAIL] = -1
    fl[head, FL_NEXT] = -1
    fl[head, FL_IN_RING] = 0
    return head


# --- telemetry -------------------------------------------------------------------

@njit(cache=True)
def _record_tl(st, sw, t):
    ki = st[ST_KI]
    if ki[KI_TL_ON] == 0:
        return
    misc = st[ST_MISC]
    sw_i = st[ST_SW]
    occ = sw_i[sw, SW_OCC]
    res = ki[KI_TLRES]
    bucket = t // res
    last = sw_i[sw, SW_TL_BUCKET]
    if bucket != last:
        if last >= 0 and misc[M_TL_OVF] == 0:
            n = misc[M_TL_N]
            tl_t = st[ST_TL_T]
            if n >= tl_t.shape[0]:
                misc[M_TL_OVF] = 1
            else:
                tl_t[n] = last * res
                st[ST_TL_SW][n] = sw
                st[ST_TL_B][n] = sw_i[sw, SW_TL_MAX]
                misc[M_TL_N] = n + 1
        sw_i[sw, SW_TL_BUCKET] = bucket
        sw_i[sw, SW_TL_MAX] = occ
    elif occ > sw_i[sw, SW_TL_MAX]:
        sw_i[sw, SW_TL_MAX] = occ


@njit(cache=True)
def flush_timelines(st):
    """Emit the trailing bucket of every switch (call once, after a run)."""
    misc = st[ST_MISC]
    ki = st[ST_KI]
    sw_i = st[ST_SW]
    if ki[KI_TL_ON] == 0:
        return
    res = ki[KI_TLRES]
    for sw in range(sw_i.shape[0]):
        last = sw_i[sw, SW_TL_BUCKET]
        if last >= 0 and misc[M_TL_OVF] == 0:
            n = misc[M_TL_N]
            if n >= st[ST_TL_T].shape[0]:
                misc[M_TL_OVF] = 1
            else:
                st[ST_TL_T][n] = last * res
                st[ST_TL_SW][n] = sw
                st[ST_TL_B][n] = sw_i[sw, SW_TL_MAX]
                misc[M_TL_N] = n + 1
        sw_i[sw, SW_TL_BUCKET] = -1
        sw_i[sw, SW_TL_MAX] = 0


# --- transmission -----------------------------------------------------------------

@njit(cache=True)
def _emit_packet(st, f, port, t):
    """Create the next DATA packet of an active flow (host pull path)."""
    misc = st[ST_MISC]
    ki = st[ST_KI]
    fl = st[ST_FL]
    fl_f = st[ST_FL_F]
    pkt = _alloc_pkt(st)
    if pkt < 0:
        return -1
    pk = st[ST_PK]
    mtu = ki[KI_MTU]
    op = fl[f, FL_OP]
    total = st[ST_OP][op, OP_BYTES]
    remaining = total - fl[f, FL_SENT]
    payload = mtu if remaining > mtu else remaining
    size = payload + ki[KI_HDR]
    if ki[KI_PINT_ON] != 0:
        size += ki[KI_PINT_EXTRA]
    pk[pkt, PK_FLOW] = f
    pk[pkt, PK_KIND] = KIND_DATA
    pk[pkt, PK_SIZE] = size
    pk[pkt, PK_PAYLOAD] = payload
    pk[pkt, PK_CUM] = 0
    pk[pkt, PK_SENDTS] = t
    pk[pkt, PK_ECN] = 0
    pk[pkt, PK_HOP] = 1  # hop 0 is this host port
    pk[pkt, PK_INGRESS] = -1
    pk[pkt, PK_INTN] = 0
    fl[f, FL_PKTS] += 1
    if ki[KI_PINT_ON] != 0 and fl[f, FL_PKTS] % ki[KI_PINT_PERIOD] == 0:
        pk[pkt, PK_PINT] = 0
    else:
        pk[pkt, PK_PINT] = -1
    fl[f, FL_SENT] += payload
    misc[M_INJ_PAYLOAD] += payload
    # pacing: rate-based variants (and HPCC's derived rate) space packets
    # by wire-size/rate; at full line rate the NIC serializer is the clock.
    variant = ki[KI_VARIANT]
    if variant == DCQCN:
        dcqcn_on_bytes_sent(
            fl_f[f], st[ST_FL_CI][f], st[ST_P], fl[f, FL_SENT]
        )
    if variant != DCTCP:
        rate = fl_f[f, CF_RATE]
        if rate < st[ST_P][PP_LINE_RATE]:
            gap = size * 8.0e9 / rate
            base = fl_f[f, CF_NEXT_EMIT]
            if t > base:
                base = t
            fl_f[f, CF_NEXT_EMIT] = base + gap
        else:
            fl_f[f, CF_NEXT_EMIT] = t
    return pkt


@njit(cache=True)
def _flow_emittable(st, f, t):
    """0 = emit now, 1 = window closed (drop from ring), 2 = paced (wake later)."""
    ki = st[ST_KI]
    fl = st[ST_FL]
    variant = ki[KI_VARIANT]
    if variant == DCTCP or variant == HPCC or variant == HPCC_PINT:
        if fl[f, FL_SENT] - fl[f, FL_ACKED] >= st[ST_FL_F][f, CF_WINDOW]:
            return 1
    if variant != DCTCP:
        if st[ST_FL_F][f, CF_NEXT_EMIT] > t:
            return 2
    return 0


@njit(cache=True)
def _start_tx(st, port, t):
    """If idle, pick the next packet (control first) and serialize it."""
    ports = st[ST_PORT]
    if ports[port, PI_BUSY] != 0:
        return
    pk = st[ST_PK]
    fl = st[ST_FL]
    pkt = ports[port, PI_CHEAD]
    if pkt >= 0:
        ports[port, PI_CHEAD] = pk[pkt, PK_QNEXT]
        if ports[port, PI_CHEAD] < 0:
            ports[port, PI_CTAIL] = -1
    elif ports[port, PI_PAUSED] != 0:
        return
    else:
        pkt = ports[port, PI_QHEAD]
        if pkt >= 0:
            ports[port, PI_QHEAD] = pk[pkt, PK_QNEXT]
            if ports[port, PI_QHEAD] < 0:
                ports[port, PI_QTAIL] = -1
        elif ports[port, PI_SW] < 0:
            # host port: pull the next ready flow (round-robin)
            while True:
                f = _ring_pop(st, port)
                if f < 0:
                    return
                op = fl[f, FL_OP]
                if (
                    op < 0
                    or st[ST_OP][op, OP_STATE] != OP_ACTIVE
                    or fl[f, FL_SENT] >= st[ST_OP][op, OP_BYTES]
                ):
                    continue  # stale ring entry
                status = _flow_emittable(st, f, t)
                if status == 1:
                    continue  # window closed; the next ack re-adds it
                if status == 2:
                    if fl[f, FL_WAKE] == 0:
                        fl[f, FL_WAKE] = 1
                        wake = int(np.ceil(st[ST_FL_F][f, CF_NEXT_EMIT]))
                        _push(st, wake, EV_READY, f, fl[f, FL_OP])
                    continue
                pkt = _emit_packet(st, f, port, t)
                if pkt < 0:
                    return
                op = fl[f, FL_OP]
                if fl[f, FL_SENT] < st[ST_OP][op, OP_BYTES]:
                    nxt = _flow_emittable(st, f, t)
                    if nxt == 0:
                        _ring_append(st, port, f)
                    elif nxt == 2:
                        wake = int(np.ceil(st[ST_FL_F][f, CF_NEXT_EMIT]))
                        _push(st, wake, EV_READY, f, op)
                break
        else:
            return
    if pkt < 0:
        return
    size = pk[pkt, PK_SIZE]
    num = size * 8_000_000_000 + ports[port, PI_CARRY]
    bw = ports[port, PI_BW]
    ser = num // bw
    ports[port, PI_CARRY] = num - ser * bw
    ports[port, PI_BUSY] = 1
    ports[port, PI_CUR] = pkt
    ports[port, PI_TXBYTES] += size
    _push(st, t + ser, EV_TXDONE, port, 0)
    _push(st, t + ser + ports[port, PI_LAT], EV_ARRIVAL, pkt, port)


@njit(cache=True)
def _txdone(st, port, t):
    ports = st[ST_PORT]
    pkt = ports[port, PI_CUR]
    ports[port, PI_BUSY] = 0
    ports[port, PI_CUR] = -1
    if pkt < 0:
        return
    sw = ports[port, PI_SW]
    if sw >= 0:
        pk = st[ST_PK]
        size = pk[pkt, PK_SIZE]
        sw_i = st[ST_SW]
        sw_i[sw, SW_OCC] -= size
        ports[port, PI_DEPTH] -= size
        ingress = pk[pkt, PK_INGRESS]
        if ingress >= 0:
            iports = st[ST_PORT]
            iports[ingress, PI_BACKLOG] -= size
            if (
                iports[ingress, PI_PAUSE_FLAG] != 0
                and iports[ingress, PI_BACKLOG] < st[ST_KI][KI_XON]
            ):
                iports[ingress, PI_PAUSE_FLAG] = 0
                rev = iports[ingress, PI_REV]
                _push(st, t + iports[rev, PI_LAT], EV_PAUSE, ingress, 0)
        _record_tl(st, sw, t)
    _start_tx(st, port, t)


# --- switch dataplane ----------------------------------------------------------

@njit(cache=True)
def _switch_arrival(st, pkt, t, ingress, sw):
    misc = st[ST_MISC]
    ki = st[ST_KI]
    pk = st[ST_PK]
    fl = st[ST_FL]
    ports = st[ST_PORT]
    f = pk[pkt, PK_FLOW]
    hop = pk[pkt, PK_HOP]
    if pk[pkt, PK_KIND] == KIND_DATA:
        path = fl[f, FL_FPATH]
        plen = fl[f, FL_FPLEN]
    else:
        path = fl[f, FL_RPATH]
        plen = fl[f, FL_RPLEN]
    if hop >= plen:
        misc[M_ERR] = ERR_BAD_PATH
        misc[M_ERR_ARG] = pkt
        return
    egress = (path >> (16 * hop)) & 0xFFFF
    pk[pkt, PK_HOP] = hop + 1

    size = pk[pkt, PK_SIZE]
    is_data = pk[pkt, PK_KIND] == KIND_DATA
    if is_data:
        if ki[KI_ECN_ON] != 0:
            depth = ports[egress, PI_DEPTH]
            kmin = ports[egress, PI_KMIN]
            if depth > kmin:
                kmax = ports[egress, PI_KMAX]
                if depth >= kmax:
                    pk[pkt, PK_ECN] = 1
                    misc[M_ECN_MARKS] += 1
                else:
                    pmax = st[ST_PORT_PMAX][egress]
                    prob = pmax * (depth - kmin) / (kmax - kmin)
                    if _rng01(misc) < prob:
                        pk[pkt, PK_ECN] = 1
                        misc[M_ECN_MARKS] += 1
        if ki[KI_INT_ON] != 0:
            n = pk[pkt, PK_INTN]
            if n < MAX_HOPS:
                row = st[ST_PK_INT]
                base = INT_FIELDS * n
                row[pkt, base] = t
                row[pkt, base + 1] = ports[egress, PI_DEPTH]
                row[pkt, base + 2] = ports[egress, PI_TXBYTES]
                row[pkt, base + 3] = ports[egress, PI_BW]
                pk[pkt, PK_INTN] = n + 1
                pk[pkt, PK_SIZE] = size + ki[KI_INTREC]
                size = pk[pkt, PK_SIZE]
        elif ki[KI_PINT_ON] != 0 and pk[pkt, PK_PINT] >= 0:
            bw = ports[egress, PI_BW]
            base_rtt = st[ST_P][PP_BASE_RTT]
            u = ports[egress, PI_DEPTH] * 8.0e9 / (bw * base_rtt)
            # refresh the tx-rate term only over a meaningful window;
            # per-packet deltas are too noisy to steer a window on
            last_ts = ports[egress, PI_PINT_TS]
            min_window = int(base_rtt) // 4 + 1
            if last_ts < 0:
                ports[egress, PI_PINT_TS] = t
                ports[egress, PI_PINT_TXB] = ports[egress, PI_TXBYTES]
            elif t - last_ts >= min_window:
                dbytes = ports[egress, PI_TXBYTES] - ports[egress, PI_PINT_TXB]
                utx = (dbytes * 8.0e9 / (t - last_ts)) / bw
                ports[egress, PI_PINT_UTX] = int(utx * 1e6)
                ports[egress, PI_PINT_TS] = t
                ports[egress, PI_PINT_TXB] = ports[egress, PI_TXBYTES]
            u += ports[egress, PI_PINT_UTX] / 1e6
            code = pint_quantize(u)
            if code > pk[pkt, PK_PINT]:
                pk[pkt, PK_PINT] = code

    sw_i = st[ST_SW]
    if sw_i[sw, SW_OCC] + size > sw_i[sw, SW_BUF]:
        if ki[KI_DROP_WHEN_FULL] != 0:
            misc[M_DROPS] += 1
            _free_pkt(st, pkt)
            return
        misc[M_ERR] = ERR_BUF_OVERFLOW
        misc[M_ERR_ARG] = sw
        return

    pk[pkt, PK_INGRESS] = ingress
    pk[pkt, PK_QNEXT] = -1
    if is_data:
        tail = ports[egress, PI_QTAIL]
        if tail < 0:
            ports[egress, PI_QHEAD] = pkt
        else:
            pk[tail, PK_QNEXT] = pkt
        ports[egress, PI_QTAIL] = pkt
    else:
        tail = ports[egress, PI_CTAIL]
        if tail < 0:
            ports[egress, PI_CHEAD] = pkt
        else:
            pk[tail, PK_QNEXT] = pkt
        ports[egress, PI_CTAIL] = pkt
    ports[egress, PI_DEPTH] += size
    sw_i[sw, SW_OCC] += size
    if sw_i[sw, SW_OCC] > sw_i[sw, SW_PEAK]:
        sw_i[sw, SW_PEAK] = sw_i[sw, SW_OCC]
    _record_tl(st, sw, t)

    if ki[KI_PFC_ON] != 0 and ingress >= 0:
        ports[ingress, PI_BACKLOG] += size
        if (
            ports[ingress, PI_PAUSE_FLAG] == 0
            and ports[ingress, PI_BACKLOG] > ki[KI_XOFF]
        ):
            ports[ingress, PI_PAUSE_FLAG] = 1
            st[ST_PAUSE_SENT][ports[ingress, PI_PEER_DEV]] += 1
            st[ST_PAUSE_RCVD][ports[ingress, PI_OWNER_DEV]] += 1
            rev = ports[ingress, PI_REV]
            _push(st, t + ports[rev, PI_LAT], EV_PAUSE, ingress, 1)

    _start_tx(st, egress, t)


# --- host endpoint -------------------------------------------------------------

@njit(cache=True)
def _send_cnp(st, f, t):
    fl = st[ST_FL]
    pkt = _alloc_pkt(st)
    if pkt < 0:
        return
    pk = st[ST_PK]
    pk[pkt, PK_FLOW] = f
    pk[pkt, PK_KIND] = KIND_CNP
    pk[pkt, PK_SIZE] = st[ST_KI][KI_ACK]
    pk[pkt, PK_PAYLOAD] = 0
    pk[pkt, PK_CUM] = 0
    pk[pkt, PK_SENDTS] = t
    pk[pkt, PK_ECN] = 0
    pk[pkt, PK_HOP] = 1
    pk[pkt, PK_INGRESS] = -1
    pk[pkt, PK_INTN] = 0
    pk[pkt, PK_PINT] = -1
    rpath = fl[f, FL_RPATH]
    port = rpath & 0xFFFF
    _enqueue_ctrl(st, port, pkt, t)


@njit(cache=True)
def _enqueue_ctrl(st, port, pkt, t):
    ports = st[ST_PORT]
    pk = st[ST_PK]
    pk[pkt, PK_QNEXT] = -1
    tail = ports[port, PI_CTAIL]
    if tail < 0:
        ports[port, PI_CHEAD] = pkt
    else:
        pk[tail, PK_QNEXT] = pkt
    ports[port, PI_CTAIL] = pkt
    _start_tx(st, port, t)


@njit(cache=True)
def _host_arrival(st, pkt, t, host):
    misc = st[ST_MISC]
    ki = st[ST_KI]
    pk = st[ST_PK]
    fl = st[ST_FL]
    f = pk[pkt, PK_FLOW]
    kind = pk[pkt, PK_KIND]
    variant = ki[KI_VARIANT]
    if kind == KIND_DATA:
        payload = pk[pkt, PK_PAYLOAD]
        fl[f, FL_RCVD] += payload
        misc[M_DLV_PAYLOAD] += payload
        misc[M_DATA_DELIVERED] += 1
        misc[M_INT_RECORDS_DELIVERED] += pk[pkt, PK_INTN]
        if variant == DCQCN and pk[pkt, PK_ECN] != 0:
            if t - fl[f, FL_LAST_CNP] >= int(st[ST_P][PP_DCQCN_CNP_INTERVAL]):
                fl[f, FL_LAST_CNP] = t
                _send_cnp(st, f, t)
        # recycle the delivered packet as its own cumulative ACK
        pk[pkt, PK_KIND] = KIND_ACK
        pk[pkt, PK_CUM] = fl[f, FL_RCVD]
        pk[pkt, PK_SIZE] = ki[KI_ACK]
        pk[pkt, PK_HOP] = 1
        pk[pkt, PK_INGRESS] = -1
        rpath = fl[f, FL_RPATH]
        _enqueue_ctrl(st, rpath & 0xFFFF, pkt, t)
        return
    if kind == KIND_CNP:
        dcqcn_on_cnp(st[ST_FL_F][f], st[ST_FL_CI][f], st[ST_P])
        _free_pkt(st, pkt)
        return
    # cumulative ACK at the sender
    cum = pk[pkt, PK_CUM]
    if cum <= fl[f, FL_ACKED]:
        fl[f, FL_DUPS] += 1
        misc[M_DUP_ACKS] += 1
        _free_pkt(st, pkt)
        return
    newly = cum - fl[f, FL_ACKED]
    fl[f, FL_ACKED] = cum
    fl_f = st[ST_FL_F]
    fl_ci = st[ST_FL_CI]
    p = st[ST_P]
    if variant == DCTCP:
        ci = fl_ci[f]
        ci[CI_WACK] += 1
        ci[CI_WBYTES] += newly
        if pk[pkt, PK_ECN] != 0:
            ci[CI_WMARK] += 1
        if ci[CI_WBYTES] >= fl_f[f, CF_WINDOW]:
            dctcp_on_ack_window(fl_f[f], ci, p, ci[CI_WACK], ci[CI_WMARK])
            ci[CI_WACK] = 0
            ci[CI_WMARK] = 0
            ci[CI_WBYTES] = 0
    elif variant == TIMELY:
        rtt = t - pk[pkt, PK_SENDTS]
        if rtt > 0:
            timely_on_rtt(fl_f[f], fl_ci[f], p, rtt)
    elif variant == HPCC:
        n = pk[pkt, PK_INTN]
        if n > 0:
            cur = st[ST_PK_INT][pkt]
            prev = st[ST_FL_INT][f]
            ci = fl_ci[f]
            if ci[CI_PREV_INT] == 0:
                ci[CI_PREV_INT] = 1
            else:
                u = hpcc_utilization(cur, n, prev, p[PP_BASE_RTT])
                hpcc_window_update(fl_f[f], ci, p, u, cum, fl[f, FL_SENT])
            hpcc_remember_stack(cur, n, prev)
    elif variant == HPCC_PINT:
        code = pk[pkt, PK_PINT]
        pint_on_ack(fl_f[f], fl_ci[f], p, code, cum, fl[f, FL_SENT])
    _free_pkt(st, pkt)

    op = fl[f, FL_OP]
    op_i = st[ST_OP]
    if cum >= op_i[op, OP_BYTES]:
        _complete_op(st, op, f, t)
        return
    # window growth or rate updates may allow more packets now
    if fl[f, FL_IN_RING] == 0 and fl[f, FL_SENT] < op_i[op, OP_BYTES]:
        status = _flow_emittable(st, f, t)
        if status == 0:
            port = fl[f, FL_PORT]
            _ring_append(st, port, f)
            _start_tx(st, port, t)
        elif status == 2 and fl[f, FL_WAKE] == 0:
            fl[f, FL_WAKE] = 1
            wake = int(np.ceil(st[ST_FL_F][f, CF_NEXT_EMIT]))
            _push(st, wake, EV_READY, f, op)


# --- launch graph ---------------------------------------------------------------

@njit(cache=True)
def _launch_op(st, op, t):
    misc = st[ST_MISC]
    op_i = st[ST_OP]
    f = _alloc_flow(st)
    if f < 0:
        return
    fl = st[ST_FL]
    src = op_i[op, OP_SRC]
    dst = op_i[op, OP_DST]
    host_su = st[ST_HOST_SU]
    host_tor = st[ST_HOST_TOR]
    if op_i[op, OP_VIA] == 1:
        # plan pinned this send to the scale-up level (validated same-server)
        fpath = host_su[src] | (st[ST_NVSW_TO_HOST][dst] << 16)
        rpath = host_su[dst] | (st[ST_NVSW_TO_HOST][src] << 16)
        plen = 2
        rplen = 2
    elif host_tor[src] == host_tor[dst]:
        fpath = st[ST_HOST_NIC][src] | (st[ST_TOR_TO_HOST][dst] << 16)
        rpath = st[ST_HOST_NIC][dst] | (st[ST_TOR_TO_HOST][src] << 16)
        plen = 2
        rplen = 2
    else:
        spine = op_i[op, OP_SPINE]
        ts = host_tor[src]
        td = host_tor[dst]
        tor_up = st[ST_TOR_UP]
        spine_down = st[ST_SPINE_DOWN]
        fpath = (
            st[ST_HOST_NIC][src]
            | (tor_up[ts, spine] << 16)
            | (spine_down[spine, td] << 32)
            | (st[ST_TOR_TO_HOST][dst] << 48)
        )
        rpath = (
            st[ST_HOST_NIC][dst]
            | (tor_up[td, spine] << 16)
            | (spine_down[spine, ts] << 32)
            | (st[ST_TOR_TO_HOST][src] << 48)
        )
        plen = 4
        rplen = 4
    fl[f, FL_OP] = op
    fl[f, FL_SENT] = 0
    fl[f, FL_ACKED] = 0
    fl[f, FL_RCVD] = 0
    fl[f, FL_PKTS] = 0
    fl[f, FL_DUPS] = 0
    fl[f, FL_LAST_CNP] = -_INF
    fl[f, FL_IN_RING] = 0
    fl[f, FL_WAKE] = 0
    fl[f, FL_PORT] = fpath & 0xFFFF
    fl[f, FL_FPATH] = fpath
    fl[f, FL_RPATH] = rpath
    fl[f, FL_FPLEN] = plen
    fl[f, FL_RPLEN] = rplen
    cc_init(st[ST_FL_F][f], st[ST_FL_CI][f], st[ST_P], st[ST_KI][KI_VARIANT])
    op_i[op, OP_STATE] = OP_ACTIVE
    op_i[op, OP_START] = t
    op_i[op, OP_FLOW] = f
    if st[ST_KI][KI_VARIANT] == DCQCN:
        _push(st, t + int(st[ST_P][PP_DCQCN_ALPHA_TIMER]), EV_TIMER, f, op)
    port = fl[f, FL_PORT]
    _ring_append(st, port, f)
    _start_tx(st, port, t)


@njit(cache=True)
def _complete_op(st, op, f, t):
    misc = st[ST_MISC]
    op_i = st[ST_OP]
    op_i[op, OP_FINISH] = t
    op_i[op, OP_STATE] = OP_DONE
    op_i[op, OP_FLOW] = -1
    _free_flow(st, f)
    g_cnt = st[ST_G_CNT]
    g_wstart = st[ST_G_WSTART]
    g_wlen = st[ST_G_WLEN]
    gw_op = st[ST_GW_OP]
    for slot in range(3):
        g = op_i[op, OP_MG0 + slot]
        if g < 0:
            continue
        g_cnt[g] -= 1
        if g_cnt[g] == 0:
            start = g_wstart[g]
            for w in range(g_wlen[g]):
                op2 = gw_op[start + w]
                op_i[op2, OP_PENDING] -= 1
                if op_i[op2, OP_PENDING] == 0 and op_i[op2, OP_STATE] == OP_WAITING:
                    _launch_op(st, op2, t)
    plan = op_i[op, OP_PLAN]
    pl = st[ST_PL]
    pl[plan, PL_REMAINING] -= 1
    if pl[plan, PL_REMAINING] == 0:
        pl[plan, PL_FINISH] = t
        pl[plan, PL_STATE] = 2
        st[ST_DONE][misc[M_DONE_N]] = plan
        misc[M_DONE_N] += 1


@njit(cache=True)
def launch_ready_ops(st, base, n, t):
    """Launch every dependency-free op of a freshly added plan."""
    op_i = st[ST_OP]
    for op in range(base, base + n):
        if op_i[op, OP_STATE] == OP_WAITING and op_i[op, OP_PENDING] == 0:
            _launch_op(st, op, t)


# --- main loop -------------------------------------------------------------------

@njit(cache=True)
def run(st, until, stop_on_plan_done):
    misc = st[ST_MISC]
    hp_t = st[ST_HP_T]
    while misc[M_HEAP_N] > 0:
        t = hp_t[0]
        if t > until:
            misc[M_NOW] = until
            return RUN_LIMIT
        t, k, a, b = _pop(st)
        if t < misc[M_NOW]:
            misc[M_ERR] = ERR_TIME
            misc[M_ERR_ARG] = t
            return -1
        misc[M_NOW] = t
        misc[M_EVENTS] += 1
        if k == EV_TXDONE:
            _txdone(st, a, t)
        elif k == EV_ARRIVAL:
            ports = st[ST_PORT]
            if ports[b, PI_PEER_KIND] == 0:
                _switch_arrival(st, a, t, b, ports[b, PI_PEER])
            else:
                _host_arrival(st, a, t, ports[b, PI_PEER])
        elif k == EV_TIMER:
            fl = st[ST_FL]
            if fl[a, FL_OP] == b and st[ST_OP][b, OP_STATE] == OP_ACTIVE:
                dcqcn_on_timer(st[ST_FL_F][a], st[ST_FL_CI][a], st[ST_P])
                _push(st, t + int(st[ST_P][PP_DCQCN_ALPHA_TIMER]), EV_TIMER, a, b)
        elif k == EV_READY:
            fl = st[ST_FL]
            if fl[a, FL_OP] == b and st[ST_OP][b, OP_STATE] == OP_ACTIVE:
                fl[a, FL_WAKE] = 0
                if (
                    fl[a, FL_IN_RING] == 0
                    and fl[a, FL_SENT] < st[ST_OP][b, OP_BYTES]
                ):
                    port = fl[a, FL_PORT]
                    _ring_append(st, port, a)
                    _start_tx(st, port, t)
        elif k == EV_PAUSE:
            ports = st[ST_PORT]
            ports[a, PI_PAUSED] = b
            if b == 0 and ports[a, PI_BUSY] == 0:
                _start_tx(st, a, t)
        if misc[M_ERR] != 0:
            return -1
        if stop_on_plan_done != 0 and misc[M_DONE_N] > 0:
            return RUN_PLAN_DONE
    if until < _INF:
        misc[M_NOW] = until
        return RUN_LIMIT
    return RUN_IDLE
