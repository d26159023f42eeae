"""Per-flow congestion control: six policies as pure transition functions.

Every policy's state lives in two flat arrays (one float64 row, one int64
row per flow) so the packet kernel can run them compiled, while tests and
notebooks can drive the exact same functions with scripted feedback traces,
no fabric required.

Policies:

* ``PFC_ONLY``  - no end-host control; the fabric's PAUSE frames do the work.
* ``DCQCN``     - rate-based; receiver turns ECN marks into CNPs, sender cuts
                  multiplicatively and recovers through fast-recovery /
                  additive / hyper-additive rounds on a quiet timer.
* ``DCTCP``     - window-based; window shrinks in proportion to the EWMA of
                  the marked fraction per window of ACKs.
* ``TIMELY``    - rate-based on RTT: additive increase below Tlow,
                  multiplicative decrease above Thigh, RTT-gradient control
                  in between.
* ``HPCC``      - window-based on per-hop telemetry records; window steers
                  toward a target utilization eta of the bottleneck hop.
* ``HPCC_PINT`` - HPCC's control law fed by an 8-bit logarithmically
                  quantized bottleneck utilization on every Nth packet.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

# Congestion control variants.
PFC_ONLY = 0
DCQCN = 1
DCTCP = 2
TIMELY = 3
HPCC = 4
HPCC_PINT = 5

VARIANT_NAMES = {
    PFC_ONLY: "pfc_only",
    DCQCN: "dcqcn",
    DCTCP: "dctcp",
    TIMELY: "timely",
    HPCC: "hpcc",
    HPCC_PINT: "hpcc_pint",
}
VARIANT_IDS = {name: vid for vid, name in VARIANT_NAMES.items()}

WINDOW_VARIANTS = (DCTCP, HPCC, HPCC_PINT)
RATE_VARIANTS = (PFC_ONLY, DCQCN, TIMELY)

# ---------------------------------------------------------------------------
# Per-flow state columns.
#
# Float row (CF_*): rates in bits/s, windows in bytes, times in ns.
CF_RATE = 0        # current pacing rate
CF_TARGET = 1      # DCQCN target rate
CF_ALPHA = 2       # DCQCN / DCTCP congestion estimate
CF_WINDOW = 3      # window-based variants: allowed inflight bytes
CF_REF_WIN = 4     # HPCC reference window
CF_NEXT_EMIT = 5   # pacing: earliest time the next packet may leave
CF_PREV_RTT = 6    # TIMELY: previous RTT sample
CF_RTT_DIFF = 7    # TIMELY: smoothed RTT difference
CF_NCOLS = 8

# Int row (CI_*).
CI_ROUNDS = 0        # DCQCN recovery rounds since last cut
CI_CNP_SEEN = 1      # DCQCN: CNP arrived since last timer tick
CI_NEG_STREAK = 2    # TIMELY consecutive non-positive gradients
CI_INC_STAGE = 3     # HPCC additive stages since last multiplicative align
CI_LASTUPD_SEQ = 4   # HPCC per-RTT reference commit watermark (bytes)
CI_WACK = 5          # DCTCP acks seen this window
CI_WMARK = 6         # DCTCP marked acks this window
CI_WBYTES = 7        # DCTCP bytes acked this window
CI_PREV_INT = 8      # HPCC: previous telemetry stack is valid
CI_BC_MARK = 9       # DCQCN byte counter: sent-bytes at the last round/cut
CI_RAISED = 10       # DCQCN: a recovery round ran since the last cut
CI_NCOLS = 11

# ---------------------------------------------------------------------------
# Flat parameter vector shared by the kernel and the transitions (PP_*).
PP_LINE_RATE = 0        # bps of the sender's NIC link
PP_BASE_RTT = 1         # ns, analytic longest-path RTT
PP_MIN_RATE = 2         # bps floor for rate-based variants
PP_MTU = 3              # payload bytes per DATA packet
PP_DCQCN_G = 4
PP_DCQCN_CNP_INTERVAL = 5   # ns
PP_DCQCN_ALPHA_TIMER = 6    # ns
PP_DCQCN_RATE_AI = 7        # bps
PP_DCQCN_RATE_HAI = 8       # bps
PP_DCQCN_FR_ROUNDS = 9
PP_DCTCP_G = 10
PP_TMLY_TLOW = 11           # ns
PP_TMLY_THIGH = 12          # ns
PP_TMLY_STEP = 13           # bps
PP_TMLY_BETA = 14
PP_TMLY_EWMA = 15
PP_TMLY_HAI_THRESH = 16
PP_TMLY_HAI_FACTOR = 17
PP_HPCC_ETA = 18
PP_HPCC_MAX_STAGE = 19
PP_HPCC_WAI = 20            # bytes
PP_PINT_PERIOD = 21         # packets between telemetry requests
PP_DCQCN_BC = 22            # bytes sent per byte-counter recovery round
PP_DCQCN_CLAMP = 23         # 1: target follows rate on every cut
PP_DCQCN_ALPHA0 = 24        # initial congestion estimate
PP_NCOLS = 25


@dataclass
class DcqcnParams:
    g: float = 1.0 / 256.0
    cnp_interval_ns: int = 50_000
    alpha_timer_ns: int = 55_000
    rate_ai_bps: float = 4e9
    rate_hai_bps: float = 5e9
    fast_recovery_rounds: int = 5
    byte_counter: int = 150_000  # bytes per byte-counter recovery round
    clamp_target_rate: bool = False  # pull target to rate on every cut
    alpha_init: float = 1.0


@dataclass
class DctcpParams:
    g: float = 1.0 / 16.0


@dataclass
class TimelyParams:
    t_low_ns: int = 50_000
    t_high_ns: int = 500_000
    beta: float = 0.8
    additive_step_bps: float = 500e6
    ewma_alpha: float = 0.875
    hai_threshold: int = 5
    hai_factor: float = 5.0


@dataclass
class HpccParams:
    eta: float = 0.95
    max_stage: int = 5
    w_ai_bytes: float = 800.0


@dataclass
class PintParams:
    feedback_period: int = 4


@dataclass
class CcParams:
    """Bundle of every policy's constants plus shared floor/ceiling values."""

    min_rate_bps: float = 1e9
    dcqcn: DcqcnParams = field(default_factory=DcqcnParams)
    dctcp: DctcpParams = field(default_factory=DctcpParams)
    timely: TimelyParams = field(default_factory=TimelyParams)
    hpcc: HpccParams = field(default_factory=HpccParams)
    pint: PintParams = field(default_factory=PintParams)

    def vector(self, line_rate_bps: int, base_rtt_ns: int, mtu: int) -> np.ndarray:
        p = np.zeros(PP_NCOLS, dtype=np.float64)
        p[PP_LINE_RATE] = line_rate_bps
        p[PP_BASE_RTT] = base_rtt_ns
        p[PP_MIN_RATE] = self.min_rate_bps
        p[PP_MTU] = mtu
        p[PP_DCQCN_G] = self.dcqcn.g
        p[PP_DCQCN_CNP_INTERVAL] = self.dcqcn.cnp_interval_ns
        p[PP_DCQCN_ALPHA_TIMER] = self.dcqcn.alpha_timer_ns
        p[PP_DCQCN_RATE_AI] = self.dcqcn.rate_ai_bps
        p[PP_DCQCN_RATE_HAI] = self.dcqcn.rate_hai_bps
        p[PP_DCQCN_FR_ROUNDS] = self.dcqcn.fast_recovery_rounds
        p[PP_DCTCP_G] = self.dctcp.g
        p[PP_TMLY_TLOW] = self.timely.t_low_ns
        p[PP_TMLY_THIGH] = self.timely.t_high_ns
        p[PP_TMLY_STEP] = self.timely.additive_step_bps
        p[PP_TMLY_BETA] = self.timely.beta
        p[PP_TMLY_EWMA] = self.timely.ewma_alpha
        p[PP_TMLY_HAI_THRESH] = self.timely.hai_threshold
        p[PP_TMLY_HAI_FACTOR] = self.timely.hai_factor
        p[PP_HPCC_ETA] = self.hpcc.eta
        p[PP_HPCC_MAX_STAGE] = self.hpcc.max_stage
        p[PP_HPCC_WAI] = self.hpcc.w_ai_bytes
        p[PP_PINT_PERIOD] = self.pint.feedback_period
        p[PP_DCQCN_BC] = self.dcqcn.byte_counter
        p[PP_DCQCN_CLAMP] = 1.0 if self.dcqcn.clamp_target_rate else 0.0
        p[PP_DCQCN_ALPHA0] = self.dcqcn.alpha_init
        return p


def new_state(variant: int, params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fresh per-flow state pair (floats, ints) for scripted-trace tests."""
    f = np.zeros(CF_NCOLS, dtype=np.float64)
    ci = np.zeros(CI_NCOLS, dtype=np.int64)
    cc_init(f, ci, params, variant)
    return f, ci


# ---------------------------------------------------------------------------
# Transitions.  All are numba-compiled; the packet kernel calls them per
# feedback event and tests call them directly.

@njit(cache=True)
def cc_init(f, ci, p, variant):
    line = p[PP_LINE_RATE]
    bdp_bytes = line * p[PP_BASE_RTT] / 8.0e9
    f[CF_RATE] = line
    f[CF_TARGET] = line
    f[CF_NEXT_EMIT] = 0.0
    f[CF_PREV_RTT] = 0.0
    f[CF_RTT_DIFF] = 0.0
    if variant == DCQCN:
        f[CF_ALPHA] = p[PP_DCQCN_ALPHA0]
    elif variant == DCTCP:
        f[CF_ALPHA] = 1.0
    else:
        f[CF_ALPHA] = 0.0
    f[CF_WINDOW] = bdp_bytes
    f[CF_REF_WIN] = bdp_bytes
    for k in range(CI_NCOLS):
        ci[k] = 0


@njit(cache=True)
def dcqcn_on_cnp(f, ci, p):
    # Without clamping, back-to-back cuts keep the pre-congestion target,
    # so fast recovery has something worth recovering toward.
    if p[PP_DCQCN_CLAMP] != 0.0 or ci[CI_RAISED] != 0:
        f[CF_TARGET] = f[CF_RATE]
    cut = f[CF_RATE] * (1.0 - f[CF_ALPHA] / 2.0)
    f[CF_RATE] = max(p[PP_MIN_RATE], cut)
    f[CF_ALPHA] = (1.0 - p[PP_DCQCN_G]) * f[CF_ALPHA] + p[PP_DCQCN_G]
    ci[CI_ROUNDS] = 0
    ci[CI_CNP_SEEN] = 1
    ci[CI_RAISED] = 0
    ci[CI_BC_MARK] = -1  # restart the byte counter from the next send


@njit(cache=True)
def _dcqcn_round(f, ci, p):
    """One recovery round: fast recovery toward the target, then additive
    and finally hyper-additive target growth."""
    line = p[PP_LINE_RATE]
    ci[CI_ROUNDS] += 1
    ci[CI_RAISED] = 1
    fr = int(p[PP_DCQCN_FR_ROUNDS])
    if ci[CI_ROUNDS] > fr:
        if ci[CI_ROUNDS] <= 2 * fr:
            f[CF_TARGET] = min(line, f[CF_TARGET] + p[PP_DCQCN_RATE_AI])
        else:
            f[CF_TARGET] = min(line, f[CF_TARGET] + p[PP_DCQCN_RATE_HAI])
    f[CF_RATE] = min(line, (f[CF_RATE] + f[CF_TARGET]) / 2.0)


@njit(cache=True)
def dcqcn_on_timer(f, ci, p):
    """One quiet-timer tick: alpha decay plus one rate-recovery round.
    A tick that saw a CNP only clears the flag."""
    if ci[CI_CNP_SEEN] != 0:
        ci[CI_CNP_SEEN] = 0
        return
    f[CF_ALPHA] *= 1.0 - p[PP_DCQCN_G]
    _dcqcn_round(f, ci, p)


@njit(cache=True)
def dcqcn_on_bytes_sent(f, ci, p, sent_bytes):
    """Byte-counter recovery: one round per byte_counter bytes sent since
    the last cut (the counter restarts at every cut), so recovery keeps
    pace even while marks continue arriving."""
    if ci[CI_BC_MARK] < 0:
        ci[CI_BC_MARK] = sent_bytes
        return
    if sent_bytes - ci[CI_BC_MARK] < int(p[PP_DCQCN_BC]):
        return
    ci[CI_BC_MARK] = sent_bytes
    _dcqcn_round(f, ci, p)


@njit(cache=True)
def dctcp_on_ack_window(f, ci, p, acked_in_window, marked_in_window):
    """Apply one window-boundary update from the observed mark fraction."""
    if acked_in_window <= 0:
        return
    frac = marked_in_window / acked_in_window
    g = p[PP_DCTCP_G]
    f[CF_ALPHA] = (1.0 - g) * f[CF_ALPHA] + g * frac
    mtu = p[PP_MTU]
    if marked_in_window > 0:
        f[CF_WINDOW] = max(mtu, f[CF_WINDOW] * (1.0 - f[CF_ALPHA] / 2.0))
    else:
        f[CF_WINDOW] = f[CF_WINDOW] + mtu


@njit(cache=True)
def timely_on_rtt(f, ci, p, rtt_ns):
    line = p[PP_LINE_RATE]
    prev = f[CF_PREV_RTT]
    if prev <= 0.0:
        new_diff = 0.0
    else:
        new_diff = rtt_ns - prev
    f[CF_PREV_RTT] = rtt_ns
    a = p[PP_TMLY_EWMA]
    f[CF_RTT_DIFF] = (1.0 - a) * f[CF_RTT_DIFF] + a * new_diff
    if rtt_ns < p[PP_TMLY_TLOW]:
        ci[CI_NEG_STREAK] = 0
        f[CF_RATE] = min(line, f[CF_RATE] + p[PP_TMLY_STEP])
        return
    if rtt_ns > p[PP_TMLY_THIGH]:
        ci[CI_NEG_STREAK] = 0
        factor = 1.0 - p[PP_TMLY_BETA] * (1.0 - p[PP_TMLY_THIGH] / rtt_ns)
        f[CF_RATE] = max(p[PP_MIN_RATE], f[CF_RATE] * factor)
        return
    gradient = f[CF_RTT_DIFF] / p[PP_BASE_RTT]
    if gradient <= 0.0:
        ci[CI_NEG_STREAK] += 1
        step = p[PP_TMLY_STEP]
        if ci[CI_NEG_STREAK] >= int(p[PP_TMLY_HAI_THRESH]):
            step *= p[PP_TMLY_HAI_FACTOR]
        f[CF_RATE] = min(line, f[CF_RATE] + step)
    else:
        ci[CI_NEG_STREAK] = 0
        factor = 1.0 - p[PP_TMLY_BETA] * gradient
        if factor < 0.0:
            factor = 0.0
        f[CF_RATE] = max(p[PP_MIN_RATE], f[CF_RATE] * factor)


# Telemetry record layout: a stack of up to 4 hop records, each
# (timestamp_ns, queue_bytes, tx_bytes, bandwidth_bps) interleaved in one
# int64 row; the sender keeps (timestamp_ns, tx_bytes) pairs from the
# previous stack to form per-hop deltas.
INT_FIELDS = 4
PREV_FIELDS = 2
MAX_HOPS = 4


@njit(cache=True)
def hpcc_utilization(cur, n_hops, prev, base_rtt_ns):
    """Bottleneck utilization: max over hops of queue term + delta-tx term.

    ``cur[4j..4j+3]`` = (ts, qlen, tx_bytes, bw) for hop j;
    ``prev[2j..2j+1]`` = (ts, tx_bytes) from the previously echoed stack.
    """
    u_max = 0.0
    for j in range(n_hops):
        bw = cur[INT_FIELDS * j + 3]
        if bw <= 0:
            continue
        u = (cur[INT_FIELDS * j + 1] * 8.0e9) / (bw * base_rtt_ns)
        dt = cur[INT_FIELDS * j] - prev[PREV_FIELDS * j]
        if dt > 0:
            dbytes = cur[INT_FIELDS * j + 2] - prev[PREV_FIELDS * j + 1]
            if dbytes > 0:
                u += (dbytes * 8.0e9 / dt) / bw
        if u > u_max:
            u_max = u
    return u_max


@njit(cache=True)
def hpcc_remember_stack(cur, n_hops, prev):
    """Save (ts, tx_bytes) of the echoed stack for the next delta."""
    for j in range(n_hops):
        prev[PREV_FIELDS * j] = cur[INT_FIELDS * j]
        prev[PREV_FIELDS * j + 1] = cur[INT_FIELDS * j + 2]


@njit(cache=True)
def hpcc_window_update(f, ci, p, u_max, ack_cum, snd_nxt):
    """HPCC control law: per-ACK fast react from the reference window,
    reference committed once per RTT (watermarked by acked bytes)."""
    eta = p[PP_HPCC_ETA]
    w_ai = p[PP_HPCC_WAI]
    mtu = p[PP_MTU]
    bdp = p[PP_LINE_RATE] * p[PP_BASE_RTT] / 8.0e9
    commit = ack_cum > ci[CI_LASTUPD_SEQ]
    if u_max > eta or ci[CI_INC_STAGE] >= int(p[PP_HPCC_MAX_STAGE]):
        u = u_max
        if u < 1e-9:
            u = 1e-9
        w = f[CF_REF_WIN] * (eta / u) + w_ai
        if commit:
            ci[CI_INC_STAGE] = 0
            ci[CI_LASTUPD_SEQ] = snd_nxt
    else:
        w = f[CF_REF_WIN] + w_ai
        if commit:
            ci[CI_INC_STAGE] += 1
            ci[CI_LASTUPD_SEQ] = snd_nxt
    if w < mtu:
        w = mtu
    if w > bdp:
        w = bdp
    f[CF_WINDOW] = w
    if commit:
        f[CF_REF_WIN] = w
    f[CF_RATE] = w * 8.0e9 / p[PP_BASE_RTT]


@njit(cache=True)
def pint_quantize(u):
    """Logarithmic 8-bit code over utilization in [2^-8, 4]."""
    if u < 1.0 / 256.0:
        return 0
    code = int(round(25.5 * np.log2(u * 256.0)))
    if code < 1:
        code = 1
    if code > 255:
        code = 255
    return code


@njit(cache=True)
def pint_dequantize(code):
    if code <= 0:
        return 0.0
    return 2.0 ** (code / 25.5) / 256.0


@njit(cache=True)
def pint_on_ack(f, ci, p, code, ack_cum, snd_nxt):
    """Quantized feedback drives the HPCC law; between feedbacks the window
    only gains the additive term, once per round trip."""
    if code < 0:
        if ack_cum > ci[CI_LASTUPD_SEQ]:
            mtu = p[PP_MTU]
            bdp = p[PP_LINE_RATE] * p[PP_BASE_RTT] / 8.0e9
            w = f[CF_WINDOW] + p[PP_HPCC_WAI]
            if w > bdp:
                w = bdp
            if w < mtu:
                w = mtu
            f[CF_WINDOW] = w
            f[CF_REF_WIN] = w
            ci[CI_LASTUPD_SEQ] = snd_nxt
            f[CF_RATE] = w * 8.0e9 / p[PP_BASE_RTT]
        return
    hpcc_window_update(f, ci, p, pint_dequantize(code), ack_cum, snd_nxt)
