"""Scripted-trace oracles for every congestion-control update rule.

Expected sequences were computed by an independent transcription of each
rule (direct formula evaluation, no simulator involved) and frozen here.
Rates are float bits/s and windows float bytes; matches are asserted to
per-million precision.
"""

import pytest

from rocesim import transport as T

LINE = 200 * 10**9
BASE_RTT = 2089
MTU = 1000


def make(variant, **overrides):
    params = T.CcParams()
    params.min_rate_bps = 1e9
    for key, value in overrides.items():
        section, attr = key.split(".")
        setattr(getattr(params, section), attr, value)
    vec = params.vector(LINE, BASE_RTT, MTU)
    f, ci = T.new_state(variant, vec)
    return f, ci, vec


def approx(x):
    return pytest.approx(x, rel=1e-9, abs=1e-9)


class TestDcqcnOracle:
    # events applied in order; expected (rate, target, alpha) after each
    EVENTS = ["cnp", "round", "round", "cnp", "round", "quiet", "quiet",
              "quiet", "quiet", "quiet", "quiet", "cnp", "quiet"]
    EXPECTED = [
        (100000000000.0, 200000000000.0, 1.0),
        (150000000000.0, 200000000000.0, 1.0),
        (175000000000.0, 200000000000.0, 1.0),
        (87500000000.0, 175000000000.0, 1.0),
        (131250000000.0, 175000000000.0, 1.0),
        (153125000000.0, 175000000000.0, 0.99609375),
        (164062500000.0, 175000000000.0, 0.9922027587890625),
        (169531250000.0, 175000000000.0, 0.9883269667625427),
        (172265625000.0, 175000000000.0, 0.9844663145486265),
        (175632812500.0, 179000000000.0, 0.980620743007421),
        (179316406250.0, 183000000000.0, 0.9767901932300482),
        (91739152694.87233, 179316406250.0, 0.9768808565377434),
        (135527779472.43616, 179316406250.0, 0.9730649156918928),
    ]

    def test_trace(self):
        f, ci, vec = make(T.DCQCN)
        sent = 0
        for event, (rate, target, alpha) in zip(self.EVENTS, self.EXPECTED):
            if event == "cnp":
                T.dcqcn_on_cnp(f, ci, vec)
            elif event == "round":
                # byte-counter round: cross the threshold exactly once
                T.dcqcn_on_bytes_sent(f, ci, vec, sent)  # set the mark
                sent += int(vec[T.PP_DCQCN_BC]) + 1
                T.dcqcn_on_bytes_sent(f, ci, vec, sent)
            else:  # quiet timer tick
                ci[T.CI_CNP_SEEN] = 0
                T.dcqcn_on_timer(f, ci, vec)
            assert f[T.CF_RATE] == approx(rate), event
            assert f[T.CF_TARGET] == approx(target), event
            assert f[T.CF_ALPHA] == approx(alpha), event

    def test_cut_at_alpha_one_halves(self):
        f, ci, vec = make(T.DCQCN)
        assert f[T.CF_RATE] == LINE  # starts at line rate
        ci[T.CI_RAISED] = 1
        f[T.CF_RATE] = 100e9
        f[T.CF_ALPHA] = 1.0
        T.dcqcn_on_cnp(f, ci, vec)
        assert f[T.CF_RATE] == approx(50e9)

    def test_cut_at_alpha_zero_changes_nothing_but_alpha(self):
        f, ci, vec = make(T.DCQCN)
        f[T.CF_ALPHA] = 0.0
        T.dcqcn_on_cnp(f, ci, vec)
        assert f[T.CF_RATE] == approx(LINE)
        assert f[T.CF_ALPHA] == approx(vec[T.PP_DCQCN_G])

    def test_one_recovery_round_after_cut(self):
        # cut from 100 to 50 with target 100 -> one round gives 75
        f, ci, vec = make(T.DCQCN)
        f[T.CF_RATE] = 50e9
        f[T.CF_TARGET] = 100e9
        ci[T.CI_CNP_SEEN] = 0
        T.dcqcn_on_timer(f, ci, vec)
        assert f[T.CF_RATE] == approx(75e9)

    def test_timer_tick_with_cnp_only_clears_flag(self):
        f, ci, vec = make(T.DCQCN)
        T.dcqcn_on_cnp(f, ci, vec)
        rate = f[T.CF_RATE]
        T.dcqcn_on_timer(f, ci, vec)
        assert f[T.CF_RATE] == rate
        assert ci[T.CI_CNP_SEEN] == 0

    def test_quiet_timer_decays_alpha(self):
        f, ci, vec = make(T.DCQCN)
        T.dcqcn_on_timer(f, ci, vec)
        assert f[T.CF_ALPHA] == approx(1.0 - 1.0 / 256.0)


class TestDctcpOracle:
    OBSERVATIONS = [(10, 0), (10, 10), (10, 2), (10, 0), (10, 0), (8, 1),
                    (10, 0), (10, 0), (10, 5), (10, 0), (12, 12), (10, 0)]
    EXPECTED = [
        (53225.0, 0.9375),
        (28171.826171875, 0.94140625),
        (15563.971055746078, 0.895068359375),
        (16563.97105574608, 0.8391265869140625),
        (17563.97105574608, 0.7866811752319336),
        (11018.528016368637, 0.7453261017799377),
        (12018.528016368637, 0.6987432204186916),
        (13018.528016368637, 0.6550717691425234),
        (8817.580619559389, 0.6453797835711157),
        (9817.580619559389, 0.605043547097921),
        (6726.376318020963, 0.6297283254043009),
        (7726.376318020963, 0.5903703050665321),
    ]

    def test_trace(self):
        f, ci, vec = make(T.DCTCP)
        assert f[T.CF_WINDOW] == approx(LINE * BASE_RTT / 8e9)
        for (acked, marked), (window, alpha) in zip(self.OBSERVATIONS, self.EXPECTED):
            T.dctcp_on_ack_window(f, ci, vec, acked, marked)
            assert f[T.CF_WINDOW] == approx(window)
            assert f[T.CF_ALPHA] == approx(alpha)

    def test_no_marks_grows_by_mtu_and_alpha_decays_to_zero(self):
        f, ci, vec = make(T.DCTCP)
        start = f[T.CF_WINDOW]
        for _ in range(200):
            T.dctcp_on_ack_window(f, ci, vec, 10, 0)
        assert f[T.CF_WINDOW] == approx(start + 200 * MTU)
        assert f[T.CF_ALPHA] < 1e-5

    def test_full_marking_at_alpha_one_halves_window(self):
        f, ci, vec = make(T.DCTCP)
        f[T.CF_ALPHA] = 1.0
        f[T.CF_WINDOW] = 40000.0
        vec2 = vec.copy()
        vec2[T.PP_DCTCP_G] = 0.0  # isolate the halving
        T.dctcp_on_ack_window(f, ci, vec2, 10, 10)
        assert f[T.CF_WINDOW] == approx(20000.0)

    def test_fraction_updates_alpha(self):
        f, ci, vec = make(T.DCTCP)
        f[T.CF_ALPHA] = 0.0
        T.dctcp_on_ack_window(f, ci, vec, 16, 16)
        assert f[T.CF_ALPHA] == approx(1.0 / 16.0)

    def test_window_floor_is_one_mtu(self):
        f, ci, vec = make(T.DCTCP)
        f[T.CF_ALPHA] = 1.0
        f[T.CF_WINDOW] = float(MTU)
        T.dctcp_on_ack_window(f, ci, vec, 10, 10)
        assert f[T.CF_WINDOW] == MTU


class TestTimelyOracle:
    RTTS = [25_000, 30_000, 600_000, 1_000_000, 200_000, 190_000, 180_000,
            180_000, 180_000, 180_000, 180_000, 250_000, 40_000]
    EXPECTED = [
        (200000000000.0, 0.0, 0),
        (200000000000.0, 4375.0, 0),
        (173333333333.33334, 499296.875, 0),
        (104000000000.0, 412412.109375, 0),
        (104500000000.0, -648448.486328125, 1),
        (105000000000.0, -89806.06079101562, 2),
        (105500000000.0, -19975.757598876953, 3),
        (106000000000.0, -2496.969699859619, 4),
        (108500000000.0, -312.1212124824524, 5),
        (111000000000.0, -39.01515156030655, 6),
        (113500000000.0, -4.876893945038319, 7),
        (1000000000.0, 61249.39038825687, 0),
        (1500000000.0, -176093.8262014679, 0),
    ]

    def test_trace(self):
        f, ci, vec = make(T.TIMELY)
        for rtt, (rate, diff, streak) in zip(self.RTTS, self.EXPECTED):
            T.timely_on_rtt(f, ci, vec, float(rtt))
            assert f[T.CF_RATE] == approx(rate), rtt
            assert f[T.CF_RTT_DIFF] == approx(diff), rtt
            assert ci[T.CI_NEG_STREAK] == streak, rtt

    def test_below_tlow_additive_increase(self):
        f, ci, vec = make(T.TIMELY)
        f[T.CF_RATE] = 100e9
        T.timely_on_rtt(f, ci, vec, 25_000.0)  # t_low / 2
        assert f[T.CF_RATE] == approx(100e9 + vec[T.PP_TMLY_STEP])

    def test_above_thigh_multiplicative_decrease(self):
        # rtt = 2 * t_high with beta 0.8 -> factor 0.6
        f, ci, vec = make(T.TIMELY)
        f[T.CF_RATE] = 100e9
        T.timely_on_rtt(f, ci, vec, 1_000_000.0)
        assert f[T.CF_RATE] == approx(60e9)

    def test_flat_rtt_series_increases(self):
        f, ci, vec = make(T.TIMELY)
        f[T.CF_RATE] = 50e9
        for _ in range(3):
            T.timely_on_rtt(f, ci, vec, 100_000.0)  # between tlow and thigh
        # gradient settles at zero -> additive growth each sample
        assert f[T.CF_RATE] == approx(50e9 + 3 * vec[T.PP_TMLY_STEP])

    def test_nonpositive_rtt_is_callers_bug(self):
        # the kernel guards rtt > 0; the transition assumes it
        f, ci, vec = make(T.TIMELY)
        T.timely_on_rtt(f, ci, vec, 100_000.0)
        assert f[T.CF_PREV_RTT] == 100_000.0


class TestHpccOracle:
    BDP = 52225.0
    # scripted (u_max, ack_cum, snd_nxt); expected (window, ref, stage)
    STEPS = [(1.0, 1000, 10000), (1.2, 2000, 11000), (0.5, 3000, 12000),
             (0.4, 11000, 20000), (0.3, 12000, 21000), (0.2, 20500, 30000),
             (0.2, 21000, 31000), (0.1, 30500, 40000), (0.1, 31000, 41000),
             (0.1, 40500, 50000), (0.9, 41000, 51000), (1.5, 50500, 60000)]
    EXPECTED = [
        (50413.75, 50413.75, 0),
        (40710.885416666664, 50413.75, 0),
        (51213.75, 50413.75, 0),
        (51213.75, 51213.75, 1),
        (52013.75, 51213.75, 1),
        (52013.75, 52013.75, 2),
        (52225.0, 52013.75, 2),
        (52225.0, 52225.0, 3),
        (52225.0, 52225.0, 3),
        (52225.0, 52225.0, 4),
        (52225.0, 52225.0, 4),
        (33875.83333333333, 33875.83333333333, 0),
    ]

    def test_trace(self):
        f, ci, vec = make(T.HPCC)
        assert f[T.CF_WINDOW] == approx(self.BDP)
        for (u, cum, snd), (window, ref, stage) in zip(self.STEPS, self.EXPECTED):
            T.hpcc_window_update(f, ci, vec, u, cum, snd)
            assert f[T.CF_WINDOW] == approx(window), (u, cum)
            assert f[T.CF_REF_WIN] == approx(ref), (u, cum)
            assert ci[T.CI_INC_STAGE] == stage, (u, cum)

    def test_utilization_from_stacks(self):
        import numpy as np

        cur = np.array(
            [2000, 25000, 52096, 200_000_000_000,
             2500, 0, 41048, 400_000_000_000], dtype=np.int64)
        prev = np.array([1000, 50000, 1500, 40000], dtype=np.int64)
        u = T.hpcc_utilization(cur, 2, prev, float(BASE_RTT))
        assert u == approx(0.5625379415988512)

    def test_bottleneck_is_max_over_hops(self):
        import numpy as np

        # hop 1 at u=0.5, hop 2 at u=1.2 via queue occupancy alone
        bw = 200_000_000_000
        q1 = int(0.5 * bw * BASE_RTT / 8e9)
        q2 = int(1.2 * bw * BASE_RTT / 8e9)
        cur = np.array([100, q1, 0, bw, 100, q2, 0, bw], dtype=np.int64)
        prev = np.array([100, 0, 100, 0], dtype=np.int64)
        u = T.hpcc_utilization(cur, 2, prev, float(BASE_RTT))
        assert u == approx(q2 * 8e9 / (bw * BASE_RTT))

    def test_idle_link_grows_additively(self):
        f, ci, vec = make(T.HPCC)
        f[T.CF_WINDOW] = 30000.0
        f[T.CF_REF_WIN] = 30000.0
        T.hpcc_window_update(f, ci, vec, 0.0, 100, 2000)
        assert f[T.CF_WINDOW] == approx(30800.0)

    def test_u_of_one_scales_by_eta(self):
        f, ci, vec = make(T.HPCC)
        f[T.CF_WINDOW] = 30000.0
        f[T.CF_REF_WIN] = 30000.0
        T.hpcc_window_update(f, ci, vec, 1.0, 100, 2000)
        assert f[T.CF_WINDOW] == approx(30000.0 * 0.95 + 800.0)


class TestPintOracle:
    # (utilization, code, dequantized)
    QUANT = [
        (0.0, 0, 0.0),
        (0.002, 0, 0.0),
        (0.00390625, 1, 0.004013886913177392),
        (0.01, 35, 0.010114361227619502),
        (0.1, 119, 0.09921256574801249),
        (0.5, 178, 0.49325041054793833),
        (0.95, 202, 0.9470868448726296),
        (1.0, 204, 1.0),
        (2.0, 230, 2.027367800645371),
        (4.0, 255, 4.0),
        (10.0, 255, 4.0),
    ]

    def test_quantize_dequantize(self):
        for u, code, back in self.QUANT:
            assert T.pint_quantize(u) == code, u
            assert T.pint_dequantize(code) == approx(back), u

    def test_quantization_error_within_one_step(self):
        # adjacent codes differ by x2^(10/255): ~2.76% relative
        step = 2 ** (10 / 255)
        for u in (0.01, 0.05, 0.2, 0.5, 0.9, 1.0, 1.5, 3.9):
            back = T.pint_dequantize(T.pint_quantize(u))
            assert back / u <= step * 1.0001
            assert u / back <= step * 1.0001

    def test_zero_code_is_pure_additive(self):
        f, ci, vec = make(T.HPCC_PINT)
        f[T.CF_WINDOW] = 30000.0
        T.pint_on_ack(f, ci, vec, 0, 100, 2000)
        # code 0 dequantizes to utilization 0 -> hpcc law, additive branch
        assert f[T.CF_WINDOW] == approx(f[T.CF_REF_WIN])

    def test_no_feedback_adds_wai_once_per_rtt(self):
        f, ci, vec = make(T.HPCC_PINT)
        f[T.CF_WINDOW] = 30000.0
        T.pint_on_ack(f, ci, vec, -1, 100, 2000)
        assert f[T.CF_WINDOW] == approx(30800.0)
        # same round trip: no further growth
        T.pint_on_ack(f, ci, vec, -1, 200, 2000)
        T.pint_on_ack(f, ci, vec, -1, 1999, 2000)
        assert f[T.CF_WINDOW] == approx(30800.0)
        # next round trip grows again
        T.pint_on_ack(f, ci, vec, -1, 2100, 4000)
        assert f[T.CF_WINDOW] == approx(31600.0)

    def test_feedback_matches_hpcc_law(self):
        f1, ci1, vec = make(T.HPCC_PINT)
        f2, ci2, _ = make(T.HPCC)
        u = T.pint_dequantize(T.pint_quantize(1.0))
        T.pint_on_ack(f1, ci1, vec, T.pint_quantize(1.0), 100, 2000)
        T.hpcc_window_update(f2, ci2, vec, u, 100, 2000)
        assert f1[T.CF_WINDOW] == approx(f2[T.CF_WINDOW])


class TestRateBounds:
    """Every variant keeps rate in (0, line] and windows >= 1 MTU."""

    def test_dcqcn_rate_bounds_under_stress(self):
        f, ci, vec = make(T.DCQCN)
        for _ in range(100):
            T.dcqcn_on_cnp(f, ci, vec)
        assert f[T.CF_RATE] >= vec[T.PP_MIN_RATE]
        ci[T.CI_CNP_SEEN] = 0
        for _ in range(2000):
            T.dcqcn_on_timer(f, ci, vec)
        assert f[T.CF_RATE] <= LINE

    def test_timely_rate_bounds_under_stress(self):
        f, ci, vec = make(T.TIMELY)
        for _ in range(100):
            T.timely_on_rtt(f, ci, vec, 5_000_000.0)
        assert f[T.CF_RATE] >= vec[T.PP_MIN_RATE]
        for _ in range(5000):
            T.timely_on_rtt(f, ci, vec, 1_000.0)
        assert f[T.CF_RATE] <= LINE

    def test_hpcc_window_bounds_under_stress(self):
        f, ci, vec = make(T.HPCC)
        for i in range(50):
            T.hpcc_window_update(f, ci, vec, 4.0, i * 1000, i * 1000 + 5000)
        assert f[T.CF_WINDOW] >= MTU
        for i in range(5000):
            T.hpcc_window_update(f, ci, vec, 0.0, i * 1000, i * 1000 + 5000)
        assert f[T.CF_WINDOW] <= LINE * BASE_RTT / 8e9
