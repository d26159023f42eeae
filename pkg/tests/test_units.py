import pytest

from rocesim.units import (
    format_bandwidth,
    format_bytes,
    format_duration,
    parse_bandwidth_bps,
    parse_bytes,
    parse_duration_ns,
)


def test_durations():
    assert parse_duration_ns("500ns") == 500
    assert parse_duration_ns("55us") == 55_000
    assert parse_duration_ns("2.8ms") == 2_800_000
    assert parse_duration_ns("1s") == 10**9


def test_bits_vs_bytes_bandwidth_differ_by_8x():
    assert parse_bandwidth_bps("200Gbps") == 200 * 10**9
    assert parse_bandwidth_bps("200GBps") == 8 * 200 * 10**9
    assert parse_bandwidth_bps("200GBps") == 8 * parse_bandwidth_bps("200Gbps")


def test_sizes_decimal_and_binary():
    assert parse_bytes("32MB") == 32_000_000
    assert parse_bytes("109.5MB") == 109_500_000
    assert parse_bytes("1.25MB") == 1_250_000
    assert parse_bytes("4KiB") == 4096
    assert parse_bytes("64B") == 64


@pytest.mark.parametrize(
    "text,parser",
    [
        ("12 parsecs", parse_duration_ns),
        ("fast", parse_bandwidth_bps),
        ("32XB", parse_bytes),
        ("", parse_bytes),
        ("1.5B", parse_bytes),  # fractional bytes
    ],
)
def test_rejects_bad_quantities(text, parser):
    with pytest.raises(ValueError):
        parser(text)


def test_formatting_round_trips():
    for n in (64, 400_000, 1_600_000, 32_000_000):
        assert parse_bytes(format_bytes(n)) == n
    for b in (200 * 10**9, 100 * 10**6):
        assert parse_bandwidth_bps(format_bandwidth(b)) == b
    for d in (25, 500, 55_000, 2_800_000):
        assert parse_duration_ns(format_duration(d)) == d
