"""Parsing and formatting of unit-suffixed quantities used in run configs.

Three quantity families, all stored as plain ints internally:

* durations   -> integer nanoseconds      ("500ns", "55us", "2.8ms")
* bandwidths  -> integer bits per second  ("200Gbps", "200GBps" = 8x more)
* byte sizes  -> integer bytes            ("32MB", "1.25MB", "64KiB")

Decimal prefixes are powers of 1000, binary prefixes (KiB/MiB/GiB) powers
of 1024.  A lowercase ``b`` means bits, uppercase ``B`` bytes; this is the
difference between "200Gbps" (NIC line rate) and "200GBps" (NVLink-class
scale-up bandwidth), which differ by exactly 8x.
"""

from __future__ import annotations

import re

_NUM = r"([0-9]+(?:\.[0-9]+)?)"

_DURATION_NS = {"ns": 1, "us": 1_000, "ms": 1_000_000, "s": 1_000_000_000}

_BIT_RATE = {
    "bps": 1,
    "Kbps": 10**3,
    "Mbps": 10**6,
    "Gbps": 10**9,
    "Tbps": 10**12,
}

_BYTE_RATE = {
    "Bps": 8,
    "KBps": 8 * 10**3,
    "MBps": 8 * 10**6,
    "GBps": 8 * 10**9,
    "TBps": 8 * 10**12,
}

_BYTES = {
    "B": 1,
    "KB": 10**3,
    "MB": 10**6,
    "GB": 10**9,
    "TB": 10**12,
    "KiB": 1024,
    "MiB": 1024**2,
    "GiB": 1024**3,
}


def _parse(text: str, table: dict[str, int], what: str) -> int:
    text = text.strip()
    m = re.fullmatch(_NUM + r"\s*([A-Za-z]+)", text)
    if not m:
        raise ValueError(f"cannot parse {what} {text!r}")
    value, suffix = m.group(1), m.group(2)
    if suffix not in table:
        raise ValueError(
            f"unknown {what} unit {suffix!r} in {text!r} "
            f"(expected one of {', '.join(sorted(table))})"
        )
    scaled = float(value) * table[suffix]
    result = int(round(scaled))
    if abs(scaled - result) > 1e-6:
        raise ValueError(f"{what} {text!r} is not a whole number of base units")
    return result


def parse_duration_ns(text: str) -> int:
    """'500ns' -> 500, '55us' -> 55_000."""
    return _parse(text, _DURATION_NS, "duration")


def parse_bandwidth_bps(text: str) -> int:
    """'200Gbps' -> 200e9 bits/s; '200GBps' -> 1.6e12 bits/s."""
    if text.strip().endswith("Bps"):
        return _parse(text, _BYTE_RATE, "bandwidth")
    return _parse(text, _BIT_RATE, "bandwidth")


def parse_bytes(text: str) -> int:
    """'32MB' -> 32_000_000, '109.5MB' -> 109_500_000, '4KiB' -> 4096."""
    return _parse(text, _BYTES, "size")


def format_bytes(n: int) -> str:
    for suffix, mult in (("GB", 10**9), ("MB", 10**6), ("KB", 10**3)):
        if n >= mult and n % mult == 0:
            return f"{n // mult}{suffix}"
    return f"{n}B"


def format_bandwidth(bps: int) -> str:
    for suffix, mult in (("Tbps", 10**12), ("Gbps", 10**9), ("Mbps", 10**6)):
        if bps >= mult and bps % mult == 0:
            return f"{bps // mult}{suffix}"
    return f"{bps}bps"


def format_duration(ns: int) -> str:
    for suffix, mult in (("s", 10**9), ("ms", 10**6), ("us", 10**3)):
        if ns >= mult and ns % mult == 0:
            return f"{ns // mult}{suffix}"
    return f"{ns}ns"
