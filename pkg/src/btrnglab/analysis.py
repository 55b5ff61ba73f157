"""Statistical quality measurement: chunked sample collection in the
check-byte dump format, a four-test randomness battery, entropy
estimators, and export for external test suites.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CorruptionError,
    FramingError,
    InsufficientDataError,
    ValidationError,
)
from .firmware import EVENT_PRNG, READ_RAM_LIMIT

log = logging.getLogger(__name__)

RECORD_SIZE = 5
CHUNK_RECORDS = 4096
CHUNK_SIZE = RECORD_SIZE * CHUNK_RECORDS
DEFAULT_CHECK_BYTE = 0x42

FIPS_SAMPLE_BITS = 20000
#: Pass bounds transcribed from FIPS PUB 140-2 (2001), section 4.9.1;
#: standard constants, not measurements.
MONOBIT_BOUNDS = (9725, 10275)
POKER_BOUNDS = (2.16, 46.17)
RUNS_BOUNDS = {
    1: (2315, 2685),
    2: (1114, 1386),
    3: (527, 723),
    4: (240, 384),
    5: (103, 209),
    6: (103, 209),  # six or longer
}
LONG_RUN_LIMIT = 26

EXPORT_SIZE_GUIDANCE = 1 << 30


@dataclass
class SampleStream:
    """Check-byte-stripped random payload plus where it came from."""

    data: bytes
    origin: str = "ingested-dump"
    chunk_size: int = CHUNK_SIZE
    record_size: int = RECORD_SIZE
    check_byte: int = DEFAULT_CHECK_BYTE

    def __post_init__(self):
        if self.origin not in ("hrng-sim", "prng-sim", "ingested-dump"):
            raise ValidationError("unknown stream origin %r" % (self.origin,))

    def __len__(self):
        return len(self.data)

    def words(self):
        """Payload as little-endian 32-bit words (trailing partial word
        dropped)."""
        usable = len(self.data) - len(self.data) % 4
        return np.frombuffer(self.data[:usable], dtype="<u4")


def ingest_chunks(raw, check_byte=DEFAULT_CHECK_BYTE):
    """Validate and strip the per-record check bytes of a collected
    dump, returning the 4/5-density payload."""
    raw = bytes(raw)
    if len(raw) % RECORD_SIZE != 0:
        raise FramingError(
            "dump length %d is not a whole number of %d-byte records"
            % (len(raw), RECORD_SIZE)
        )
    if not raw:
        return SampleStream(data=b"", check_byte=check_byte)
    arr = np.frombuffer(raw, dtype=np.uint8).reshape(-1, RECORD_SIZE)
    checks = arr[:, 4]
    bad = np.flatnonzero(checks != check_byte)
    if bad.size:
        index = int(bad[0])
        raise CorruptionError(
            "check byte %#04x != %#04x at record %d"
            % (int(checks[index]), check_byte, index),
            record_index=index,
        )
    return SampleStream(data=arr[:, :4].tobytes(), check_byte=check_byte)


def collect_chunks(core, env, chunks=1, check_byte=DEFAULT_CHECK_BYTE,
                   read_size=READ_RAM_LIMIT - 1):
    """Drive the collection patch end to end: fill the on-chip buffer
    one chunk at a time and fetch it back through the size-limited
    read primitive.

    Returns (raw_dump, stream); the stream is the validated payload and
    its origin reflects whether any fallback output landed in it.
    """
    if chunks < 1:
        raise ValidationError("need at least one chunk")
    trace_mark = len(core.call_trace)
    parts = []
    for _ in range(chunks):
        core.fill_collection_records(env, check_byte=check_byte)
        pos = 0
        while pos < CHUNK_SIZE:
            take = min(read_size, CHUNK_SIZE - pos)
            parts.append(core.read_ram(pos, take))
            pos += take
    raw = b"".join(parts)
    stream = ingest_chunks(raw, check_byte=check_byte)
    events = core.call_trace[trace_mark:]
    stream.origin = (
        "prng-sim" if any(kind == EVENT_PRNG for kind, _ in events) else "hrng-sim"
    )
    return raw, stream


def export_raw(stream, destination, header=False):
    """Write the payload for an external test suite.

    Raw mode emits the bytes verbatim (the raw-file input convention of
    the usual suites); header mode emits the ASCII form with a banner
    and type/count/numbit preamble, one decimal word per line. Returns
    the byte count written.
    """
    payload = stream.data if hasattr(stream, "data") else bytes(stream)
    if not payload:
        log.warning("export skipped: stream is empty")
        return 0
    if len(payload) < EXPORT_SIZE_GUIDANCE:
        log.warning(
            "exporting %d bytes; external suites want at least 1 GB for "
            "meaningful verdicts", len(payload),
        )

    own = not hasattr(destination, "write")
    fh = open(destination, "wb") if own else destination
    try:
        if not header:
            fh.write(payload)
            return len(payload)
        words = np.frombuffer(
            payload[: len(payload) - len(payload) % 4], dtype="<u4"
        )
        lines = [
            b"#==================================================================",
            b"# lab sample export",
            b"#==================================================================",
            b"type: d",
            b"count: %d" % words.size,
            b"numbit: 32",
        ]
        lines.extend(b"%d" % w for w in words)
        blob = b"\n".join(lines) + b"\n"
        fh.write(blob)
        return len(blob)
    finally:
        if own:
            fh.close()


@dataclass
class TestResult:
    """One battery test: verdict is a pure function of the statistic
    and its bounds."""

    name: str
    statistic: float
    bounds: tuple
    open_interval: bool = False
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        lo, hi = self.bounds
        if self.open_interval:
            return lo < self.statistic < hi
        return lo <= self.statistic <= hi


@dataclass
class BatteryReport:
    results: list
    sample_bits: int = FIPS_SAMPLE_BITS

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def result(self, name):
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def lines(self):
        out = []
        for r in self.results:
            out.append(
                "%-8s %-4s statistic=%g bounds=%s"
                % (r.name, "pass" if r.passed else "FAIL", r.statistic, r.bounds)
            )
        out.append("overall  %s" % ("pass" if self.passed else "FAIL"))
        return out


def _run_lengths(bits):
    # (value, length) pairs of the maximal runs in a 0/1 array
    edges = np.flatnonzero(np.diff(bits)) + 1
    starts = np.concatenate(([0], edges))
    ends = np.concatenate((edges, [bits.size]))
    return bits[starts], ends - starts


def fips_battery(stream):
    """Monobit, poker, runs, and long-run tests over the first 20000
    bits, with the standard's pass bounds."""
    payload = stream.data if hasattr(stream, "data") else bytes(stream)
    if len(payload) * 8 < FIPS_SAMPLE_BITS:
        raise InsufficientDataError(
            "battery needs %d bits, got %d" % (FIPS_SAMPLE_BITS, len(payload) * 8)
        )
    bits = np.unpackbits(
        np.frombuffer(payload[: FIPS_SAMPLE_BITS // 8], dtype=np.uint8)
    )

    ones = int(bits.sum())
    monobit = TestResult("monobit", ones, MONOBIT_BOUNDS, open_interval=True)

    nibbles = bits.reshape(-1, 4) @ np.array([8, 4, 2, 1], dtype=np.uint8)
    counts = np.bincount(nibbles, minlength=16)
    n = nibbles.size
    poker_x = 16.0 / n * float((counts.astype(np.float64) ** 2).sum()) - n
    poker = TestResult("poker", poker_x, POKER_BOUNDS, open_interval=True)

    values, lengths = _run_lengths(bits)
    run_counts = {}
    violations = 0
    for bit in (0, 1):
        mine = lengths[values == bit]
        for length, bound in RUNS_BOUNDS.items():
            if length < 6:
                c = int((mine == length).sum())
            else:
                c = int((mine >= 6).sum())
            run_counts["%d-runs len%s" % (bit, length if length < 6 else "6+")] = c
            if not bound[0] <= c <= bound[1]:
                violations += 1
    runs = TestResult("runs", violations, (0, 0), details=run_counts)

    longest = int(lengths.max()) if lengths.size else 0
    long_run = TestResult("long-run", longest, (0, LONG_RUN_LIMIT - 1))

    return BatteryReport(results=[monobit, poker, runs, long_run])


@dataclass
class EntropyReport:
    shannon_bits: float
    min_entropy_bits: float
    difference_entropy_bits: float
    sample_count: int


def _entropy_from_probs(probs):
    h = -sum(p * math.log2(p) for p in probs if p > 0)
    return h if h > 0 else 0.0


def _empirical_entropy(symbols):
    _, counts = np.unique(symbols, return_counts=True)
    probs = counts / counts.sum()
    shannon = float(-(probs * np.log2(probs)).sum())
    min_e = float(-np.log2(probs.max()))
    return (shannon if shannon > 0 else 0.0), (min_e if min_e > 0 else 0.0)


def entropy_report(trace):
    """Frequency-based shannon and min-entropy of a symbol trace plus
    the entropy of its successive XOR differences. The first two are
    permutation-invariant; the difference entropy is order-sensitive
    by construction."""
    arr = np.asarray(list(trace), dtype=np.uint64)
    if arr.size < 2:
        raise InsufficientDataError("need at least two samples")
    shannon, min_e = _empirical_entropy(arr)
    diff_shannon, _ = _empirical_entropy(arr[1:] ^ arr[:-1])
    return EntropyReport(
        shannon_bits=shannon,
        min_entropy_bits=min_e,
        difference_entropy_bits=diff_shannon,
        sample_count=int(arr.size),
    )


def register_difference_entropies(distribution=None):
    """Analytic per-register entropy of the XOR difference between two
    independent draws from the shipped tables; constant registers give
    exactly zero."""
    from .chipenv import NONCLOCK_REGISTERS, default_distribution

    dist = distribution or default_distribution()
    out = {}
    for name in NONCLOCK_REGISTERS:
        probs = dist.tables[name].probabilities()
        acc = {}
        for v1, p1 in probs.items():
            for v2, p2 in probs.items():
                d = v1 ^ v2
                acc[d] = acc.get(d, 0.0) + p1 * p2
        out[name] = _entropy_from_probs(acc.values())
    return out


def joint_difference_entropy(distribution=None):
    """Total difference entropy across the five sampled registers
    (independent per-register model); the guessing budget the
    register part of an attack faces."""
    return sum(register_difference_entropies(distribution).values())


def hrng_stream(seed, nbytes=FIPS_SAMPLE_BITS // 8):
    """Seeded hardware-cell-quality stream for battery calibration."""
    from .firmware import HashCounterRng

    return SampleStream(
        data=HashCounterRng(seed).next_bytes(nbytes), origin="hrng-sim"
    )
