"""The chip's random-number entry point across all five firmware
generations, including hardware-cell register semantics, both software
fallbacks, and the two cache designs.

Variant overview:
  1  hardware cell, minimal clock-based fallback
  2  hardware cell, register-hashing fallback
  3  hardware cell behind a 32-entry cache that never refills after
     the first pass, register-hashing fallback (reduced register set)
  4  no hardware cell mapped at all, register-hashing generator only
  5  hardware cell behind an asynchronously refilled 32-entry cache,
     no software fallback
"""

import configparser
import hashlib
import struct
from dataclasses import dataclass, field

from .crypto import (
    BLOCK_LEN_FIRST,
    BLOCK_LEN_STEADY,
    CRC_IV,
    crc32_update,
    derive_seed,
    hash_digest,
    pack_words,
)
from .errors import AddressRangeError, ConfigurationError, ProtocolLimitError

MAGIC_READY = 0x200FFFFF
STATUS_OK_MASK = 0xFFFFF000
CACHE_SIZE = 32
READ_RAM_LIMIT = 251

EVENT_HRNG = "hrng-read"
EVENT_PRNG = "prng-fallback"
EVENT_CACHE = "cache-hit"

#: Known hardware-cell base addresses and the per-variant defaults.
KNOWN_BASES = (0xE9A00, 0xEA204, 0x314004, 0x352600, 0x602600)
DEFAULT_BASE = {1: 0xE9A00, 2: 0x314004, 3: 0x352600, 4: 0x314004, 5: 0x352600}

#: Reduced register layout used by the later cache variant: the three
#: inputs that are constant in practice are dropped.
REDUCED_DROPS = ("agcStatus", "spurFreqErr1", "rxPskPhErr5")


class HashCounterRng:
    """Deterministic stand-in for the hardware entropy cell: a SHA-256
    counter generator. Uniform-looking, reproducible under a seed."""

    def __init__(self, seed):
        self._key = hashlib.sha256(
            b"hrng-cell" + (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
        ).digest()
        self._counter = 0
        self._pool = b""

    def next_bytes(self, n):
        while len(self._pool) < n:
            block = hashlib.sha256(
                self._key + self._counter.to_bytes(8, "little")
            ).digest()
            self._counter += 1
            self._pool += block
        out, self._pool = self._pool[:n], self._pool[n:]
        return out

    def next_word(self):
        return struct.unpack("<I", self.next_bytes(4))[0]


@dataclass
class RbgRegisterMap:
    """The three memory-mapped hardware-cell registers."""

    base_address: int
    hrng_present: bool = True
    magic_ready: int = MAGIC_READY
    status_ok_mask: int = STATUS_OK_MASK

    @property
    def rbg_control(self):
        return self.base_address

    @property
    def rbg_status(self):
        return self.base_address + 4

    @property
    def rbg_random_num(self):
        return self.base_address + 8

    def status_value(self):
        return self.magic_ready if self.hrng_present else 0

    def status_ok(self):
        # The firmware's availability check: the low 20 status bits
        # must all be set.
        return ((self.status_value() << 12) & 0xFFFFFFFF) == self.status_ok_mask

    def is_ready(self):
        return self.status_value() == self.magic_ready


@dataclass
class PrngInputBlock:
    """The word array hashed by the register-based fallback."""

    words: list
    active_length: int

    def packed(self):
        return pack_words(self.words)[: self.active_length]


class RbgCore:
    """State machine behind the 4-byte random-number call.

    Every return value is stored back into prng_store, whatever path
    produced it; that register is the feedback word of the software
    generator and the root of the output-prediction attack.
    """

    def __init__(self, variant, seed=0, base_address=None, hrng_present=None,
                 init_memory=None, reduced_layout=None, static_register=0,
                 static_value=None, percall_slots=0, ram_size=20480):
        if variant not in (1, 2, 3, 4, 5):
            raise ConfigurationError("unknown firmware variant %r" % (variant,))
        if variant == 4:
            if hrng_present:
                raise ConfigurationError(
                    "variant 4 has no hardware cell mapped; hrng_present "
                    "cannot be true"
                )
            hrng_present = False
        elif variant == 5:
            if hrng_present is False:
                raise ConfigurationError(
                    "variant 5 removed the software fallback; it cannot "
                    "run without the hardware cell"
                )
            hrng_present = True
        elif hrng_present is None:
            hrng_present = True

        self.variant = variant
        self.seed = seed
        self.regmap = RbgRegisterMap(
            base_address=DEFAULT_BASE[variant] if base_address is None else base_address,
            hrng_present=hrng_present,
        )
        self.hrng_source = HashCounterRng(derive_seed("hrng", seed))
        self.prng_store = 0
        self.first_use = True
        if init_memory is None:
            init_memory = bytes(16)
        if len(init_memory) != 16:
            raise ConfigurationError("init_memory must be 16 bytes")
        self.init_memory = bytes(init_memory)
        if reduced_layout is None:
            reduced_layout = variant == 3
        self.reduced_layout = reduced_layout
        self.percall_slots = percall_slots

        self.static_register = static_register
        if static_value is None:
            table_rng = HashCounterRng(derive_seed("static-table", seed))
            static_value = [table_rng.next_word() for _ in range(64)]
        self.static_value = list(static_value)
        if variant == 1 and 4 * static_register >= len(self.static_value):
            raise ConfigurationError(
                "static_value table too short for static_register=%d"
                % static_register
            )

        self.cache = []
        self.cache_alive = variant in (3, 5)
        self._cache_served = 0
        self.call_trace = []
        self.ram = bytearray(ram_size)

        if variant in (3, 5) and self.regmap.hrng_present:
            self._refill_cache()

    # -- hardware-cell path -------------------------------------------------

    def _hrng_word(self):
        # Request a fresh number, poll until ready, read it out. On
        # real silicon this loops petting the watchdog; the simulated
        # cell is ready as soon as it is asked.
        self._control_write(1)
        assert self.regmap.is_ready()
        return self.hrng_source.next_word()

    def _control_write(self, value):
        self._last_control = value

    def _refill_cache(self):
        while len(self.cache) < CACHE_SIZE:
            word = self._hrng_word()
            self.call_trace.append((EVENT_HRNG, word))
            self.cache.append(word)

    # -- fallback paths -----------------------------------------------------

    def build_input_block(self, snapshot):
        """Assemble the word array for the register-hashing fallback
        from a register snapshot and the core's feedback state."""
        if self.reduced_layout:
            regs = [
                snapshot.dc_nbtc_clk,
                snapshot.timer1value,
                snapshot.dc_fhout,
                snapshot.rxInitAngle,
            ]
        else:
            regs = [
                snapshot.dc_nbtc_clk,
                snapshot.timer1value,
                snapshot.dc_fhout,
                snapshot.agcStatus,
                snapshot.rxInitAngle,
                snapshot.spurFreqErr1,
                snapshot.rxPskPhErr5,
            ]
        if self.first_use:
            mem = struct.unpack("<4I", self.init_memory)
            words = regs + list(mem)
        else:
            words = regs + [self.prng_store]
        # One word of feedback (or the memory copy) always counts; the
        # first call additionally hashes the three words of whatever
        # the stack held.
        length = 4 * (len(regs) + (4 if self.first_use else 1))
        return PrngInputBlock(words=words, active_length=length)

    def reset_first_use(self):
        self.first_use = True

    # -- public entry points ------------------------------------------------

    def rbg_rand(self, env):
        """The firmware's central 4-byte random-number call."""
        if self.variant == 5:
            if not self.cache:
                # Deterministic stand-in for the background refill.
                self._refill_cache()
            value = self.cache.pop(0)
            self.call_trace.append((EVENT_CACHE, value))
        elif self.regmap.status_ok():
            if self.variant == 3 and self.cache_alive:
                value = self.cache.pop(0)
                self._cache_served += 1
                self.call_trace.append((EVENT_CACHE, value))
                if self._cache_served >= CACHE_SIZE:
                    # The refill logic is broken: once the initial fill
                    # is consumed the cache never works again.
                    self.cache_alive = False
            else:
                value = self._hrng_word()
                self.call_trace.append((EVENT_HRNG, value))
        else:
            if self.variant == 1:
                value = prng_minimal_next(
                    env.slow_time_register,
                    {
                        "static_register": self.static_register,
                        "static_value": self.static_value,
                    },
                )
            else:
                value = prng_advanced_next(self, env.sample_registers())
            self.call_trace.append((EVENT_PRNG, value))
        self.prng_store = value
        return value

    def sha_get_128b_rand(self, env):
        """16 consecutive generator words hashed down to a 16-byte
        value; the firmware's nonce constructor."""
        words = []
        for i in range(16):
            if i and self.percall_slots:
                env.tick(self.percall_slots)
            words.append(self.rbg_rand(env))
        return hash_digest("SHA-1", pack_words(words))[:16]

    def le_rand(self, env):
        """The 8-byte host-visible random number: two generator words,
        low word first."""
        low = self.rbg_rand(env)
        high = self.rbg_rand(env)
        return pack_words([low, high])

    def read_ram(self, address, length):
        """Transport-limited read of the simulated collection buffer."""
        if length > READ_RAM_LIMIT:
            raise ProtocolLimitError(
                "read of %d bytes exceeds the %d-byte transport limit"
                % (length, READ_RAM_LIMIT)
            )
        if length < 0 or address < 0 or address + length > len(self.ram):
            raise AddressRangeError(
                "read [%d, %d) outside buffer of %d bytes"
                % (address, address + length, len(self.ram))
            )
        return bytes(self.ram[address : address + length])

    def fill_collection_records(self, env, check_byte=0x42, records=4096,
                                offset=0):
        """Model of the measurement patch: store generator words to RAM
        as 4 data bytes plus one check byte per record."""
        need = offset + 5 * records
        if need > len(self.ram):
            self.ram.extend(bytes(need - len(self.ram)))
        pos = offset
        for _ in range(records):
            word = self.rbg_rand(env)
            self.ram[pos : pos + 4] = struct.pack("<I", word)
            self.ram[pos + 4] = check_byte
            pos += 5
        return pos - offset


def prng_advanced_next(core, snapshot):
    """One step of the register-hashing fallback: CRC the input block
    from the firmware IV and feed the result back."""
    block = core.build_input_block(snapshot)
    out = crc32_update(CRC_IV, block.packed())
    core.first_use = False
    core.prng_store = out
    return out


def prng_minimal_next(clock, cfg):
    """One step of the oldest fallback: a static mix of a slow clock
    with two configuration constants."""
    static_register = cfg["static_register"]
    static_value = cfg["static_value"]
    index = 4 * static_register
    if index >= len(static_value):
        raise ConfigurationError(
            "static_value table too short for static_register=%d"
            % static_register
        )
    mixed = ((16 * static_register + 180) << 20) & 0xFFFFFFFF
    return (clock ^ mixed ^ static_value[index]) & 0xFFFFFFFF


def rbg_rand(core, env):
    return core.rbg_rand(env)


def sha_get_128b_rand(core, env):
    return core.sha_get_128b_rand(env)


def le_rand(core, env):
    return core.le_rand(env)


def read_ram(core, address, length):
    return core.read_ram(address, length)


def core_from_config(source):
    """Build an RbgCore from an INI file with a [core] section.

    Recognized keys: variant, seed, base_address, hrng_present,
    reduced_layout, static_register, percall_slots, ram_size.
    """
    parser = configparser.ConfigParser()
    if hasattr(source, "read") and not isinstance(source, (str, bytes)):
        parser.read_file(source)
    else:
        if not parser.read(source):
            raise ConfigurationError("cannot read core config %r" % (source,))
    if "core" not in parser:
        raise ConfigurationError("core config missing [core] section")
    sec = parser["core"]
    kwargs = {"variant": sec.getint("variant", 2), "seed": sec.getint("seed", 0)}
    if "base_address" in sec:
        kwargs["base_address"] = int(sec["base_address"], 0)
    if "hrng_present" in sec:
        kwargs["hrng_present"] = sec.getboolean("hrng_present")
    if "reduced_layout" in sec:
        kwargs["reduced_layout"] = sec.getboolean("reduced_layout")
    if "static_register" in sec:
        kwargs["static_register"] = sec.getint("static_register")
    if "percall_slots" in sec:
        kwargs["percall_slots"] = sec.getint("percall_slots")
    if "ram_size" in sec:
        kwargs["ram_size"] = sec.getint("ram_size")
    return RbgCore(**kwargs)
