"""Simulated chip-external world: the Bluetooth clock, the hardware
clock, and the radio-status registers the software generator samples.

Register values are empirical draws from shipped histograms, not a
radio model. The non-clock registers are sticky: they hold their value
for a geometric dwell measured in slots and only redraw as time
advances, matching how slowly they move on real hardware. Reading them
never perturbs them; radio activity does, and radio activity is what
the clock tick stands in for.
"""

import random
from dataclasses import dataclass, field
from importlib import resources

from .crypto import derive_seed
from .errors import DistributionFormatError, ValidationError

#: Slot length of the piconet clock, microseconds.
SLOT_US = 312.5
#: Hardware-clock ticks per piconet slot on the measured platform.
HW_TICKS_PER_SLOT = 205

#: Sampling order fixed so seeded runs are reproducible.
NONCLOCK_REGISTERS = (
    "dc_fhout",
    "agcStatus",
    "rxInitAngle",
    "spurFreqErr1",
    "rxPskPhErr5",
)

#: Registers whose boot-time coin decides between a constant value and
#: the spread part of their histogram: name -> (constant value, p).
DEFAULT_BOOT_CONSTANT = {"agcStatus": (0x0C00, 0.5)}


@dataclass(frozen=True)
class RegisterSnapshot:
    """One read of all seven generator input registers."""

    dc_nbtc_clk: int
    timer1value: int
    dc_fhout: int
    agcStatus: int
    rxInitAngle: int
    spurFreqErr1: int
    rxPskPhErr5: int

    def nonclock_tuple(self):
        return (
            self.dc_fhout,
            self.agcStatus,
            self.rxInitAngle,
            self.spurFreqErr1,
            self.rxPskPhErr5,
        )


class ValueTable:
    """Weighted value table for one register."""

    def __init__(self, name, pairs):
        if not pairs:
            raise ValidationError("register %s has an empty value table" % name)
        total = 0.0
        for value, weight in pairs:
            if weight < 0:
                raise ValidationError(
                    "register %s: negative weight %r for value %#x"
                    % (name, weight, value)
                )
            total += weight
        if total <= 0:
            raise ValidationError("register %s: weights sum to zero" % name)
        self.name = name
        self.values = [v for v, _ in pairs]
        self.weights = [w for _, w in pairs]
        self.total = total
        self.cum_weights = []
        acc = 0.0
        for w in self.weights:
            acc += w
            self.cum_weights.append(acc)

    def probabilities(self):
        return {v: w / self.total for v, w in zip(self.values, self.weights)}

    def draw(self, rng):
        return rng.choices(self.values, cum_weights=self.cum_weights, k=1)[0]

    def without(self, value):
        pairs = [(v, w) for v, w in zip(self.values, self.weights) if v != value]
        return ValueTable(self.name, pairs)


class RegisterDistribution:
    """Per-register value tables plus the persistence behavior.

    mode "sticky": each register redraws with redraw_probability per
    elapsed slot (a geometric dwell in time), otherwise keeps its
    value; sampling alone never changes anything. mode "per-call":
    every sample is a fresh draw, losing the dwell structure.
    """

    def __init__(self, tables, mode="sticky", redraw_probability=1.0 / 4096,
                 boot_constant=None):
        missing = [n for n in NONCLOCK_REGISTERS if n not in tables]
        if missing:
            raise ValidationError("missing register tables: %s" % ", ".join(missing))
        if mode not in ("sticky", "per-call"):
            raise ValidationError("unknown persistence mode %r" % (mode,))
        if not 0 < redraw_probability <= 1:
            raise ValidationError("redraw probability out of (0, 1]")
        self.tables = dict(tables)
        self.mode = mode
        self.redraw_probability = redraw_probability
        self.boot_constant = (
            dict(DEFAULT_BOOT_CONSTANT) if boot_constant is None else dict(boot_constant)
        )

    def support(self, name):
        return list(self.tables[name].values)


def _parse_int(text):
    return int(text, 0)


def parse_distribution(text, mode="sticky", redraw_probability=1.0 / 4096):
    """Parse the distribution file format: [register] sections holding
    "value weight" pairs."""
    tables = {}
    section = None
    pairs = []

    def close_section():
        if section is not None:
            tables[section] = ValueTable(section, pairs)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            close_section()
            section = line[1:-1].strip()
            if not section:
                raise DistributionFormatError("empty section name", line=lineno)
            pairs = []
            continue
        if section is None:
            raise DistributionFormatError(
                "value line before any [register] section", line=lineno
            )
        parts = line.split()
        if len(parts) != 2:
            raise DistributionFormatError(
                "expected 'value weight', got %r" % raw.strip(), line=lineno
            )
        try:
            value = _parse_int(parts[0])
        except ValueError:
            raise DistributionFormatError(
                "bad value literal %r" % parts[0], line=lineno
            ) from None
        try:
            weight = float(parts[1])
        except ValueError:
            raise DistributionFormatError(
                "bad weight literal %r" % parts[1], line=lineno
            ) from None
        pairs.append((value, weight))
    close_section()
    return RegisterDistribution(tables, mode=mode, redraw_probability=redraw_probability)


def load_distribution(source, **kwargs):
    """Load a RegisterDistribution from a path or file object."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    return parse_distribution(text, **kwargs)


def default_distribution(**kwargs):
    """The shipped register histograms."""
    text = resources.files(__package__).joinpath("data/s8_registers.dist").read_text(
        encoding="utf-8"
    )
    return parse_distribution(text, **kwargs)


class ChipEnvironment:
    """Clocks plus seeded register sampling; one instance per device.

    The piconet clock advances once per 312.5 us slot, the hardware
    clock 205 times per slot. Register stickiness state lives here so
    two environments with equal seeds and schedules replay identically.
    """

    def __init__(self, seed=0, distribution=None, bt_clock=0, hw_clock=0,
                 hw_ticks_per_bt_slot=HW_TICKS_PER_SLOT, hw_clock_bits=32):
        if hw_clock_bits not in (16, 32):
            raise ValidationError("hardware clock width must be 16 or 32 bits")
        self.distribution = distribution or default_distribution()
        self.rng_seed = seed
        self.hw_ticks_per_bt_slot = hw_ticks_per_bt_slot
        self.hw_clock_bits = hw_clock_bits
        self._hw_mask = (1 << hw_clock_bits) - 1
        self.bt_clock = bt_clock & 0xFFFFFFFF
        self.hw_clock = hw_clock & self._hw_mask
        self.time_now = 0.0
        self._rng = random.Random(derive_seed("chip-env", seed))
        self.attached_cores = []
        self._boot_modes = {}
        for name, (const, p) in self.distribution.boot_constant.items():
            self._boot_modes[name] = "constant" if self._rng.random() < p else "spread"
        self._current = {}
        for name in NONCLOCK_REGISTERS:
            self._current[name] = self._draw(name)

    def _draw(self, name):
        table = self.distribution.tables[name]
        mode = self._boot_modes.get(name)
        if mode == "constant":
            return self.distribution.boot_constant[name][0]
        if mode == "spread":
            table = table.without(self.distribution.boot_constant[name][0])
        return table.draw(self._rng)

    def attach(self, core):
        self.attached_cores.append(core)
        return core

    def tick(self, slots=1):
        """Advance the clocks by whole piconet slots; sticky registers
        may redraw while time passes."""
        if slots < 0:
            raise ValidationError("cannot tick backwards")
        self.bt_clock = (self.bt_clock + slots) & 0xFFFFFFFF
        self.hw_clock = (self.hw_clock + slots * self.hw_ticks_per_bt_slot) & self._hw_mask
        self.time_now += slots * SLOT_US
        if self.distribution.mode == "sticky" and slots > 0:
            # P(no redraw over k slots) = (1-p)^k; several redraws in
            # one span collapse to the last, i.e. one fresh draw.
            stay = (1.0 - self.distribution.redraw_probability) ** slots
            for name in NONCLOCK_REGISTERS:
                if self._rng.random() >= stay:
                    self._current[name] = self._draw(name)
        return self

    def sample_registers(self):
        """Read all seven generator inputs at the current instant."""
        if self.distribution.mode == "per-call":
            for name in NONCLOCK_REGISTERS:
                self._current[name] = self._draw(name)
        return RegisterSnapshot(
            dc_nbtc_clk=self.bt_clock,
            timer1value=self.hw_clock,
            dc_fhout=self._current["dc_fhout"],
            agcStatus=self._current["agcStatus"],
            rxInitAngle=self._current["rxInitAngle"],
            spurFreqErr1=self._current["spurFreqErr1"],
            rxPskPhErr5=self._current["rxPskPhErr5"],
        )

    def peek_registers(self):
        """Current register values without advancing stickiness state."""
        return RegisterSnapshot(
            dc_nbtc_clk=self.bt_clock,
            timer1value=self.hw_clock,
            **{name: self._current[name] for name in NONCLOCK_REGISTERS},
        )

    def crash_reset(self):
        """Model the known firmware crash: the hardware clock restarts
        at the all-ones value, the piconet clock stays synchronized to
        the network, and attached generator cores forget that their
        first call already happened."""
        self.hw_clock = 0xFFFFFFFF & self._hw_mask
        for core in self.attached_cores:
            core.reset_first_use()
        return self

    def force_hw_clock(self, value):
        """Pin the hardware clock to an arbitrary value (experiment
        control; real time is unaffected)."""
        self.hw_clock = value & self._hw_mask
        return self

    def force_register(self, name, value):
        """Pin one non-clock register to an arbitrary value, bypassing
        the distribution (experiment control)."""
        if name not in NONCLOCK_REGISTERS:
            raise ValidationError("unknown register %r" % (name,))
        self._current[name] = value
        return self

    @property
    def slow_time_register(self):
        """Counter a minimal fallback variant reads instead of the
        hardware clock; it advances every 5 ms."""
        return int(self.time_now // 5000.0) & 0xFFFFFFFF


def tick(env, slots=1):
    return env.tick(slots)


def sample_registers(env):
    return env.sample_registers()


def crash_reset(env):
    return env.crash_reset()
