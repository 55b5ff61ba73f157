"""Clock and register environment behavior."""

import pytest

from btrnglab.chipenv import (
    NONCLOCK_REGISTERS,
    ChipEnvironment,
    RegisterDistribution,
    ValueTable,
    default_distribution,
    parse_distribution,
)
from btrnglab.errors import DistributionFormatError, ValidationError


def test_value_table_normalizes_and_draws_from_support():
    t = ValueTable("x", [(1, 3.0), (2, 1.0)])
    p = t.probabilities()
    assert p[1] == pytest.approx(0.75)
    assert p[2] == pytest.approx(0.25)


def test_value_table_rejects_garbage():
    with pytest.raises(ValidationError):
        ValueTable("x", [])
    with pytest.raises(ValidationError):
        ValueTable("x", [(1, -1.0)])
    with pytest.raises(ValidationError):
        ValueTable("x", [(1, 0.0)])


COMPLETE_DIST = """
# comment
[dc_fhout]
0x10 2
0x20 1

[agcStatus]
0x0C00 1

[rxInitAngle]
0x01 1
0x02 1

[spurFreqErr1]
0x00 1

[rxPskPhErr5]
0x00 1
"""


def test_parse_distribution_sections_and_errors():
    dist = parse_distribution(COMPLETE_DIST)
    assert set(dist.tables) == set(NONCLOCK_REGISTERS)
    assert dist.tables["dc_fhout"].probabilities()[0x10] == pytest.approx(2 / 3)

    with pytest.raises(DistributionFormatError) as exc:
        parse_distribution("0x10 1\n")  # pairs before any section header
    assert exc.value.line == 1
    with pytest.raises(DistributionFormatError):
        parse_distribution("[dc_fhout]\nnot-a-number 1\n")
    with pytest.raises(DistributionFormatError):
        parse_distribution("[dc_fhout]\n0x10 1 extra\n")
    with pytest.raises(ValidationError):
        parse_distribution("[dc_fhout]\n0x10 1\n")  # misses four registers


def test_default_distribution_covers_all_generator_inputs():
    dist = default_distribution()
    for name in NONCLOCK_REGISTERS:
        assert name in dist.tables
    # the two dead inputs ship as single-value tables
    assert len(dist.support("spurFreqErr1")) == 1
    assert len(dist.support("rxPskPhErr5")) == 1
    assert len(dist.support("dc_fhout")) > 1


def test_tick_advances_all_three_clocks():
    env = ChipEnvironment(seed=0)
    t0 = env.time_now
    env.tick(3)
    assert env.bt_clock == 3
    assert env.hw_clock == 3 * 205
    assert env.time_now - t0 == 3 * 312.5  # 3.2 kHz piconet clock
    with pytest.raises(ValidationError):
        env.tick(-1)


def test_hw_clock_width_is_maskable():
    env16 = ChipEnvironment(seed=0, hw_clock_bits=16, hw_clock=0xFFFF)
    env16.tick(1)
    assert env16.hw_clock == (0xFFFF + 205) & 0xFFFF
    env32 = ChipEnvironment(seed=0, hw_clock_bits=32, hw_clock=0xFFFFFFFF)
    env32.tick(1)
    assert env32.hw_clock == (0xFFFFFFFF + 205) & 0xFFFFFFFF
    with pytest.raises(ValidationError):
        ChipEnvironment(hw_clock_bits=12)


def test_sticky_registers_hold_still_without_radio_activity():
    env = ChipEnvironment(seed=5)
    first = env.sample_registers()
    for _ in range(50):
        snap = env.sample_registers()
        assert snap.nonclock_tuple() == first.nonclock_tuple()


def test_sticky_registers_eventually_move_across_ticks():
    env = ChipEnvironment(seed=5)
    before = env.sample_registers().nonclock_tuple()
    env.tick(200_000)
    after = env.sample_registers().nonclock_tuple()
    assert before != after


def test_per_call_mode_redraws_on_every_sample():
    dist = default_distribution(mode="per-call")
    env = ChipEnvironment(seed=5, distribution=dist)
    seen = {env.sample_registers().dc_fhout for _ in range(64)}
    assert len(seen) > 1


def test_seed_determinism():
    a = ChipEnvironment(seed=9)
    b = ChipEnvironment(seed=9)
    a.tick(10_000)
    b.tick(10_000)
    assert a.sample_registers() == b.sample_registers()


def test_snapshot_fields_and_slow_time_register():
    env = ChipEnvironment(seed=1, bt_clock=100, hw_clock=7)
    snap = env.sample_registers()
    assert snap.dc_nbtc_clk == 100
    assert snap.timer1value == 7
    assert env.slow_time_register == 0
    env.tick(16)  # 16 * 312.5us = 5000us: one slow-register step
    assert env.slow_time_register == 1
    env.tick(15)
    assert env.slow_time_register == 1
    env.tick(1)
    assert env.slow_time_register == 2


def test_crash_reset_pins_hw_clock_and_rearms_first_use():
    class FakeCore:
        def __init__(self):
            self.armed = False

        def reset_first_use(self):
            self.armed = True

    env = ChipEnvironment(seed=2, hw_clock_bits=16)
    core = FakeCore()
    env.attach(core)
    env.tick(123)
    env.crash_reset()
    assert env.hw_clock == 0xFFFF
    assert core.armed


def test_force_helpers_bypass_the_distribution():
    env = ChipEnvironment(seed=3)
    env.force_hw_clock(0xABCDE)
    assert env.hw_clock == 0xABCDE
    env.force_register("dc_fhout", 0x1234)
    assert env.peek_registers().dc_fhout == 0x1234
    with pytest.raises(ValidationError):
        env.force_register("timer1value", 0)


def test_distribution_mode_validation():
    with pytest.raises(ValidationError):
        RegisterDistribution(default_distribution().tables, mode="never")
    with pytest.raises(ValidationError):
        RegisterDistribution(default_distribution().tables, redraw_probability=0)
