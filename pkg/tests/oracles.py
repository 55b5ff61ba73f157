"""Independent reference implementations used only by the test suite.

Everything here is written the slow, obvious way on purpose. The
production package must agree with these byte-for-byte; the tests never
import production code into this module, so a shared bug cannot hide.
"""

import struct

CRC_POLY_REFLECTED = 0xEDB88320
CRC_IV = 0xFFFFFFFF


def crc32_bitserial(iv, data):
    """CRC-32 one bit at a time: reflected polynomial, LSB first, no
    final complement. The register starts at iv and is returned raw."""
    reg = iv & 0xFFFFFFFF
    for byte in data:
        reg ^= byte
        for _ in range(8):
            if reg & 1:
                reg = (reg >> 1) ^ CRC_POLY_REFLECTED
            else:
                reg >>= 1
    return reg


def affine_constant_oracle(length):
    return crc32_bitserial(CRC_IV, bytes(length))


# Frozen values computed by this module before the production package
# existed. crc32_bitserial(0xFFFFFFFF, b"123456789") complements to
# 0xCBF43926, the textbook CRC-32 check value, which pins the bit order
# and polynomial choice.
CRC_CHECK_123456789 = 0x340BC6D9
AFFINE_CONST_4 = 0xDEBB20E3
AFFINE_CONST_32 = 0xE6F5AA52
AFFINE_CONST_44 = 0x7CDB99E3


def advanced_prng_oracle(snapshot, first_use, prng_store, init_memory):
    """Literal transliteration of the firmware's software fallback.

    snapshot: object with dc_nbtc_clk, timer1value, dc_fhout, agcStatus,
    rxInitAngle, spurFreqErr1, rxPskPhErr5 attributes (32-bit ints).
    Returns (output_word, new_first_use, new_prng_store).

    data_array[0] = *dc_nbtc_clk
    data_array[1] = *timer1value
    data_array[2] = *dc_fhout
    data_array[3] = *agcStatus
    data_array[4] = *rxInitAngle
    data_array[5] = *spurFreqErr1
    data_array[6] = *rxPskPhErr5
    if control == 0: data_array[7] = mm_top copy, len = 0x2c
    else:            data_array[7] = prng_store,  len = 0x20
    result = crc32_update(0xFFFFFFFF, data_array, len)
    """
    data_array = [0] * 11
    data_array[0] = snapshot.dc_nbtc_clk & 0xFFFFFFFF
    data_array[1] = snapshot.timer1value & 0xFFFFFFFF
    data_array[2] = snapshot.dc_fhout & 0xFFFFFFFF
    data_array[3] = snapshot.agcStatus & 0xFFFFFFFF
    data_array[4] = snapshot.rxInitAngle & 0xFFFFFFFF
    data_array[5] = snapshot.spurFreqErr1 & 0xFFFFFFFF
    data_array[6] = snapshot.rxPskPhErr5 & 0xFFFFFFFF
    if first_use:
        # 4 bytes copied from the memory-top pointer, then the hash
        # length covers three more uninitialized stack words.
        words = struct.unpack("<4I", bytes(init_memory))
        data_array[7] = words[0]
        data_array[8] = words[1]
        data_array[9] = words[2]
        data_array[10] = words[3]
        length = 0x2C
    else:
        data_array[7] = prng_store & 0xFFFFFFFF
        length = 0x20
    blob = struct.pack("<11I", *data_array)[:length]
    out = crc32_bitserial(CRC_IV, blob)
    return out, False, out


def minimal_prng_oracle(clock, static_register, static_value):
    """clock ^ ((16 * static_register + 180) << 20) ^ table lookup,
    all arithmetic wrapping at 32 bits."""
    mixed = ((16 * static_register + 180) << 20) & 0xFFFFFFFF
    return (clock ^ mixed ^ static_value[4 * static_register]) & 0xFFFFFFFF


def linear_part_oracle(data):
    """The linear component of the CRC map (zero starting register)."""
    return crc32_bitserial(0, data)


def pack_words_le(words):
    return struct.pack("<%dI" % len(words), *[w & 0xFFFFFFFF for w in words])
