"""CRC-32 with its affine algebra, plus the hash and commitment
primitives the rest of the package builds on.

The CRC convention used throughout: reflected polynomial 0xEDB88320,
bytes processed LSB first, the initial register value passed in
explicitly, and no final complement. zlib implements the same core
with a complement baked in at both ends, so we conjugate it away
instead of carrying our own table.
"""

import hashlib
import hmac
import struct
import zlib
from dataclasses import dataclass

from .errors import WidthError

CRC_IV = 0xFFFFFFFF

#: Block length of the steady-state software-generator input, bytes.
BLOCK_LEN_STEADY = 0x20
#: Block length of the very first call after boot, bytes.
BLOCK_LEN_FIRST = 0x2C


def crc32_update(iv, data):
    """Run the CRC register over data starting from iv, returning the
    raw register value (no final complement)."""
    return zlib.crc32(bytes(data), (iv ^ 0xFFFFFFFF) & 0xFFFFFFFF) ^ 0xFFFFFFFF


def affine_constant(length):
    """crc32_update(0xFFFFFFFF, zeros(length)).

    This is the constant that makes the CRC affine: for equal-length
    messages, crc(a) ^ crc(b) ^ crc(a ^ b) == affine_constant(len).
    """
    return crc32_update(CRC_IV, bytes(length))


def linear_part(data):
    """The linear component of the CRC map: the register run from zero.

    Leading zero bytes are absorbed without effect, so the linear image
    of a block that is zero everywhere except one word equals the
    linear image of that word followed by the remaining zero tail.
    """
    return zlib.crc32(bytes(data), 0xFFFFFFFF) ^ 0xFFFFFFFF


def word_linear_part(word, position, total_words=8):
    """linear_part of an all-zero word block with one word substituted.

    position counts 32-bit words from the front of the block.
    """
    tail = (total_words - 1 - position) * 4
    return linear_part(struct.pack("<I", word & 0xFFFFFFFF) + bytes(tail))


@dataclass
class Crc32State:
    """Incremental CRC accumulator."""

    register: int = CRC_IV
    length_consumed: int = 0

    def update(self, data):
        self.register = crc32_update(self.register, data)
        self.length_consumed += len(data)
        return self.register


@dataclass(frozen=True)
class CommitmentParams:
    """Width parameters of the pairing commitment and check value."""

    f1_output_bits: int = 128
    display_digits: int = 6
    g_output_bits: int = 32


DEFAULT_COMMITMENT = CommitmentParams()


def hash_digest(algorithm, data):
    """SHA-1 or SHA-256 digest of data."""
    if algorithm not in ("SHA-1", "SHA-256"):
        raise ValueError("unsupported algorithm: %r" % (algorithm,))
    name = "sha1" if algorithm == "SHA-1" else "sha256"
    return hashlib.new(name, bytes(data)).digest()


def _require_width(name, value, width):
    if len(value) != width:
        raise WidthError("%s must be %d bytes, got %d" % (name, width, len(value)))


def commit_f1(u, v, x, z, params=DEFAULT_COMMITMENT):
    """Pairing commitment: keyed MAC under X over U || V || Z, truncated
    to the configured output width (128 bits by default).

    U and V are 32-byte public-key x coordinates, X is the 16-byte
    nonce being committed to, Z is a single byte.
    """
    _require_width("U", u, 32)
    _require_width("V", v, 32)
    _require_width("X", x, 16)
    _require_width("Z", z, 1)
    mac = hmac.digest(bytes(x), bytes(u) + bytes(v) + bytes(z), "sha256")
    return mac[: params.f1_output_bits // 8]


def check_value_g(u, v, x, y, params=DEFAULT_COMMITMENT):
    """Six-digit display value both sides compare during pairing.

    Truncates SHA-256(U || V || X || Y) to 32 bits and reduces modulo
    10^display_digits.
    """
    _require_width("U", u, 32)
    _require_width("V", v, 32)
    _require_width("X", x, 16)
    _require_width("Y", y, 16)
    digest = hashlib.sha256(bytes(u) + bytes(v) + bytes(x) + bytes(y)).digest()
    word = int.from_bytes(digest[: params.g_output_bits // 8], "big")
    return word % (10 ** params.display_digits)


def pack_words(words):
    """Little-endian packing of 32-bit words, the byte order every
    module uses when feeding words to the CRC or a hash."""
    return struct.pack("<%dI" % len(words), *[w & 0xFFFFFFFF for w in words])


def unpack_words(data):
    """Inverse of pack_words."""
    if len(data) % 4:
        raise WidthError("word stream length %d not a multiple of 4" % len(data))
    return list(struct.unpack("<%dI" % (len(data) // 4), bytes(data)))


def derive_seed(label, master):
    """Stable 64-bit sub-seed for the named role under a master seed."""
    packed = (int(master) & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    digest = hashlib.sha256(label.encode() + b"\x00" + packed).digest()
    return int.from_bytes(digest[:8], "little")
