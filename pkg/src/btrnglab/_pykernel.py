"""Pure-Python/numpy kernel backend.

Mirrors the compiled extension's interface exactly; the package falls
back to this module when the extension is unavailable. Hot loops lean
on numpy for the CRC chaining and on hashlib's C digests, so even this
backend stays within the acceptance budgets, just without the compiled
kernel's headroom.
"""

import hashlib
import hmac
import struct
import zlib

import numpy as np

NAME = "pure"

_MASK64 = (1 << 64) - 1


def _crc32_raw(iv, data):
    return zlib.crc32(data, (iv ^ 0xFFFFFFFF) & 0xFFFFFFFF) ^ 0xFFFFFFFF


#: Byte-indexed CRC table for the reflected polynomial, zero IV.
CRC_TABLE = np.array(
    [_crc32_raw(0, bytes([i])) for i in range(256)], dtype=np.uint32
)


def crc_word(words):
    """Vectorized linear CRC image of bare little-endian 32-bit words
    (the chain-step operator)."""
    w = np.asarray(words, dtype=np.uint32)
    c = CRC_TABLE[(w & 0xFF).astype(np.uint8)]
    for shift in (8, 16, 24):
        byte = ((w >> np.uint32(shift)) & np.uint32(0xFF)).astype(np.uint32)
        c = (c >> np.uint32(8)) ^ CRC_TABLE[(c ^ byte) & np.uint32(0xFF)]
    return c


def xor_product(base, lists):
    """All XOR combinations of one element per list, xored with base.

    Enumeration order is C order: the first list is the outermost
    loop. Returns a flat uint32 array of prod(len(list)) entries.
    """
    out = np.array([base], dtype=np.uint32)
    for lst in lists:
        arr = np.asarray(lst, dtype=np.uint32)
        out = np.bitwise_xor.outer(out, arr).ravel()
    return out


def splitmix64(state):
    """One step of the shared candidate generator. Returns
    (new_state, output); bit-identical across backends."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, (z ^ (z >> 31)) & _MASK64


def _f1_tag(nb, pk_b, pk_e, z):
    return hmac.digest(nb, pk_b + pk_e + z, "sha256")[:16]


def search_nb(out1, base, lists, cb, pk_b, pk_e, z=b"\x00", steps=16,
              stop=None, tile=1 << 16):
    """Enumerate the guess space and return the nonce whose commitment
    matches cb.

    lists: six uint32 arrays of CRC-mapped difference words (timer
    first, then the five register positions) enumerated in C order.
    Returns (found_flat_index, guesses_tried, nonce_bytes_or_None);
    found_flat_index is -1 when the space is exhausted or stop is set.
    """
    t_list = np.asarray(lists[0], dtype=np.uint32)
    combos = xor_product(0, lists[1:])
    n_comb = combos.size
    cb = bytes(cb)
    pk_b, pk_e, z = bytes(pk_b), bytes(pk_e), bytes(z)
    tried = 0
    sha1 = hashlib.sha1
    for ti in range(t_list.size):
        first = np.uint32(out1 ^ base ^ int(t_list[ti]))
        for lo in range(0, n_comb, tile):
            if stop is not None and stop.is_set():
                return -1, tried, None
            chunk = combos[lo : lo + tile]
            n = chunk.size
            words = np.empty((n, steps), dtype="<u4")
            prev = np.full(n, out1, dtype=np.uint32)
            cur = np.bitwise_xor(chunk, first)
            words[:, 0] = cur
            for k in range(1, steps):
                nxt = cur ^ crc_word(cur ^ prev)
                prev = cur
                cur = nxt
                words[:, k] = cur
            blob = words.tobytes()
            for i in range(n):
                nb = sha1(blob[64 * i : 64 * i + 64]).digest()[:16]
                if _f1_tag(nb, pk_b, pk_e, z) == cb:
                    return ti * n_comb + lo + i, tried + i + 1, nb
            tried += n
    return -1, tried, None


def search_g_collision(prefix, nb, target, seed, budget, stop=None):
    """Find a 16-byte value X with
    int(SHA-256(prefix || X || nb)[:4]) % 10^6 == target.

    Candidates come from splitmix64 at the given seed so both backends
    try the identical sequence. Returns (candidate_or_None, trials).
    """
    midstate = hashlib.sha256(bytes(prefix))
    nb = bytes(nb)
    state = seed & _MASK64
    pack = struct.pack
    for trial in range(1, budget + 1):
        if stop is not None and trial % 4096 == 0 and stop.is_set():
            return None, trial
        state, a = splitmix64(state)
        state, b = splitmix64(state)
        cand = pack("<QQ", a, b)
        h = midstate.copy()
        h.update(cand + nb)
        if int.from_bytes(h.digest()[:4], "big") % 1000000 == target:
            return cand, trial
    return None, budget


def sha1_digest(data):
    return hashlib.sha1(bytes(data)).digest()


def sha256_digest(data):
    return hashlib.sha256(bytes(data)).digest()


def hmac_sha256(key, msg):
    key = bytes(key)
    if len(key) > 64:
        raise ValueError("key longer than the sha-256 block")
    return hmac.digest(key, bytes(msg), "sha256")
