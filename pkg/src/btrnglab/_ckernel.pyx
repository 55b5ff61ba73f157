# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend: CRC chaining, digest primitives, and the
two brute-force search loops, all in C with the GIL released so
callers can fan the enumeration out over threads.

The module mirrors the pure backend's interface; see _pykernel.py for
the reference semantics.
"""

from libc.stdint cimport int64_t, uint8_t, uint32_t, uint64_t
from libc.string cimport memcpy, memset

import numpy as np

NAME = "compiled"

# -- CRC table --------------------------------------------------------------

cdef uint32_t CRC_TABLE_C[256]

cdef void _init_crc_table() noexcept:
    cdef uint32_t c
    cdef int i, k
    for i in range(256):
        c = <uint32_t> i
        for k in range(8):
            if c & 1:
                c = (c >> 1) ^ 0xEDB88320u
            else:
                c >>= 1
        CRC_TABLE_C[i] = c

_init_crc_table()


cdef inline uint32_t crc_l4_c(uint32_t w) noexcept nogil:
    # Linear CRC image of one bare little-endian word.
    cdef uint32_t c = 0
    cdef int i
    for i in range(4):
        c = (c >> 8) ^ CRC_TABLE_C[(c ^ (w & 0xFFu)) & 0xFFu]
        w >>= 8
    return c


# -- SHA-1 ------------------------------------------------------------------

cdef struct Sha1Ctx:
    uint32_t st[5]
    uint8_t buf[64]
    size_t buflen
    uint64_t total

cdef inline uint32_t _rotl(uint32_t x, int n) noexcept nogil:
    return (x << n) | (x >> (32 - n))

cdef void sha1_init(Sha1Ctx *ctx) noexcept nogil:
    ctx.st[0] = 0x67452301u
    ctx.st[1] = 0xEFCDAB89u
    ctx.st[2] = 0x98BADCFEu
    ctx.st[3] = 0x10325476u
    ctx.st[4] = 0xC3D2E1F0u
    ctx.buflen = 0
    ctx.total = 0

cdef void sha1_compress(uint32_t *st, const uint8_t *block) noexcept nogil:
    cdef uint32_t w[80]
    cdef uint32_t a, b, c, d, e, f, k, tmp
    cdef int t
    for t in range(16):
        w[t] = (
            (<uint32_t> block[4 * t] << 24)
            | (<uint32_t> block[4 * t + 1] << 16)
            | (<uint32_t> block[4 * t + 2] << 8)
            | (<uint32_t> block[4 * t + 3])
        )
    for t in range(16, 80):
        w[t] = _rotl(w[t - 3] ^ w[t - 8] ^ w[t - 14] ^ w[t - 16], 1)
    a, b, c, d, e = st[0], st[1], st[2], st[3], st[4]
    for t in range(80):
        if t < 20:
            f = (b & c) | ((~b) & d)
            k = 0x5A827999u
        elif t < 40:
            f = b ^ c ^ d
            k = 0x6ED9EBA1u
        elif t < 60:
            f = (b & c) | (b & d) | (c & d)
            k = 0x8F1BBCDCu
        else:
            f = b ^ c ^ d
            k = 0xCA62C1D6u
        tmp = _rotl(a, 5) + f + e + k + w[t]
        e = d
        d = c
        c = _rotl(b, 30)
        b = a
        a = tmp
    st[0] += a
    st[1] += b
    st[2] += c
    st[3] += d
    st[4] += e

cdef void sha1_update(Sha1Ctx *ctx, const uint8_t *data, size_t n) noexcept nogil:
    cdef size_t take
    ctx.total += n
    while n > 0:
        if ctx.buflen == 0 and n >= 64:
            sha1_compress(ctx.st, data)
            data += 64
            n -= 64
            continue
        take = 64 - ctx.buflen
        if take > n:
            take = n
        memcpy(&ctx.buf[ctx.buflen], data, take)
        ctx.buflen += take
        data += take
        n -= take
        if ctx.buflen == 64:
            sha1_compress(ctx.st, ctx.buf)
            ctx.buflen = 0

cdef void sha1_final(Sha1Ctx *ctx, uint8_t *out20) noexcept nogil:
    cdef uint64_t bits = ctx.total * 8
    cdef int i
    ctx.buf[ctx.buflen] = 0x80
    ctx.buflen += 1
    if ctx.buflen > 56:
        memset(&ctx.buf[ctx.buflen], 0, 64 - ctx.buflen)
        sha1_compress(ctx.st, ctx.buf)
        ctx.buflen = 0
    memset(&ctx.buf[ctx.buflen], 0, 56 - ctx.buflen)
    for i in range(8):
        ctx.buf[56 + i] = <uint8_t> (bits >> (56 - 8 * i))
    sha1_compress(ctx.st, ctx.buf)
    for i in range(5):
        out20[4 * i] = <uint8_t> (ctx.st[i] >> 24)
        out20[4 * i + 1] = <uint8_t> (ctx.st[i] >> 16)
        out20[4 * i + 2] = <uint8_t> (ctx.st[i] >> 8)
        out20[4 * i + 3] = <uint8_t> ctx.st[i]


# -- SHA-256 ----------------------------------------------------------------

cdef uint32_t SHA256_K[64]
cdef uint32_t SHA256_INIT[8]

cdef void _init_sha256_tables() noexcept:
    cdef list k = [
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5,
        0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
        0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
        0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
        0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc,
        0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
        0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
        0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
        0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
        0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
        0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3,
        0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
        0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5,
        0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
        0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
        0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
    ]
    cdef list init = [
        0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
        0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19,
    ]
    cdef int i
    for i in range(64):
        SHA256_K[i] = <uint32_t> k[i]
    for i in range(8):
        SHA256_INIT[i] = <uint32_t> init[i]

_init_sha256_tables()


cdef inline uint32_t _rotr(uint32_t x, int n) noexcept nogil:
    return (x >> n) | (x << (32 - n))

cdef void sha256_compress(uint32_t *st, const uint8_t *block) noexcept nogil:
    cdef uint32_t w[64]
    cdef uint32_t a, b, c, d, e, f, g, h, s0, s1, t1, t2
    cdef int t
    for t in range(16):
        w[t] = (
            (<uint32_t> block[4 * t] << 24)
            | (<uint32_t> block[4 * t + 1] << 16)
            | (<uint32_t> block[4 * t + 2] << 8)
            | (<uint32_t> block[4 * t + 3])
        )
    for t in range(16, 64):
        s0 = _rotr(w[t - 15], 7) ^ _rotr(w[t - 15], 18) ^ (w[t - 15] >> 3)
        s1 = _rotr(w[t - 2], 17) ^ _rotr(w[t - 2], 19) ^ (w[t - 2] >> 10)
        w[t] = w[t - 16] + s0 + w[t - 7] + s1
    a, b, c, d = st[0], st[1], st[2], st[3]
    e, f, g, h = st[4], st[5], st[6], st[7]
    for t in range(64):
        s1 = _rotr(e, 6) ^ _rotr(e, 11) ^ _rotr(e, 25)
        t1 = h + s1 + ((e & f) ^ ((~e) & g)) + SHA256_K[t] + w[t]
        s0 = _rotr(a, 2) ^ _rotr(a, 13) ^ _rotr(a, 22)
        t2 = s0 + ((a & b) ^ (a & c) ^ (b & c))
        h = g
        g = f
        f = e
        e = d + t1
        d = c
        c = b
        b = a
        a = t1 + t2
    st[0] += a
    st[1] += b
    st[2] += c
    st[3] += d
    st[4] += e
    st[5] += f
    st[6] += g
    st[7] += h


cdef struct Sha256Ctx:
    uint32_t st[8]
    uint8_t buf[64]
    size_t buflen
    uint64_t total

cdef void sha256_init_ctx(Sha256Ctx *ctx) noexcept nogil:
    cdef int i
    for i in range(8):
        ctx.st[i] = SHA256_INIT[i]
    ctx.buflen = 0
    ctx.total = 0

cdef void sha256_update(Sha256Ctx *ctx, const uint8_t *data, size_t n) noexcept nogil:
    cdef size_t take
    ctx.total += n
    while n > 0:
        if ctx.buflen == 0 and n >= 64:
            sha256_compress(ctx.st, data)
            data += 64
            n -= 64
            continue
        take = 64 - ctx.buflen
        if take > n:
            take = n
        memcpy(&ctx.buf[ctx.buflen], data, take)
        ctx.buflen += take
        data += take
        n -= take
        if ctx.buflen == 64:
            sha256_compress(ctx.st, ctx.buf)
            ctx.buflen = 0

cdef void sha256_final(Sha256Ctx *ctx, uint8_t *out32) noexcept nogil:
    cdef uint64_t bits = ctx.total * 8
    cdef int i
    ctx.buf[ctx.buflen] = 0x80
    ctx.buflen += 1
    if ctx.buflen > 56:
        memset(&ctx.buf[ctx.buflen], 0, 64 - ctx.buflen)
        sha256_compress(ctx.st, ctx.buf)
        ctx.buflen = 0
    memset(&ctx.buf[ctx.buflen], 0, 56 - ctx.buflen)
    for i in range(8):
        ctx.buf[56 + i] = <uint8_t> (bits >> (56 - 8 * i))
    sha256_compress(ctx.st, ctx.buf)
    for i in range(8):
        out32[4 * i] = <uint8_t> (ctx.st[i] >> 24)
        out32[4 * i + 1] = <uint8_t> (ctx.st[i] >> 16)
        out32[4 * i + 2] = <uint8_t> (ctx.st[i] >> 8)
        out32[4 * i + 3] = <uint8_t> ctx.st[i]


cdef void hmac_sha256_c(const uint8_t *key, size_t keylen,
                        const uint8_t *msg, size_t n,
                        uint8_t *out32) noexcept nogil:
    # keylen must be <= 64 (always true here: 16-byte nonces).
    cdef uint8_t pad[64]
    cdef uint8_t inner[32]
    cdef Sha256Ctx ctx
    cdef int i
    for i in range(64):
        pad[i] = 0x36
    for i in range(<int> keylen):
        pad[i] = key[i] ^ 0x36
    sha256_init_ctx(&ctx)
    sha256_update(&ctx, pad, 64)
    sha256_update(&ctx, msg, n)
    sha256_final(&ctx, inner)
    for i in range(64):
        pad[i] = 0x5C
    for i in range(<int> keylen):
        pad[i] = key[i] ^ 0x5C
    sha256_init_ctx(&ctx)
    sha256_update(&ctx, pad, 64)
    sha256_update(&ctx, inner, 32)
    sha256_final(&ctx, out32)


# -- splitmix64 -------------------------------------------------------------

cdef inline uint64_t _splitmix_out(uint64_t *state) noexcept nogil:
    cdef uint64_t z
    state[0] = state[0] + <uint64_t> 0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t> 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t> 0x94D049BB133111EB
    return z ^ (z >> 31)


# -- Python-visible primitives ---------------------------------------------

def crc_word(words):
    """Vectorized linear CRC image of bare little-endian words
    (the chain-step operator)."""
    arr = np.ascontiguousarray(np.asarray(words, dtype=np.uint32))
    shape = arr.shape
    flat = arr.ravel()
    out = np.empty(flat.size, dtype=np.uint32)
    cdef const uint32_t[::1] src = flat
    cdef uint32_t[::1] dst = out
    cdef Py_ssize_t i, n = src.shape[0]
    with nogil:
        for i in range(n):
            dst[i] = crc_l4_c(src[i])
    return out.reshape(shape)


def xor_product(base, lists):
    """All XOR combinations of one element per list, xored with base.
    C order: the first list is the outermost loop."""
    if len(lists) > 8:
        raise ValueError("at most eight lists supported")
    arrs = [np.ascontiguousarray(np.asarray(l, dtype=np.uint32)) for l in lists]
    cdef Py_ssize_t total = 1
    cdef int nlists = len(arrs)
    for a in arrs:
        total *= a.size
    out = np.empty(total, dtype=np.uint32)
    if total == 0 or nlists == 0:
        if nlists == 0:
            out = np.array([base], dtype=np.uint32)
        return out
    cdef const uint32_t *ptrs[8]
    cdef Py_ssize_t sizes[8]
    cdef const uint32_t[::1] mv
    cdef int d
    views = []
    for d in range(nlists):
        mv = arrs[d]
        views.append(mv)
        ptrs[d] = &mv[0]
        sizes[d] = mv.shape[0]
    cdef uint32_t[::1] dst = out
    cdef Py_ssize_t idx[8]
    cdef uint32_t acc[9]
    cdef Py_ssize_t flat = 0
    cdef uint32_t basec = <uint32_t> (base & 0xFFFFFFFF)
    cdef int e
    with nogil:
        for d in range(nlists):
            idx[d] = 0
        acc[0] = basec
        for d in range(nlists):
            acc[d + 1] = acc[d] ^ ptrs[d][0]
        while True:
            dst[flat] = acc[nlists]
            flat += 1
            # odometer increment, rightmost digit fastest
            d = nlists - 1
            while d >= 0:
                idx[d] += 1
                if idx[d] < sizes[d]:
                    break
                idx[d] = 0
                d -= 1
            if d < 0:
                break
            for e in range(d, nlists):
                acc[e + 1] = acc[e] ^ ptrs[e][idx[e]]
    return out


def splitmix64(state):
    """One step of the shared candidate generator; parity with the
    pure backend."""
    cdef uint64_t s = <uint64_t> (state & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t out = _splitmix_out(&s)
    return s, out


def sha1_digest(data):
    cdef const uint8_t[::1] msg = bytes(data)
    cdef uint8_t out[20]
    cdef Sha1Ctx ctx
    sha1_init(&ctx)
    if msg.shape[0] > 0:
        sha1_update(&ctx, &msg[0], msg.shape[0])
    sha1_final(&ctx, out)
    return bytes(out[:20])


def sha256_digest(data):
    cdef const uint8_t[::1] msg = bytes(data)
    cdef uint8_t out[32]
    cdef Sha256Ctx ctx
    sha256_init_ctx(&ctx)
    if msg.shape[0] > 0:
        sha256_update(&ctx, &msg[0], msg.shape[0])
    sha256_final(&ctx, out)
    return bytes(out[:32])


def hmac_sha256(key, msg):
    key = bytes(key)
    if len(key) > 64:
        raise ValueError("key longer than one block is not supported")
    cdef const uint8_t[::1] k = key
    cdef const uint8_t[::1] m = bytes(msg)
    cdef uint8_t out[32]
    hmac_sha256_c(
        &k[0] if k.shape[0] else NULL,
        k.shape[0],
        &m[0] if m.shape[0] else NULL,
        m.shape[0],
        out,
    )
    return bytes(out[:32])


# -- brute-force search loops ----------------------------------------------

cdef int64_t _scan_nb(
    uint32_t out1, uint32_t base,
    const uint32_t[::1] l0, const uint32_t[::1] l1, const uint32_t[::1] l2,
    const uint32_t[::1] l3, const uint32_t[::1] l4, const uint32_t[::1] l5,
    const uint8_t[::1] cb, const uint8_t[::1] pk_b, const uint8_t[::1] pk_e,
    uint8_t z, int steps,
    int64_t *tried, uint8_t *nb_out,
    const uint64_t[::1] stopbuf,
) noexcept nogil:
    cdef Py_ssize_t n0 = l0.shape[0], n1 = l1.shape[0], n2 = l2.shape[0]
    cdef Py_ssize_t n3 = l3.shape[0], n4 = l4.shape[0], n5 = l5.shape[0]
    cdef Py_ssize_t i0, i1, i2, i3, i4, i5
    cdef uint32_t v0, v1, v2, v3, v4, w1, cur, prev, nxt
    cdef uint8_t msg[64]
    cdef uint8_t fixed[65]
    cdef uint8_t digest20[20]
    cdef uint8_t tag[32]
    cdef Sha1Ctx s1
    cdef int k, j, ok
    cdef Py_ssize_t b

    for j in range(32):
        fixed[j] = pk_b[j]
        fixed[32 + j] = pk_e[j]
    fixed[64] = z

    for i0 in range(n0):
        if stopbuf is not None and stopbuf[0]:
            return -1
        v0 = out1 ^ base ^ l0[i0]
        for i1 in range(n1):
            v1 = v0 ^ l1[i1]
            for i2 in range(n2):
                if stopbuf is not None and stopbuf[0]:
                    return -1
                v2 = v1 ^ l2[i2]
                for i3 in range(n3):
                    v3 = v2 ^ l3[i3]
                    for i4 in range(n4):
                        v4 = v3 ^ l4[i4]
                        for i5 in range(n5):
                            w1 = v4 ^ l5[i5]
                            prev = out1
                            cur = w1
                            msg[0] = <uint8_t> cur
                            msg[1] = <uint8_t> (cur >> 8)
                            msg[2] = <uint8_t> (cur >> 16)
                            msg[3] = <uint8_t> (cur >> 24)
                            for k in range(1, steps):
                                nxt = cur ^ crc_l4_c(cur ^ prev)
                                prev = cur
                                cur = nxt
                                b = 4 * k
                                msg[b] = <uint8_t> cur
                                msg[b + 1] = <uint8_t> (cur >> 8)
                                msg[b + 2] = <uint8_t> (cur >> 16)
                                msg[b + 3] = <uint8_t> (cur >> 24)
                            sha1_init(&s1)
                            sha1_update(&s1, msg, 4 * steps)
                            sha1_final(&s1, digest20)
                            hmac_sha256_c(digest20, 16, fixed, 65, tag)
                            tried[0] += 1
                            ok = 1
                            for j in range(16):
                                if tag[j] != cb[j]:
                                    ok = 0
                                    break
                            if ok:
                                for j in range(16):
                                    nb_out[j] = digest20[j]
                                return (
                                    (((i0 * n1 + i1) * n2 + i2) * n3 + i3)
                                    * n4 + i4
                                ) * n5 + i5
    return -1


def search_nb(out1, base, lists, cb, pk_b, pk_e, z=b"\x00", steps=16,
              stop=None, tile=0):
    """See _pykernel.search_nb; identical contract."""
    if len(lists) != 6:
        raise ValueError("expected six difference lists")
    if steps < 1 or steps > 16:
        raise ValueError("steps must be in 1..16")
    cb = bytes(cb)
    pk_b = bytes(pk_b)
    pk_e = bytes(pk_e)
    z = bytes(z)
    if len(cb) != 16 or len(pk_b) != 32 or len(pk_e) != 32 or len(z) != 1:
        raise ValueError("operand widths: cb 16, pk 32/32, z 1")
    arrs = [np.ascontiguousarray(np.asarray(l, dtype=np.uint32)) for l in lists]
    cdef const uint32_t[::1] l0 = arrs[0]
    cdef const uint32_t[::1] l1 = arrs[1]
    cdef const uint32_t[::1] l2 = arrs[2]
    cdef const uint32_t[::1] l3 = arrs[3]
    cdef const uint32_t[::1] l4 = arrs[4]
    cdef const uint32_t[::1] l5 = arrs[5]
    cdef const uint8_t[::1] cbv = cb
    cdef const uint8_t[::1] pbv = pk_b
    cdef const uint8_t[::1] pev = pk_e
    cdef const uint64_t[::1] stopbuf = None
    stop_arr = getattr(stop, "buf", None)
    if stop_arr is not None:
        stopbuf = np.ascontiguousarray(stop_arr, dtype=np.uint64)
    cdef int64_t tried = 0
    cdef uint8_t nb_out[16]
    cdef uint32_t out1c = <uint32_t> (out1 & 0xFFFFFFFF)
    cdef uint32_t basec = <uint32_t> (base & 0xFFFFFFFF)
    cdef uint8_t zc = z[0]
    cdef int stepsc = steps
    cdef int64_t found
    with nogil:
        found = _scan_nb(out1c, basec, l0, l1, l2, l3, l4, l5,
                         cbv, pbv, pev, zc, stepsc, &tried, nb_out, stopbuf)
    if found < 0:
        return -1, tried, None
    return found, tried, bytes(nb_out[:16])


def search_g_collision(prefix, nb, target, seed, budget, stop=None):
    """See _pykernel.search_g_collision; identical contract, except the
    prefix must be whole 64-byte blocks (it always is: two public
    keys)."""
    prefix = bytes(prefix)
    nb = bytes(nb)
    if len(prefix) % 64 != 0:
        raise ValueError("prefix must be a multiple of 64 bytes")
    if len(nb) != 16:
        raise ValueError("nb must be 16 bytes")
    cdef Sha256Ctx mid
    cdef const uint8_t[::1] pv = prefix
    cdef int nblocks = len(prefix) // 64
    cdef int i
    sha256_init_ctx(&mid)
    for i in range(nblocks):
        sha256_compress(mid.st, &pv[64 * i])
    cdef uint64_t bits = <uint64_t> (len(prefix) + 32) * 8
    cdef uint8_t block[64]
    cdef const uint8_t[::1] nbv = nb
    memset(block, 0, 64)
    for i in range(16):
        block[16 + i] = nbv[i]
    block[32] = 0x80
    for i in range(8):
        block[56 + i] = <uint8_t> (bits >> (56 - 8 * i))
    cdef const uint64_t[::1] stopbuf = None
    stop_arr = getattr(stop, "buf", None)
    if stop_arr is not None:
        stopbuf = np.ascontiguousarray(stop_arr, dtype=np.uint64)
    cdef uint64_t state = <uint64_t> (seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t a, b
    cdef uint32_t st[8]
    cdef uint32_t targetc = <uint32_t> target
    cdef int64_t budgetc = budget
    cdef int64_t trial = 0
    cdef int found = 0
    cdef int j
    with nogil:
        while trial < budgetc:
            trial += 1
            if stopbuf is not None and (trial & 0xFFF) == 0 and stopbuf[0]:
                break
            a = _splitmix_out(&state)
            b = _splitmix_out(&state)
            for j in range(8):
                block[j] = <uint8_t> (a >> (8 * j))
                block[8 + j] = <uint8_t> (b >> (8 * j))
            for j in range(8):
                st[j] = mid.st[j]
            sha256_compress(st, block)
            if st[0] % 1000000u == targetc:
                found = 1
                break
    if not found:
        return None, trial
    cand = bytes([block[j] for j in range(16)])
    return cand, trial
