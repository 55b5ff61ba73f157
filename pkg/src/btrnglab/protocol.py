"""Message-level simulation of the three protocol contexts the attacks
target: Numeric Comparison pairing, the encryption-start exchange that
leaks raw generator words, and the classic combination-key refresh.

Public keys are opaque 32-byte strings; the pairing math never uses
curve structure, only byte equality inside the commitment and check
value, so a hash of the private key stands in for the x coordinate.
"""

import hashlib
import hmac
import struct
from dataclasses import dataclass, field

from .crypto import check_value_g, commit_f1, pack_words
from .errors import WidthError

RA_RB_ZERO = b"\x00"


@dataclass
class Message:
    """One channel-tap entry. bt_stamp is the sender's piconet clock,
    which an eavesdropper reads off the air for free."""

    sender: str
    receiver: str
    msg_type: str
    payload: bytes
    bt_stamp: int = 0
    note: str = ""

    def line(self):
        extra = " # %s" % self.note if self.note else ""
        return "%s->%s %s %s @%d%s" % (
            self.sender,
            self.receiver,
            self.msg_type,
            self.payload.hex(),
            self.bt_stamp,
            extra,
        )


class ChannelTap:
    """Append-only log of everything sent in plaintext."""

    def __init__(self):
        self.messages = []

    def send(self, sender, receiver, msg_type, payload, bt_stamp=0, note=""):
        msg = Message(sender, receiver, msg_type, bytes(payload), bt_stamp, note)
        self.messages.append(msg)
        return msg

    def lines(self):
        return [m.line() for m in self.messages]

    def export(self, fh):
        for line in self.lines():
            fh.write(line + "\n")


class Device:
    """A chip (generator core plus environment) with a pairing
    identity. Key generation drains the generator four host-visible
    calls in a row before any nonce ever leaves the device."""

    def __init__(self, name, core, env, bd_addr=None):
        self.name = name
        self.core = core
        self.env = env
        env.attach(core)
        if bd_addr is None:
            bd_addr = hashlib.sha256(b"bd-addr" + name.encode()).digest()[:6]
        self.bd_addr = bytes(bd_addr)
        self.private_key = None
        self.public_key = None

    def generate_keypair(self):
        parts = [self.core.le_rand(self.env) for _ in range(4)]
        self.private_key = b"".join(parts)
        self.public_key = hashlib.sha256(b"pubkey-x" + self.private_key).digest()
        return self.public_key

    def draw_nonce(self):
        return self.core.sha_get_128b_rand(self.env)


@dataclass
class PairingSession:
    """Record of one Numeric Comparison run."""

    pk_a: bytes = b""
    pk_b: bytes = b""
    na: bytes = b""
    nb: bytes = b""
    cb: bytes = b""
    ra: bytes = RA_RB_ZERO
    rb: bytes = RA_RB_ZERO
    va: int = -1
    vb: int = -1
    aborted: bool = False
    channel: ChannelTap = field(default_factory=ChannelTap)

    @property
    def transcript(self):
        return self.channel.lines()


def run_numeric_comparison(dev_a, dev_b, channel=None, tamper_cb=None,
                           gap_slots=2):
    """Honest Numeric Comparison between two devices.

    tamper_cb, if given, rewrites the commitment in flight; the
    initiator must then abort when the commitment check fails.
    """
    session = PairingSession(channel=channel or ChannelTap())
    chan = session.channel

    pk_a = dev_a.generate_keypair()
    pk_b = dev_b.generate_keypair()
    session.pk_a, session.pk_b = pk_a, pk_b
    chan.send(dev_a.name, dev_b.name, "PUBKEY", pk_a, dev_a.env.bt_clock)
    dev_a.env.tick(gap_slots)
    dev_b.env.tick(gap_slots)
    chan.send(dev_b.name, dev_a.name, "PUBKEY", pk_b, dev_b.env.bt_clock)

    # Responder commits to its nonce before the initiator reveals Na.
    dev_b.env.tick(gap_slots)
    nb = dev_b.draw_nonce()
    session.nb = nb
    cb = commit_f1(pk_b, pk_a, nb, RA_RB_ZERO)
    session.cb = cb
    sent_cb = tamper_cb(cb) if tamper_cb else cb
    chan.send(dev_b.name, dev_a.name, "COMMIT", sent_cb, dev_b.env.bt_clock)

    dev_a.env.tick(gap_slots)
    na = dev_a.draw_nonce()
    session.na = na
    chan.send(dev_a.name, dev_b.name, "NA", na, dev_a.env.bt_clock)

    dev_b.env.tick(gap_slots)
    chan.send(dev_b.name, dev_a.name, "NB", nb, dev_b.env.bt_clock)

    if commit_f1(pk_b, pk_a, nb, RA_RB_ZERO) != sent_cb:
        session.aborted = True
        chan.send(dev_a.name, dev_b.name, "ABORT", b"", dev_a.env.bt_clock,
                  note="commitment check failed")
        return session

    # Each side computes the display value from its own view; on an
    # honest channel both views carry the same operands.
    session.va = check_value_g(pk_a, pk_b, na, nb)
    session.vb = check_value_g(pk_a, pk_b, na, nb)
    return session


@dataclass
class LlEncRsp:
    """The responder half of the encryption-start exchange; both fields
    travel in plaintext and are raw generator output."""

    skd_s: bytes
    iv_s: bytes

    def __post_init__(self):
        if len(self.skd_s) != 8:
            raise WidthError("skd_s must be 8 bytes")
        if len(self.iv_s) != 4:
            raise WidthError("iv_s must be 4 bytes")


def start_encryption_exchange(responder, channel=None):
    """Responder generates its session-key-diversifier half (two
    generator words) and its IV half (one word), sent in plaintext."""
    skd_words = [responder.core.rbg_rand(responder.env) for _ in range(2)]
    iv_word = responder.core.rbg_rand(responder.env)
    rsp = LlEncRsp(skd_s=pack_words(skd_words), iv_s=pack_words([iv_word]))
    if channel is not None:
        channel.send(
            responder.name,
            "*",
            "LL_ENC_RSP",
            rsp.skd_s + rsp.iv_s,
            responder.env.bt_clock,
        )
    return rsp


# -- combination-key refresh ------------------------------------------------


def e21(lk_rand, bd_addr):
    """Unit-key derivation: keyed MAC of the address under the random,
    truncated to 16 bytes. Pluggable stand-in for the legacy cipher."""
    if len(lk_rand) != 16:
        raise WidthError("lk_rand must be 16 bytes")
    if len(bd_addr) != 6:
        raise WidthError("bd_addr must be 6 bytes")
    return hmac.digest(bytes(lk_rand), bytes(bd_addr), "sha256")[:16]


def kdf_link_key(k):
    """One-way derivation of the masking key used by the mitigated
    exchange."""
    return hashlib.sha256(b"link-key-kdf" + bytes(k)).digest()[:16]


def xor_bytes(a, b):
    if len(a) != len(b):
        raise WidthError("xor operands differ in length")
    return bytes(x ^ y for x, y in zip(a, b))


@dataclass
class LinkKeyExchange:
    """State of one combination-key refresh."""

    k: bytes
    bd_addr_a: bytes
    bd_addr_b: bytes
    mitigated: bool = False
    lk_rand_a: bytes = b""
    lk_rand_b: bytes = b""
    c_a: bytes = b""
    c_b: bytes = b""
    lk_k_a: bytes = b""
    lk_k_b: bytes = b""
    k_ab: bytes = b""
    channel: ChannelTap = field(default_factory=ChannelTap)


def run_combination_key_exchange(ex, rng_a, rng_b, e21_fn=e21):
    """Run the refresh: each side masks its fresh random with the
    current key (or a one-way derivation of it when mitigated), swaps
    the masked values in plaintext, and both derive the new key.

    rng_a / rng_b supply 16 fresh bytes each; pass a Device or any
    zero-argument callable.
    """
    def draw(rng):
        if hasattr(rng, "draw_nonce"):
            return rng.draw_nonce()
        return rng()

    mask = kdf_link_key(ex.k) if ex.mitigated else ex.k
    ex.lk_rand_a = draw(rng_a)
    ex.lk_rand_b = draw(rng_b)
    ex.lk_k_a = e21_fn(ex.lk_rand_a, ex.bd_addr_a)
    ex.lk_k_b = e21_fn(ex.lk_rand_b, ex.bd_addr_b)
    ex.c_a = xor_bytes(ex.lk_rand_a, mask)
    ex.c_b = xor_bytes(ex.lk_rand_b, mask)

    ex.channel.send("A", "B", "COMB_KEY", ex.c_a, note="encryption paused")
    ex.channel.send("B", "A", "COMB_KEY", ex.c_b, note="encryption paused")

    # Each side unmasks the peer's random and recomputes the peer's
    # unit key; the new link key is the xor of both unit keys, so both
    # directions agree by construction.
    ex.k_ab = xor_bytes(ex.lk_k_a, ex.lk_k_b)
    ex.channel.send("A", "B", "ENC_RESUME", b"", note="encryption resumed")
    return ex


def session_encrypt(key, nonce, plaintext):
    """Toy stream cipher used only to give the attacker something to
    check candidate keys against: a hash keystream xored over the
    plaintext."""
    out = bytearray()
    counter = 0
    while len(out) < len(plaintext):
        block = hashlib.sha256(
            bytes(key) + bytes(nonce) + struct.pack("<Q", counter)
        ).digest()
        out.extend(block)
        counter += 1
    return xor_bytes(bytes(out[: len(plaintext)]), bytes(plaintext))


def make_key_checker(key, nonce=b"probe", plaintext=b"known-plaintext-sample"):
    """Build the plaintext-ciphertext oracle an eavesdropper gets from
    captured traffic under the current link key."""
    ciphertext = session_encrypt(key, nonce, plaintext)

    def checker(candidate_key):
        return session_encrypt(candidate_key, nonce, plaintext) == ciphertext

    return checker
