"""Compare the compiled and pure-python kernels on the two hot attack
loops: the nonce brute force and the check-value collision search.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--budget 200000] [--space-bits 18]

The numbers that matter are guesses/s and trials/s; both backends must
agree on the found indices or the run aborts.
"""

import argparse
import hashlib
import sys
import time

import numpy as np

from btrnglab import crypto
from btrnglab.backend import available_backends, get_kernel


def _planted_nb_problem(space_bits, seed=1234):
    """Build a search_nb instance whose answer sits ~80% into the space,
    so both backends do comparable honest work."""
    from btrnglab.attacks import advance_chain

    rng = np.random.default_rng(seed)
    n_timer = 1 << max(space_bits - 9, 1)
    sizes = (n_timer, 8, 8, 8, 1, 1)
    lists = [rng.integers(0, 1 << 32, n, dtype=np.uint32) for n in sizes]
    total = int(np.prod(sizes))

    target_flat = int(total * 0.8)
    idx = []
    rem = target_flat
    for n in reversed(sizes[1:]):
        idx.append(rem % n)
        rem //= n
    idx.append(rem)
    idx = idx[::-1]

    out1 = 0x1B2A3C4D
    base = crypto.affine_constant(0x20)
    diff = 0
    for lst, i in zip(lists, idx):
        diff ^= int(lst[i])
    out2 = (out1 ^ base ^ diff) & 0xFFFFFFFF
    words = [out2]
    prev, cur = out1, out2
    for _ in range(15):
        prev, cur = advance_chain(prev, cur, 1)
        words.append(cur)
    nb = hashlib.sha1(
        b"".join(w.to_bytes(4, "little") for w in words)
    ).digest()[:16]
    pk_b = bytes(range(32))
    pk_e = bytes(range(32, 64))
    cb = crypto.commit_f1(pk_b, pk_e, nb, b"\x00")
    return dict(out1=out1, base=base, lists=lists, cb=cb,
                pk_b=pk_b, pk_e=pk_e), target_flat, total


def bench_search_nb(space_bits):
    problem, target_flat, total = _planted_nb_problem(space_bits)
    print("search_nb: %d candidates, answer planted at index %d"
          % (total, target_flat))
    results = {}
    for name in available_backends():
        k = get_kernel(name)
        t0 = time.perf_counter()
        found, tried, nb = k.search_nb(
            problem["out1"], crypto.affine_constant(0x20), problem["lists"],
            problem["cb"], problem["pk_b"], problem["pk_e"],
        )
        dt = time.perf_counter() - t0
        rate = tried / dt
        results[name] = (found, nb)
        print("  %-8s found=%-9d tried=%-9d %6.2fs  %9.0f guesses/s"
              % (name, found, tried, dt, rate))
    values = set(results.values())
    if len(values) != 1:
        print("BACKEND MISMATCH: %r" % (results,))
        sys.exit(1)
    if results[name][0] != target_flat:
        print("WRONG INDEX: expected %d" % target_flat)
        sys.exit(1)


def bench_g_collision(budget):
    pk_a = hashlib.sha256(b"bench-a").digest()
    pk_b = hashlib.sha256(b"bench-b").digest()
    nb = hashlib.sha256(b"bench-nb").digest()[:16]
    target = 123456
    print("g collision: budget %d, target %06d" % (budget, target))
    results = {}
    for name in available_backends():
        k = get_kernel(name)
        t0 = time.perf_counter()
        cand, trials = k.search_g_collision(pk_a + pk_b, nb, target,
                                            seed=99, budget=budget)
        dt = time.perf_counter() - t0
        results[name] = (cand, trials)
        print("  %-8s %s after %-9d %6.2fs  %9.0f trials/s"
              % (name, "hit " if cand else "miss", trials, dt, trials / dt))
    if len(set(results.values())) != 1:
        print("BACKEND MISMATCH: %r" % (results,))
        sys.exit(1)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--space-bits", type=int, default=18,
                    help="log2 size of the nonce space (default 18)")
    ap.add_argument("--budget", type=int, default=200_000,
                    help="collision trials per backend (default 200000)")
    args = ap.parse_args()
    backends = available_backends()
    print("backends:", ", ".join(backends))
    if len(backends) == 1:
        print("note: compiled extension not built; timing only the "
              "pure backend")
    bench_search_nb(args.space_bits)
    bench_g_collision(args.budget)
    print("backends agree on all results")


if __name__ == "__main__":
    main()
