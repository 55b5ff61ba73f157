"""Operator-facing command line: simulation, collection, ingestion,
quality testing, and the attack experiments, all reproducible from a
seed plus an optional config file.

Flags override config-file values; config values override built-in
defaults. Progress and summaries go to stderr, data goes to files (or
stdout when the output path is "-"), and attack runs append
line-delimited JSON records whose fields are deterministic under a
fixed seed.
"""

import argparse
import configparser
import csv
import hashlib
import json
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import analysis, backend
from .attacks import (
    GuessSpace,
    PredictionInputs,
    predict_candidates,
    recover_link_keys,
    run_mitm_numeric_comparison,
)
from .chipenv import NONCLOCK_REGISTERS, ChipEnvironment, load_distribution
from .errors import (
    ConfigurationError,
    CorruptionError,
    DistributionFormatError,
    FramingError,
    InsufficientDataError,
    LabError,
    ValidationError,
)
from .firmware import RbgCore
from .protocol import Device, LinkKeyExchange, make_key_checker, run_combination_key_exchange

USAGE_ERRORS = (
    ConfigurationError,
    ValidationError,
    DistributionFormatError,
    FileNotFoundError,
    IsADirectoryError,
)


@dataclass
class ExperimentConfig:
    """Fully resolved knobs of one experiment run."""

    variant: int = 2
    seed: int = 0
    calls: int = 1024
    chunks: int = 1
    outdir: str = ""
    distribution: str = ""
    gap_slots: int = 2
    hw_clock_bits: int = 9
    register_budget_bits: int = 11
    na_budget: int = 1 << 24
    threads: int = 1
    check_byte: int = 0x42

    @classmethod
    def load(cls, path=None):
        cfg = cls()
        if not path:
            return cfg
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise ConfigurationError("cannot read config file %r" % (path,))
        if "experiment" not in parser:
            raise ConfigurationError("config file missing [experiment] section")
        sec = parser["experiment"]
        for f in fields(cls):
            if f.name not in sec:
                continue
            if f.type is int or f.name == "check_byte":
                setattr(cfg, f.name, int(sec[f.name], 0))
            else:
                setattr(cfg, f.name, sec[f.name])
        return cfg

    def apply_flags(self, args):
        for f in fields(self):
            value = getattr(args, f.name, None)
            if value is not None:
                setattr(self, f.name, value)
        if not self.outdir:
            self.outdir = os.environ.get("BTRNGLAB_OUT", ".")
        return self


def _say(msg):
    print(msg, file=sys.stderr)


def _outpath(cfg, name):
    os.makedirs(cfg.outdir, exist_ok=True)
    return os.path.join(cfg.outdir, name)


def _write_bytes(path, payload):
    if path == "-":
        sys.stdout.buffer.write(payload)
        return len(payload)
    with open(path, "wb") as fh:
        fh.write(payload)
    return len(payload)


def _make_env(cfg, seed):
    dist = load_distribution(cfg.distribution) if cfg.distribution else None
    return ChipEnvironment(seed=seed, distribution=dist)


def _make_space(cfg, distribution=None):
    return GuessSpace.default(
        distribution=distribution,
        gap_slots=cfg.gap_slots,
        hw_clock_bits=cfg.hw_clock_bits,
        register_budget_bits=cfg.register_budget_bits,
    )


def _append_record(path, record):
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


# -- subcommands ------------------------------------------------------------


def cmd_simulate(args, cfg):
    env = _make_env(cfg, cfg.seed)
    core = RbgCore(variant=cfg.variant, seed=cfg.seed)
    env.attach(core)
    words = []
    rows = []
    for i in range(cfg.calls):
        if i and args.tick_slots:
            env.tick(args.tick_slots)
        words.append(core.rbg_rand(env))
        snap = env.peek_registers()
        rows.append([getattr(snap, "dc_nbtc_clk"), getattr(snap, "timer1value")]
                    + [getattr(snap, n) for n in NONCLOCK_REGISTERS])

    data = np.array(words, dtype="<u4").tobytes()
    out_bin = args.output or _outpath(cfg, "simulate_words.bin")
    _write_bytes(out_bin, data)
    csv_path = _outpath(cfg, "simulate_registers.csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dc_nbtc_clk", "timer1value", *NONCLOCK_REGISTERS])
        writer.writerows(rows)

    kinds = {}
    for kind, _ in core.call_trace:
        kinds[kind] = kinds.get(kind, 0) + 1
    _say(
        "simulate: variant=%d seed=%d calls=%d events=%s -> %s, %s"
        % (cfg.variant, cfg.seed, cfg.calls, kinds, out_bin, csv_path)
    )
    return 0


def cmd_collect(args, cfg):
    env = _make_env(cfg, cfg.seed)
    core = RbgCore(variant=cfg.variant, seed=cfg.seed)
    env.attach(core)
    written = []
    for i in range(cfg.chunks):
        raw, stream = analysis.collect_chunks(
            core, env, chunks=1, check_byte=cfg.check_byte
        )
        path = _outpath(cfg, "chunk_%03d.bin" % i)
        _write_bytes(path, raw)
        written.append(path)
    _say(
        "collect: variant=%d seed=%d chunks=%d origin=%s -> %s .. %s"
        % (cfg.variant, cfg.seed, cfg.chunks, stream.origin,
           written[0], written[-1])
    )
    return 0


def cmd_ingest(args, cfg):
    raw = b"".join(open(p, "rb").read() for p in args.input)
    stream = analysis.ingest_chunks(raw, check_byte=cfg.check_byte)
    out = args.output or _outpath(cfg, "payload.bin")
    n = _write_bytes(out, stream.data)
    _say("ingest: %d raw bytes -> %d payload bytes -> %s" % (len(raw), n, out))
    return 0


def cmd_test(args, cfg):
    payload = open(args.input, "rb").read()
    report = analysis.fips_battery(payload)
    for line in report.lines():
        print(line)
    if args.expect_pass and not report.passed:
        return 1
    return 0


def cmd_entropy(args, cfg):
    if args.tables:
        dist = load_distribution(cfg.distribution) if cfg.distribution else None
        per = analysis.register_difference_entropies(dist)
        for name, bits in per.items():
            print("%-14s difference entropy %.4f bits" % (name, bits))
        print("joint          difference entropy %.4f bits"
              % analysis.joint_difference_entropy(dist))
        return 0
    payload = open(args.input, "rb").read()
    words = np.frombuffer(payload[: len(payload) - len(payload) % 4], dtype="<u4")
    rep = analysis.entropy_report(words)
    print("samples             %d" % rep.sample_count)
    print("shannon             %.4f bits" % rep.shannon_bits)
    print("min-entropy         %.4f bits" % rep.min_entropy_bits)
    print("difference entropy  %.4f bits" % rep.difference_entropy_bits)
    return 0


def cmd_predict(args, cfg):
    env = _make_env(cfg, cfg.seed)
    core = RbgCore(variant=cfg.variant, seed=cfg.seed)
    env.attach(core)
    for _ in range(4):
        core.rbg_rand(env)
    out0 = core.rbg_rand(env)
    out1 = core.rbg_rand(env)
    dc_before = env.bt_clock
    env.tick(cfg.gap_slots)
    true_next = core.rbg_rand(env)
    space = _make_space(cfg, env.distribution)
    inputs = PredictionInputs(out0, out1, dc_diff=dc_before ^ env.bt_clock)
    cands = predict_candidates(inputs, space)
    contained = true_next in cands
    record = {
        "experiment": "predict",
        "variant": cfg.variant,
        "seed": cfg.seed,
        "space_size": space.size,
        "space_bits": space.total_bits,
        "candidates": len(cands),
        "contained": contained,
    }
    _append_record(_outpath(cfg, "predict.jsonl"), record)
    _say("predict: space=%d candidates=%d contained=%s"
         % (space.size, len(cands), contained))
    return 0 if contained else 1


def cmd_attack_nc(args, cfg):
    dev_a = Device("A", RbgCore(variant=2, seed=cfg.seed * 2 + 1),
                   _make_env(cfg, cfg.seed * 2 + 1))
    dev_b = Device("B", RbgCore(variant=cfg.variant, seed=cfg.seed * 2 + 2),
                   _make_env(cfg, cfg.seed * 2 + 2))
    space = _make_space(cfg, dev_b.env.distribution)
    outcome = run_mitm_numeric_comparison(
        dev_a, dev_b, attacker_space=space, gap_slots=cfg.gap_slots,
        nb_threads=cfg.threads, na_budget=cfg.na_budget,
        attacker_seed=cfg.seed,
    )
    record = {
        "experiment": "attack-nc",
        "variant": cfg.variant,
        "seed": cfg.seed,
        "backend": backend.BACKEND,
        "space_size": space.size,
        "space_bits": space.total_bits,
        "success": outcome.success,
        "aborted": outcome.aborted,
        "va": outcome.va,
        "vb": outcome.vb,
        "recovered_nb": outcome.recovered_nb.hex() if outcome.recovered_nb else None,
        "na_prime": outcome.chosen_na_prime.hex() if outcome.chosen_na_prime else None,
        "nb_guesses": outcome.work_counters.nb_guesses,
        "g_evaluations": outcome.work_counters.g_evaluations,
    }
    _append_record(_outpath(cfg, "attack-nc.jsonl"), record)
    if args.transcript:
        with open(_outpath(cfg, "attack-nc-transcript.txt"), "w",
                  encoding="utf-8") as fh:
            outcome.channel.export(fh)
    _say(
        "attack-nc: success=%s va=%06d vb=%06d guesses=%d g_evals=%d wall=%.2fs"
        % (outcome.success, outcome.va, outcome.vb,
           outcome.work_counters.nb_guesses,
           outcome.work_counters.g_evaluations, outcome.wall_time)
    )
    return 0 if outcome.success else 1


def cmd_attack_lmp(args, cfg):
    seed_bytes = int(cfg.seed).to_bytes(8, "little")
    previous_key = hashlib.sha256(b"previous-link-key" + seed_bytes).digest()[:16]
    dev_a = Device("A", RbgCore(variant=4, seed=cfg.seed * 2 + 1),
                   _make_env(cfg, cfg.seed * 2 + 1))
    dev_b = Device("B", RbgCore(variant=4, seed=cfg.seed * 2 + 2),
                   _make_env(cfg, cfg.seed * 2 + 2))
    exchange = LinkKeyExchange(
        k=previous_key, bd_addr_a=dev_a.bd_addr, bd_addr_b=dev_b.bd_addr,
        mitigated=args.mitigated,
    )
    run_combination_key_exchange(exchange, dev_a, dev_b)

    decoys = [
        hashlib.sha256(b"decoy" + seed_bytes + i.to_bytes(4, "little")).digest()[:16]
        for i in range(args.decoys)
    ]
    candidates = decoys[: args.decoys // 2] + [exchange.lk_rand_a] + decoys[args.decoys // 2:]
    oracle = make_key_checker(previous_key)
    recovery = recover_link_keys(
        exchange.c_a, exchange.c_b, candidates,
        (exchange.bd_addr_a, exchange.bd_addr_b), oracle=oracle,
    )
    recovered = recovery is not None
    exact = (
        recovered
        and recovery.k == previous_key
        and recovery.k_ab == exchange.k_ab
    )
    record = {
        "experiment": "attack-lmp",
        "seed": cfg.seed,
        "mitigated": args.mitigated,
        "candidates": len(candidates),
        "recovered": recovered,
        "exact": exact,
    }
    _append_record(_outpath(cfg, "attack-lmp.jsonl"), record)
    if args.mitigated:
        _say("attack-lmp: mitigated exchange, recovery %s"
             % ("DEFEATED the mitigation" if recovered else "blocked as intended"))
        return 0 if not recovered else 1
    _say("attack-lmp: unmitigated exchange, recovery %s"
         % ("exact" if exact else "FAILED"))
    return 0 if exact else 1


def cmd_report(args, cfg):
    results_dir = args.results or cfg.outdir
    reg_csv = os.path.join(results_dir, "simulate_registers.csv")
    jsonl_files = sorted(
        os.path.join(results_dir, n)
        for n in os.listdir(results_dir)
        if n.endswith(".jsonl")
    ) if os.path.isdir(results_dir) else []
    have_regs = os.path.exists(reg_csv)
    if not have_regs and not jsonl_files:
        _say("report: no simulate_registers.csv or *.jsonl under %r" % results_dir)
        return 2

    written = []
    if have_regs:
        with open(reg_csv, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            columns = {name: [] for name in header}
            for row in reader:
                for name, value in zip(header, row):
                    columns[name].append(int(value))
        summary_rows = []
        for name in header:
            trace = columns[name]
            values, counts = np.unique(np.array(trace, dtype=np.uint64),
                                       return_counts=True)
            hist_path = os.path.join(results_dir, "hist_%s.csv" % name)
            with open(hist_path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["value", "count"])
                writer.writerows(
                    ["0x%x" % v, int(c)] for v, c in zip(values, counts)
                )
            written.append(hist_path)
            rep = analysis.entropy_report(trace)
            summary_rows.append([
                name, len(values), "%.4f" % rep.shannon_bits,
                "%.4f" % rep.min_entropy_bits,
                "%.4f" % rep.difference_entropy_bits,
            ])
        summary_path = os.path.join(results_dir, "register_summary.csv")
        with open(summary_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["register", "support", "shannon_bits",
                             "min_entropy_bits", "difference_entropy_bits"])
            writer.writerows(summary_rows)
        written.append(summary_path)

    if jsonl_files:
        rows = []
        for path in jsonl_files:
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        rows.append(json.loads(line))
        attack_path = os.path.join(results_dir, "attack_summary.csv")
        keys = ["experiment", "seed", "variant", "success", "exact",
                "space_bits", "nb_guesses", "g_evaluations", "contained"]
        with open(attack_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(keys)
            writer.writerows([row.get(k, "") for k in keys] for row in rows)
        written.append(attack_path)

    _say("report: wrote %s" % ", ".join(written))
    return 0


# -- argument plumbing ------------------------------------------------------


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="btrnglab",
        description="Bluetooth-chip RNG laboratory: simulate the firmware "
                    "generator, measure its quality, and run the attacks.",
    )
    parser.add_argument("--config", help="INI config file ([experiment] section)")
    parser.add_argument("--out", dest="outdir",
                        help="output directory (default $BTRNGLAB_OUT or .)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *names):
        if "variant" in names:
            p.add_argument("--variant", type=int, choices=range(1, 6))
        if "seed" in names:
            p.add_argument("--seed", type=int)
        if "space" in names:
            p.add_argument("--gap-slots", dest="gap_slots", type=int)
            p.add_argument("--hw-bits", dest="hw_clock_bits", type=int)
            p.add_argument("--reg-bits", dest="register_budget_bits", type=int)
        p.add_argument("--distribution", help="register distribution file")

    p = sub.add_parser("simulate", help="run a generator core and dump outputs")
    common(p, "variant", "seed")
    p.add_argument("--calls", type=int)
    p.add_argument("--tick-slots", type=int, default=1,
                   help="slots between calls (default 1)")
    p.add_argument("--output", help="words file ('-' for stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("collect", help="fill and fetch check-byte chunks")
    common(p, "variant", "seed")
    p.add_argument("--chunks", type=int)
    p.add_argument("--check-byte", dest="check_byte",
                   type=lambda s: int(s, 0))
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("ingest", help="validate dumps and strip check bytes")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--check-byte", dest="check_byte", type=lambda s: int(s, 0))
    p.add_argument("--output", help="payload file ('-' for stdout)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("test", help="run the randomness battery on a file")
    p.add_argument("--input", required=True)
    p.add_argument("--expect-pass", action="store_true",
                   help="exit 1 unless every test passes")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("entropy", help="entropy estimates for a sample file")
    p.add_argument("--input")
    p.add_argument("--tables", action="store_true",
                   help="analytic per-register difference entropies instead")
    p.add_argument("--distribution")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("predict", help="closed-loop next-output prediction demo")
    common(p, "variant", "seed", "space")
    p.set_defaults(func=cmd_predict, variant_default=4)

    p = sub.add_parser("attack-nc", help="numeric-comparison man-in-the-middle")
    common(p, "variant", "seed", "space")
    p.add_argument("--na-budget", dest="na_budget", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--transcript", action="store_true",
                   help="also write the message transcript")
    p.set_defaults(func=cmd_attack_nc, variant_default=4)

    p = sub.add_parser("attack-lmp", help="combination-key recovery")
    common(p, "seed")
    p.add_argument("--decoys", type=int, default=31)
    p.add_argument("--mitigated", action="store_true",
                   help="run the key-derivation-mitigated exchange")
    p.set_defaults(func=cmd_attack_lmp)

    p = sub.add_parser("report", help="render CSV summaries from results")
    p.add_argument("--results", help="results directory (default the out dir)")
    p.set_defaults(func=cmd_report)

    return parser


def run(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config).apply_flags(args)
        if getattr(args, "variant", None) is None:
            default = getattr(args, "variant_default", None)
            if default is not None and not args.config:
                cfg.variant = default
        return args.func(args, cfg)
    except USAGE_ERRORS as exc:
        _say("error: %s" % exc)
        return 2
    except LabError as exc:
        _say("error: %s" % exc)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
