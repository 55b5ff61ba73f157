"""Command-line surface: exit codes, artifacts, determinism."""

import json
import os

import pytest

from btrnglab import cli


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    d = tmp_path / "out"
    monkeypatch.setenv("BTRNGLAB_OUT", str(d))
    return d


def run(*argv):
    return cli.run(list(argv))


def test_simulate_writes_words_and_register_trace(outdir):
    assert run("simulate", "--variant", "4", "--seed", "3", "--calls", "50") == 0
    words = (outdir / "simulate_words.bin").read_bytes()
    assert len(words) == 200
    trace = (outdir / "simulate_registers.csv").read_text().splitlines()
    assert trace[0].startswith("dc_nbtc_clk,timer1value,dc_fhout")
    assert len(trace) == 51


def test_simulate_is_deterministic(outdir, tmp_path):
    run("simulate", "--variant", "4", "--seed", "9", "--calls", "40")
    first = (outdir / "simulate_words.bin").read_bytes()
    run("simulate", "--variant", "4", "--seed", "9", "--calls", "40")
    assert (outdir / "simulate_words.bin").read_bytes() == first


def test_collect_ingest_round_trip(outdir):
    assert run("collect", "--variant", "2", "--seed", "4", "--chunks", "2") == 0
    chunks = sorted(str(p) for p in outdir.glob("chunk_*.bin"))
    assert len(chunks) == 2
    assert run("ingest", "--input", *chunks) == 0
    payload = (outdir / "payload.bin").read_bytes()
    assert len(payload) == 2 * 4096 * 4


def test_ingest_detects_corruption(outdir):
    run("collect", "--variant", "2", "--seed", "5", "--chunks", "1")
    chunk = outdir / "chunk_000.bin"
    raw = bytearray(chunk.read_bytes())
    raw[4] ^= 0xFF  # first record's check byte
    bad = outdir / "bad.bin"
    bad.write_bytes(bytes(raw))
    assert run("ingest", "--input", str(bad)) == 1


def test_battery_exit_codes(outdir):
    good = outdir
    good.mkdir(parents=True, exist_ok=True)
    from btrnglab.analysis import hrng_stream

    hw = good / "hw.bin"
    hw.write_bytes(hrng_stream(seed=0).data)
    assert run("test", "--input", str(hw), "--expect-pass") == 0
    alt = good / "alt.bin"
    alt.write_bytes(b"\xaa" * 2500)
    assert run("test", "--input", str(alt)) == 0  # report only
    assert run("test", "--input", str(alt), "--expect-pass") == 1


def test_entropy_tables_and_file(outdir, capsys):
    assert run("entropy", "--tables") == 0
    out = capsys.readouterr().out
    assert "joint" in out and "dc_fhout" in out
    f = outdir
    f.mkdir(parents=True, exist_ok=True)
    sample = f / "sample.bin"
    sample.write_bytes(bytes(range(256)) * 4)
    assert run("entropy", "--input", str(sample)) == 0
    out = capsys.readouterr().out
    assert "shannon" in out


def test_predict_closed_loop(outdir):
    assert run("predict", "--seed", "3") == 0
    records = [
        json.loads(line)
        for line in (outdir / "predict.jsonl").read_text().splitlines()
    ]
    assert records[-1]["contained"] is True
    assert "wall_time" not in records[-1]


def test_attack_lmp_exit_codes_and_records(outdir):
    assert run("attack-lmp", "--seed", "6") == 0
    assert run("attack-lmp", "--seed", "6", "--mitigated") == 0
    lines = (outdir / "attack-lmp.jsonl").read_text().splitlines()
    recs = [json.loads(l) for l in lines]
    assert recs[0]["exact"] is True and recs[0]["mitigated"] is False
    assert recs[1]["recovered"] is False and recs[1]["mitigated"] is True


def test_attack_nc_record_is_deterministic(outdir):
    args = (
        "attack-nc", "--seed", "11", "--hw-bits", "6", "--reg-bits", "8",
        "--na-budget", str(1 << 22),
    )
    assert run(*args) == 0
    first = (outdir / "attack-nc.jsonl").read_text()
    assert run(*args) == 0
    both = (outdir / "attack-nc.jsonl").read_text().splitlines()
    assert both[0] == both[1] == first.strip()
    rec = json.loads(both[0])
    assert rec["success"] is True
    assert "wall_time" not in rec


def test_report_renders_csvs(outdir):
    run("simulate", "--variant", "4", "--seed", "3", "--calls", "64")
    run("attack-lmp", "--seed", "6")
    assert run("report") == 0
    assert (outdir / "hist_dc_fhout.csv").exists()
    summary = (outdir / "register_summary.csv").read_text().splitlines()
    assert summary[0].startswith("register,support")
    assert len(summary) == 8  # header + 7 registers
    attacks = (outdir / "attack_summary.csv").read_text().splitlines()
    assert len(attacks) == 2


def test_report_empty_dir_exits_2_without_artifacts(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert run("report", "--results", str(empty)) == 2
    assert list(empty.iterdir()) == []


def test_config_file_supplies_defaults(outdir, tmp_path):
    ini = tmp_path / "exp.ini"
    ini.write_text("[experiment]\nvariant = 4\nseed = 77\ncalls = 16\n")
    assert run("--config", str(ini), "simulate") == 0
    assert len((outdir / "simulate_words.bin").read_bytes()) == 64


def test_flags_override_config(outdir, tmp_path):
    ini = tmp_path / "exp.ini"
    ini.write_text("[experiment]\nvariant = 4\nseed = 77\ncalls = 16\n")
    assert run("--config", str(ini), "simulate", "--calls", "8") == 0
    assert len((outdir / "simulate_words.bin").read_bytes()) == 32


def test_missing_config_exits_2(outdir):
    assert run("--config", "/no/such/file.ini", "simulate") == 2


def test_out_flag_beats_environment(outdir, tmp_path):
    other = tmp_path / "elsewhere"
    assert run("--out", str(other), "simulate", "--variant", "4",
               "--seed", "1", "--calls", "4") == 0
    assert (other / "simulate_words.bin").exists()
    assert not (outdir / "simulate_words.bin").exists()
