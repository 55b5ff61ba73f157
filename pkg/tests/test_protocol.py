"""Pairing, encryption-start, and combination-key message flows."""

import hashlib
import hmac as hmac_mod

import pytest

from btrnglab.chipenv import ChipEnvironment
from btrnglab.crypto import check_value_g, commit_f1, pack_words
from btrnglab.errors import WidthError
from btrnglab.firmware import RbgCore
from btrnglab.protocol import (
    ChannelTap,
    Device,
    LinkKeyExchange,
    LlEncRsp,
    e21,
    kdf_link_key,
    make_key_checker,
    run_combination_key_exchange,
    run_numeric_comparison,
    session_encrypt,
    start_encryption_exchange,
    xor_bytes,
)


def make_device(name, variant=2, seed=0):
    return Device(name, RbgCore(variant=variant, seed=seed),
                  ChipEnvironment(seed=seed))


def test_honest_numeric_comparison_agrees():
    a = make_device("A", seed=1)
    b = make_device("B", seed=2)
    session = run_numeric_comparison(a, b)
    assert not session.aborted
    assert session.va == session.vb
    assert 0 <= session.va < 10**6
    assert session.cb == commit_f1(session.pk_b, session.pk_a, session.nb, b"\x00")
    types = [m.msg_type for m in session.channel.messages]
    assert types == ["PUBKEY", "PUBKEY", "COMMIT", "NA", "NB"]


def test_tampered_commitment_forces_abort():
    a = make_device("A", seed=3)
    b = make_device("B", seed=4)
    session = run_numeric_comparison(
        a, b, tamper_cb=lambda cb: bytes(16)
    )
    assert session.aborted
    assert session.va == -1
    assert session.channel.messages[-1].msg_type == "ABORT"


def test_pairing_is_deterministic_under_seeds():
    s1 = run_numeric_comparison(make_device("A", seed=5), make_device("B", seed=6))
    s2 = run_numeric_comparison(make_device("A", seed=5), make_device("B", seed=6))
    assert s1.na == s2.na
    assert s1.nb == s2.nb
    assert s1.va == s2.va


def test_keypair_drains_eight_generator_words():
    dev = make_device("A", seed=7)
    pk = dev.generate_keypair()
    assert len(dev.core.call_trace) == 8
    assert pk == hashlib.sha256(b"pubkey-x" + dev.private_key).digest()
    assert len(dev.private_key) == 32


def test_enc_rsp_carries_three_raw_generator_words():
    dev = make_device("B", variant=4, seed=8)
    twin = make_device("B2", variant=4, seed=8)
    rsp = start_encryption_exchange(dev)
    words = [twin.core.rbg_rand(twin.env) for _ in range(3)]
    assert rsp.skd_s == pack_words(words[:2])
    assert rsp.iv_s == pack_words(words[2:])


def test_enc_rsp_logs_to_channel_in_plaintext():
    dev = make_device("B", seed=9)
    tap = ChannelTap()
    rsp = start_encryption_exchange(dev, channel=tap)
    msg = tap.messages[-1]
    assert msg.msg_type == "LL_ENC_RSP"
    assert msg.payload == rsp.skd_s + rsp.iv_s


def test_ll_enc_rsp_width_validation():
    with pytest.raises(WidthError):
        LlEncRsp(skd_s=bytes(7), iv_s=bytes(4))
    with pytest.raises(WidthError):
        LlEncRsp(skd_s=bytes(8), iv_s=bytes(5))


def test_channel_lines_render_hex_and_notes():
    tap = ChannelTap()
    tap.send("A", "B", "PING", b"\x01\x02", bt_stamp=5, note="hello")
    assert tap.lines() == ["A->B PING 0102 @5 # hello"]


def test_e21_and_kdf_shapes():
    rand, addr = bytes(16), bytes(6)
    out = e21(rand, addr)
    assert out == hmac_mod.digest(rand, addr, "sha256")[:16]
    with pytest.raises(WidthError):
        e21(bytes(15), addr)
    with pytest.raises(WidthError):
        e21(rand, bytes(5))
    assert len(kdf_link_key(bytes(16))) == 16


def test_combination_key_exchange_consistency():
    a = make_device("A", seed=10)
    b = make_device("B", seed=11)
    k = bytes(range(16))
    ex = LinkKeyExchange(k=k, bd_addr_a=a.bd_addr, bd_addr_b=b.bd_addr)
    run_combination_key_exchange(ex, a, b)
    # the over-the-air words are the randoms masked with the live key
    assert ex.c_a == xor_bytes(ex.lk_rand_a, k)
    assert ex.c_b == xor_bytes(ex.lk_rand_b, k)
    assert ex.k_ab == xor_bytes(
        e21(ex.lk_rand_a, a.bd_addr), e21(ex.lk_rand_b, b.bd_addr)
    )
    assert [m.msg_type for m in ex.channel.messages] == [
        "COMB_KEY", "COMB_KEY", "ENC_RESUME",
    ]


def test_mitigated_exchange_masks_with_derived_key():
    a = make_device("A", seed=12)
    b = make_device("B", seed=13)
    k = bytes(range(16))
    ex = LinkKeyExchange(k=k, bd_addr_a=a.bd_addr, bd_addr_b=b.bd_addr,
                         mitigated=True)
    run_combination_key_exchange(ex, a, b)
    assert ex.c_a == xor_bytes(ex.lk_rand_a, kdf_link_key(k))
    assert ex.c_a != xor_bytes(ex.lk_rand_a, k)


def test_exchange_accepts_plain_callables_for_randoms():
    ex = LinkKeyExchange(k=bytes(16), bd_addr_a=bytes(6), bd_addr_b=bytes(6))
    run_combination_key_exchange(
        ex, lambda: bytes(range(16)), lambda: bytes(range(16, 32))
    )
    assert ex.lk_rand_a == bytes(range(16))
    assert ex.lk_rand_b == bytes(range(16, 32))


def test_session_encrypt_roundtrip_and_checker():
    key, nonce = bytes(range(16)), b"nonce"
    ct = session_encrypt(key, nonce, b"hello world")
    assert session_encrypt(key, nonce, ct) == b"hello world"
    checker = make_key_checker(key)
    assert checker(key)
    assert not checker(bytes(16))


def test_check_values_depend_on_public_keys_seen():
    # the attack's premise: each victim computes the display value over
    # the keys *it* saw, so a middleman controls the operands
    na, nb = bytes(range(16)), bytes(range(16, 32))
    pk_a, pk_b, pk_e = (hashlib.sha256(bytes([t])).digest() for t in (1, 2, 3))
    assert check_value_g(pk_a, pk_e, na, nb) != check_value_g(pk_a, pk_b, na, nb)
