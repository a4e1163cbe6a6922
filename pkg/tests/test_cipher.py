"""Tests for Vigenere encryption, key validation and key generation."""

from __future__ import annotations

import random
import string

import pytest

from vigkey.cipher import (
    ALPHABET,
    CipherSample,
    Key,
    decrypt,
    effective_period,
    encrypt,
    generate_key,
    load_wordlist,
    read_cipher_samples,
    write_cipher_samples,
)


def random_letters(rng: random.Random, n: int) -> str:
    return "".join(rng.choice(string.ascii_uppercase) for _ in range(n))


def test_encrypt_uniform_shift():
    assert encrypt("ATTACK", "BBB") == "BUUBDL"


def test_encrypt_identity_key():
    rng = random.Random(0)
    text = random_letters(rng, 60)
    assert encrypt(text, "AAA") == text
    assert decrypt(text, "AAA") == text


def test_decrypt_inverse_example():
    assert decrypt("BUUBDL", "BBB") == "ATTACK"


def test_round_trip_random_keys():
    rng = random.Random(42)
    for _ in range(100):
        text = random_letters(rng, rng.randrange(1, 300))
        key = generate_key(rng, rng.randrange(3, 26))
        assert decrypt(encrypt(text, key), key) == text


def test_encrypt_preserves_length_and_alphabet():
    rng = random.Random(5)
    for _ in range(50):
        text = random_letters(rng, rng.randrange(0, 120))
        key = generate_key(rng, rng.randrange(3, 26))
        cipher = encrypt(text, key)
        assert len(cipher) == len(text)
        assert all(c in ALPHABET for c in cipher)


def test_shift_composition():
    rng = random.Random(9)
    for _ in range(20):
        text = random_letters(rng, 100)
        twice = encrypt(encrypt(text, "BBB"), "BBB")
        assert twice == encrypt(text, "CCC")


def test_wraparound_at_alphabet_end():
    assert encrypt("ZZZ", "BBB") == "AAA"
    assert decrypt("AAA", "BBB") == "ZZZ"


def test_key_validation():
    with pytest.raises(ValueError):
        Key("AB")
    with pytest.raises(ValueError):
        Key("A" * 26)
    with pytest.raises(ValueError):
        Key("AB1")
    with pytest.raises(ValueError):
        Key("abc")
    with pytest.raises(ValueError):
        Key("ABAB")
    assert Key("ABC").length == 3


def test_effective_period_divisor_scan():
    assert effective_period("ABAB") == 2
    assert effective_period("AAAA") == 1
    assert effective_period("ABCABC") == 3
    assert effective_period("ABA") == 3
    assert effective_period("ABCDE") == 5


def test_generate_key_deterministic():
    first = generate_key(random.Random(123), 5)
    second = generate_key(random.Random(123), 5)
    assert first == second
    assert first.length == 5


def test_generate_key_period_equals_length():
    rng = random.Random(77)
    for _ in range(200):
        length = rng.randrange(3, 26)
        key = generate_key(rng, length)
        assert key.length == length
        assert effective_period(key.letters) == length


def test_generate_key_rejects_periodic_candidates():
    class ScriptedRandom(random.Random):
        """Feeds a periodic candidate first, then honest randomness."""

        def __init__(self):
            super().__init__(0)
            self.script = list("ABAB")

        def choice(self, seq):
            if self.script:
                return self.script.pop(0)
            return super().choice(seq)

    key = generate_key(ScriptedRandom(), 4)
    assert effective_period(key.letters) == 4


def test_generate_key_length_bounds():
    with pytest.raises(ValueError):
        generate_key(random.Random(0), 2)
    with pytest.raises(ValueError):
        generate_key(random.Random(0), 26)
    with pytest.raises(ValueError):
        generate_key(random.Random(0), 5, mode="phrase")


def test_generate_key_wordlist_mode():
    words = ["APPLE", "BANANA", "CHERRY", "PLUM"]
    rng = random.Random(31)
    for length in (3, 7, 12, 25):
        key = generate_key(rng, length, mode="wordlist", wordlist=words)
        assert key.length == length
        assert effective_period(key.letters) == length


def test_generate_key_empty_wordlist_falls_back(caplog):
    with caplog.at_level("WARNING"):
        key = generate_key(random.Random(1), 6, mode="wordlist", wordlist=[])
    assert key.length == 6
    assert any("wordlist" in rec.message for rec in caplog.records)


def test_load_wordlist_strips_non_letters(tmp_path):
    path = tmp_path / "words.txt"
    path.write_text("apple\nBan-ana!\n\n  42\ncherry pie\n")
    assert load_wordlist(path) == ["APPLE", "BANANA", "CHERRYPIE"]


def test_cipher_sample_serialization_round_trip(tmp_path):
    rng = random.Random(8)
    samples = [
        CipherSample(ciphertext=random_letters(rng, 40), true_key_length=7),
        CipherSample(ciphertext=random_letters(rng, 25), true_key_length=25),
    ]
    path = tmp_path / "ciphers.csv"
    write_cipher_samples(samples, path)
    again = read_cipher_samples(path)
    assert again == samples
    assert again[0].text_length == 40


def test_read_cipher_samples_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("nope\nABC,3\n")
    with pytest.raises(ValueError):
        read_cipher_samples(path)
