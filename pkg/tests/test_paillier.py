"""Paillier: keygen, signed encoding, homomorphic properties, serialization."""
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sknn import paillier
from sknn.errors import InvalidCiphertext, PlaintextOutOfRange
from sknn.serialize import (
    ciphertext_from_hex,
    ciphertext_to_hex,
    paillier_keypair_from_json,
    paillier_keypair_to_json,
)


@pytest.fixture(scope="module")
def keypair():
    return paillier.paillier_keygen(256, random.Random(42))


def test_production_key_size():
    pk, sk = paillier.paillier_keygen(1024, random.Random(1))
    assert pk.n.bit_length() == 1024
    rng = random.Random(2)
    assert paillier.decrypt(sk, paillier.encrypt(pk, 123456789, rng)) == 123456789


def test_minimum_key_size_roundtrips_zero():
    pk, sk = paillier.paillier_keygen(64, random.Random(5))
    assert pk.n.bit_length() == 64
    assert paillier.decrypt(sk, paillier.encrypt(pk, 0, random.Random(6))) == 0


def test_rejects_tiny_keys():
    with pytest.raises(ValueError):
        paillier.paillier_keygen(32, random.Random(0))


def test_roundtrip_oracle_100_random(keypair):
    pk, sk = keypair
    rng = random.Random(7)
    half = pk.n // 2
    for _ in range(100):
        m = rng.randint(-(half - 1), half - 1)
        assert paillier.decrypt(sk, paillier.encrypt(pk, m, rng)) == m


class TestSignedEncoding:
    def test_reference_value(self, keypair):
        pk, sk = keypair
        rng = random.Random(8)
        assert paillier.decrypt(sk, paillier.encrypt(pk, 14404, rng)) == 14404

    def test_zero(self, keypair):
        pk, sk = keypair
        assert paillier.decrypt(sk, paillier.encrypt(pk, 0, random.Random(9))) == 0

    def test_negative_encodes_as_n_minus_x(self, keypair):
        pk, sk = keypair
        assert paillier.encode_signed(pk, -6300) == pk.n - 6300
        assert paillier.decode_signed(pk, pk.n - 6300) == -6300
        assert paillier.decrypt(sk, paillier.encrypt(pk, -6300, random.Random(10))) == -6300

    def test_out_of_range_rejected(self, keypair):
        pk, _ = keypair
        with pytest.raises(PlaintextOutOfRange):
            paillier.encrypt(pk, pk.n // 2 + 1, random.Random(0))


class TestHomomorphic:
    def test_addition_forced_example(self, keypair):
        pk, sk = keypair
        rng = random.Random(11)
        c = paillier.hom_add(pk, paillier.encrypt(pk, 13, rng), paillier.encrypt(pk, 4, rng))
        assert paillier.decrypt(sk, c) == 17

    def test_addition_identity(self, keypair):
        pk, sk = keypair
        rng = random.Random(12)
        c = paillier.hom_add(pk, paillier.encrypt(pk, -555, rng), paillier.encrypt(pk, 0, rng))
        assert paillier.decrypt(sk, c) == -555

    def test_addition_oracle_100_random(self, keypair):
        pk, sk = keypair
        rng = random.Random(13)
        for _ in range(100):
            m1, m2 = rng.randint(-10**9, 10**9), rng.randint(-10**9, 10**9)
            c = paillier.hom_add(pk, paillier.encrypt(pk, m1, rng), paillier.encrypt(pk, m2, rng))
            assert paillier.decrypt(sk, c) == m1 + m2

    def test_scaling_reference_values(self, keypair):
        pk, sk = keypair
        rng = random.Random(14)
        assert paillier.decrypt(sk, paillier.hom_scale(pk, paillier.encrypt(pk, 3, rng), 2100)) == 6300
        assert paillier.decrypt(sk, paillier.hom_scale(pk, paillier.encrypt(pk, 9, rng), 200)) == 1800

    def test_scaling_by_one(self, keypair):
        pk, sk = keypair
        c = paillier.encrypt(pk, 777, random.Random(15))
        assert paillier.decrypt(sk, paillier.hom_scale(pk, c, 1)) == 777

    def test_negation(self, keypair):
        pk, sk = keypair
        rng = random.Random(16)
        assert paillier.decrypt(sk, paillier.hom_neg(pk, paillier.encrypt(pk, 5, rng))) == -5
        assert paillier.decrypt(sk, paillier.hom_neg(pk, paillier.encrypt(pk, 0, rng))) == 0

    def test_negation_involution_oracle(self, keypair):
        pk, sk = keypair
        rng = random.Random(17)
        for _ in range(25):
            m = rng.randint(-10**12, 10**12)
            c = paillier.hom_neg(pk, paillier.hom_neg(pk, paillier.encrypt(pk, m, rng)))
            assert paillier.decrypt(sk, c) == m


# module-scope keypair for the hypothesis properties (fixtures and @given do not mix)
_PK, _SK = paillier.paillier_keygen(128, random.Random(0xABCD))
_HALF = _PK.n // 2


@given(m1=st.integers(-2**40, 2**40), m2=st.integers(-2**40, 2**40))
@settings(max_examples=100, deadline=None)
def test_property_a_additivity(m1, m2):
    rng = random.Random(m1 ^ (m2 << 1))
    c = paillier.hom_add(_PK, paillier.encrypt(_PK, m1, rng), paillier.encrypt(_PK, m2, rng))
    assert paillier.decrypt(_SK, c) == m1 + m2


@given(m=st.integers(-2**40, 2**40), k=st.integers(-2**20, 2**20))
@settings(max_examples=100, deadline=None)
def test_property_b_scaling(m, k):
    rng = random.Random(m ^ k)
    c = paillier.hom_scale(_PK, paillier.encrypt(_PK, m, rng), k)
    assert paillier.decrypt(_SK, c) == k * m


@given(m=st.integers(-(_HALF - 1), _HALF - 1))
@settings(max_examples=100, deadline=None)
def test_signed_roundtrip_property(m):
    assert paillier.decode_signed(_PK, paillier.encode_signed(_PK, m)) == m


def test_probabilistic_encryption_inequality(keypair):
    pk, _ = keypair
    rng = random.Random(18)
    for _ in range(100):
        a = paillier.encrypt(pk, 42, rng)
        b = paillier.encrypt(pk, 42, rng)
        assert a.value != b.value


def test_invalid_ciphertext_detected(keypair):
    pk, sk = keypair
    with pytest.raises(InvalidCiphertext):
        paillier.decrypt(sk, paillier.PaillierCiphertext(pk.n))


def test_key_and_ciphertext_serialization(keypair):
    pk, sk = keypair
    pk2, sk2 = paillier_keypair_from_json(paillier_keypair_to_json(pk, sk))
    assert (pk2.n, sk2.lam, sk2.mu) == (pk.n, sk.lam, sk.mu)
    c = paillier.encrypt(pk, -987654321, random.Random(19))
    assert ciphertext_from_hex(ciphertext_to_hex(c)) == c
    assert paillier.decrypt(sk2, c) == -987654321
