"""Additively homomorphic Paillier cryptosystem with signed-plaintext encoding.

Used to blind k-NN queries against the data owner.  The generator is fixed to
g = n + 1 so decryption reduces to the L-function shortcut, and plaintexts are
signed integers in (-n/2, n/2) encoded as residues mod n.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .errors import InvalidCiphertext, PlaintextOutOfRange

MILLER_RABIN_ROUNDS = 64


def _is_probable_prime(n: int, rng: random.Random) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for _ in range(MILLER_RABIN_ROUNDS):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _random_prime(bits: int, rng: random.Random) -> int:
    while True:
        # top two bits set so the product of two such primes has full length
        cand = rng.getrandbits(bits) | (1 << (bits - 1)) | (1 << (bits - 2)) | 1
        if _is_probable_prime(cand, rng):
            return cand


@dataclass(frozen=True)
class PaillierPublicKey:
    n: int

    @property
    def n_squared(self) -> int:
        return self.n * self.n

    @property
    def g(self) -> int:
        return self.n + 1

    @property
    def half_n(self) -> int:
        return self.n // 2


@dataclass(frozen=True)
class PaillierPrivateKey:
    public_key: PaillierPublicKey
    lam: int  # lcm(p-1, q-1)
    mu: int   # lam^-1 mod n, valid because g = n + 1


@dataclass(frozen=True)
class PaillierCiphertext:
    value: int


def paillier_keygen(bits: int, rng: random.Random) -> tuple[PaillierPublicKey, PaillierPrivateKey]:
    """Keypair with an exactly `bits`-bit modulus.  bits >= 64; 1024 in production."""
    if bits < 64:
        raise ValueError("modulus below 64 bits is not supported")
    half = bits // 2
    while True:
        p = _random_prime(half, rng)
        q = _random_prime(bits - half, rng)
        if p == q:
            continue
        n = p * q
        if n.bit_length() != bits:
            continue
        lam = (p - 1) * (q - 1) // math.gcd(p - 1, q - 1)
        if math.gcd(n, (p - 1) * (q - 1)) != 1:
            continue
        pk = PaillierPublicKey(n)
        sk = PaillierPrivateKey(pk, lam, pow(lam, -1, n))
        return pk, sk


def encode_signed(pk: PaillierPublicKey, m: int) -> int:
    if 2 * abs(m) >= pk.n:
        raise PlaintextOutOfRange(f"|{m}| >= n/2")
    return m % pk.n


def decode_signed(pk: PaillierPublicKey, residue: int) -> int:
    return residue - pk.n if residue > pk.half_n else residue


def encrypt(pk: PaillierPublicKey, m: int, rng: random.Random) -> PaillierCiphertext:
    """Probabilistic encryption of a signed plaintext."""
    enc = encode_signed(pk, m)
    n, n2 = pk.n, pk.n_squared
    while True:
        r = rng.randrange(1, n)
        if math.gcd(r, n) == 1:
            break
    # g^m = 1 + m*n mod n^2 for g = n + 1
    c = (1 + enc * n) % n2 * pow(r, n, n2) % n2
    return PaillierCiphertext(c)


def decrypt(sk: PaillierPrivateKey, c: PaillierCiphertext) -> int:
    pk = sk.public_key
    if math.gcd(c.value, pk.n) != 1:
        raise InvalidCiphertext("ciphertext shares a factor with the modulus")
    u = pow(c.value, sk.lam, pk.n_squared)
    residue = (u - 1) // pk.n * sk.mu % pk.n
    return decode_signed(pk, residue)


def hom_add(pk: PaillierPublicKey, c1: PaillierCiphertext, c2: PaillierCiphertext) -> PaillierCiphertext:
    """D(result) = m1 + m2."""
    return PaillierCiphertext(c1.value * c2.value % pk.n_squared)


def hom_scale(pk: PaillierPublicKey, c: PaillierCiphertext, k: int) -> PaillierCiphertext:
    """D(result) = k * m, for signed integer k (reduced mod n)."""
    return PaillierCiphertext(pow(c.value, k % pk.n, pk.n_squared))


def hom_neg(pk: PaillierPublicKey, c: PaillierCiphertext) -> PaillierCiphertext:
    """D(result) = -m, via the modular inverse of the ciphertext."""
    return PaillierCiphertext(pow(c.value, -1, pk.n_squared))
