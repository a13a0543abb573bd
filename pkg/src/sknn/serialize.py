"""Exact text serialization for rationals, keys, ciphertexts and databases.

Rationals render as finite decimal strings when the denominator divides a
power of ten ("8.5", "-42.25"), otherwise as exact "num/den" fractions, so
files round-trip bit-for-bit.
"""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Sequence

from .paillier import PaillierCiphertext, PaillierPrivateKey, PaillierPublicKey

_MAX_DECIMAL_DIGITS = 12


def rational_to_str(x: Fraction) -> str:
    den = x.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    digits = max(twos, fives)
    if den != 1 or digits > _MAX_DECIMAL_DIGITS:
        return f"{x.numerator}/{x.denominator}"
    if digits == 0:
        return str(x.numerator)
    units = abs(x.numerator) * 10 ** digits // x.denominator
    sign = "-" if x.numerator < 0 else ""
    head, tail = divmod(units, 10 ** digits)
    return f"{sign}{head}.{tail:0{digits}d}"


def rational_from_str(s: str) -> Fraction:
    return Fraction(s)


def vector_to_strs(v: Sequence[Fraction]) -> list[str]:
    return [rational_to_str(Fraction(x)) for x in v]


def vector_from_strs(strs: Sequence[str]) -> list[Fraction]:
    return [rational_from_str(s) for s in strs]


def ciphertext_to_hex(c: PaillierCiphertext) -> str:
    return format(c.value, "x")


def ciphertext_from_hex(s: str) -> PaillierCiphertext:
    return PaillierCiphertext(int(s, 16))


def paillier_keypair_to_json(pk: PaillierPublicKey, sk: PaillierPrivateKey) -> str:
    doc = {"n": str(pk.n), "g": str(pk.g), "lambda": str(sk.lam), "mu": str(sk.mu)}
    return json.dumps(doc, sort_keys=True)


def paillier_keypair_from_json(text: str) -> tuple[PaillierPublicKey, PaillierPrivateKey]:
    doc = json.loads(text)
    pk = PaillierPublicKey(int(doc["n"]))
    if int(doc["g"]) != pk.g:
        raise ValueError("generator is not n + 1")
    return pk, PaillierPrivateKey(pk, int(doc["lambda"]), int(doc["mu"]))
