"""ASPE-style baseline k-NN scheme with Paillier query blinding.

This is the attack target: the whole blinded query is multiplied by a single
scalar beta_q, the query tuple is padded with literal zeros, and the pad
vector tau is a long-term secret.  The attacks module exploits exactly these
choices, so the vulnerable structure is reproduced faithfully.

Ciphertext layout: a d-dimensional point becomes a (d+1+c+epsilon)-vector
(s_1-2p_1, ..., s_d-2p_d, s_{d+1}+||p||^2, tau, v_i) * M_hat^-1.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import paillier
from .errors import CoordinateOutOfBound, InvalidParams
from .linalg import MacTally, Matrix, Permutation, apply_perm_columns, mat_invert, sample_invertible, vec_mat_mul
from .proposed import (
    BlindedQuery,
    CspQuery,
    EncTuple,
    QueryRequest,
    csp_knn,
    csp_score,
    qu_build_request,
    qu_unwrap,
)

SCHEME_TAG = "baseline"

_RAND_BOUND = 1 << 16


@dataclass(frozen=True)
class BaselineParams:
    d: int
    c: int
    epsilon: int
    integerized: bool = True

    def __post_init__(self) -> None:
        if self.d < 1 or self.c < 1 or self.epsilon < 1:
            raise InvalidParams("d, c, epsilon must be positive")

    @property
    def size(self) -> int:
        return self.d + 1 + self.c + self.epsilon


@dataclass(frozen=True)
class BaselineKey:
    params: BaselineParams
    coord_bound: int
    matrix: Matrix
    s: tuple[int, ...]
    tau: tuple[int, ...]          # long-term, reused for every tuple
    perm: Permutation
    m_hat: Matrix = field(repr=False)
    m_hat_inv: Matrix = field(repr=False)
    # uniform factor clearing matrix denominators in the Paillier exponents
    exponent_scale: int = 1

    def scaled_entry(self, i: int, j: int) -> int:
        x = self.m_hat[i, j] * self.exponent_scale
        return int(x)


@dataclass(frozen=True)
class BaselineTupleEphemerals:
    v: tuple[int, ...]            # epsilon-dimensional, fresh per tuple


@dataclass(frozen=True)
class BaselineQueryEphemerals:
    r_q: tuple[int, ...]          # c-dimensional, fresh per query
    beta_q: int


def baseline_keygen(d: int, c: int, epsilon: int, rng: random.Random,
                    coord_bound: int = 100, integerized: bool = True) -> BaselineKey:
    """Sample a full baseline key.

    Integerized mode (the attack setting) draws all matrix entries as positive
    integers; the real-valued mode draws one-decimal entries and clears the
    denominator with a uniform factor of 10 on the query side.
    """
    params = BaselineParams(d, c, epsilon, integerized)
    n = params.size
    if integerized:
        matrix = _sample_invertible_int(n, rng)
        scale = 1
    else:
        matrix = sample_invertible(n, rng)
        scale = 10
    s = tuple(rng.randint(1, _RAND_BOUND) for _ in range(d + 1))
    tau = tuple(rng.randint(1, _RAND_BOUND) for _ in range(c))
    perm = Permutation.random(n, rng)
    m_hat = apply_perm_columns(matrix, perm.inverse())
    return BaselineKey(params, coord_bound, matrix, s, tau, perm,
                       m_hat, mat_invert(m_hat), scale)


def _sample_invertible_int(n: int, rng: random.Random) -> Matrix:
    from .errors import ResampleExhausted, Singular
    for _ in range(64):
        m = Matrix([[rng.randint(1, 99) for _ in range(n)] for _ in range(n)])
        try:
            mat_invert(m)
        except Singular:
            continue
        return m
    raise ResampleExhausted("no invertible integer matrix found")


def gen_tuple_ephemerals(key: BaselineKey, rng: random.Random) -> BaselineTupleEphemerals:
    return BaselineTupleEphemerals(tuple(rng.randint(1, _RAND_BOUND)
                                         for _ in range(key.params.epsilon)))


def gen_query_ephemerals(key: BaselineKey, rng: random.Random) -> BaselineQueryEphemerals:
    return BaselineQueryEphemerals(tuple(rng.randint(1, _RAND_BOUND)
                                         for _ in range(key.params.c)),
                                   rng.randint(1, _RAND_BOUND))


def baseline_encrypt_tuple(key: BaselineKey, p: Sequence[int], rng: random.Random,
                           ephemerals: BaselineTupleEphemerals | None = None,
                           index: int = 0, tally: MacTally | None = None) -> EncTuple:
    d = key.params.d
    if len(p) != d:
        raise CoordinateOutOfBound(f"expected {d} coordinates, got {len(p)}")
    for x in p:
        if int(x) != x or not 0 <= x <= key.coord_bound:
            raise CoordinateOutOfBound(f"coordinate {x} outside [0, {key.coord_bound}]")
    if ephemerals is None:
        ephemerals = gen_tuple_ephemerals(key, rng)
    norm_sq = sum(x * x for x in p)
    p_hat = ([Fraction(key.s[i] - 2 * p[i]) for i in range(d)]
             + [Fraction(key.s[d] + norm_sq)]
             + [Fraction(x) for x in key.tau]
             + [Fraction(x) for x in ephemerals.v])
    return EncTuple(index, tuple(vec_mat_mul(p_hat, key.m_hat_inv, tally)))


def baseline_encrypt_database(key: BaselineKey, points: Sequence[Sequence[int]],
                              rng: random.Random, tally: MacTally | None = None) -> list[EncTuple]:
    return [baseline_encrypt_tuple(key, p, rng, index=i, tally=tally)
            for i, p in enumerate(points)]


def baseline_decrypt_tuple(key: BaselineKey, ct: EncTuple) -> list[Fraction]:
    p_hat = vec_mat_mul(ct.coords, key.m_hat)
    return [(key.s[i] - p_hat[i]) / 2 for i in range(key.params.d)]


def baseline_blind_query(key: BaselineKey, req: QueryRequest, rng: random.Random,
                         ephemerals: BaselineQueryEphemerals | None = None,
                         counts=None) -> BlindedQuery:
    """Owner-side blinding: element i decrypts to beta_q * sum_j M_hat[i,j] * q_hat[j].

    q_hat is (q, 1, r_q, 0...0); the zero padding and the global beta_q are the
    exploitable weaknesses.
    """
    d, c, eps = key.params.d, key.params.c, key.params.epsilon
    if len(req.ciphertexts) != d:
        raise CoordinateOutOfBound(f"expected {d} query ciphertexts")
    if ephemerals is None:
        ephemerals = gen_query_ephemerals(key, rng)
    pk = req.pk
    q_hat = list(req.ciphertexts)
    q_hat.append(paillier.encrypt(pk, 1, rng))
    q_hat.extend(paillier.encrypt(pk, r, rng) for r in ephemerals.r_q)
    q_hat.extend(paillier.encrypt(pk, 0, rng) for _ in range(eps))
    if counts is not None:
        counts.paillier_encs += 1 + c + eps
    out = []
    for i in range(key.params.size):
        acc = paillier.PaillierCiphertext(1)
        for j, cj in enumerate(q_hat):
            exp = ephemerals.beta_q * key.scaled_entry(i, j)
            acc = paillier.hom_add(pk, acc, paillier.hom_scale(pk, cj, exp))
        out.append(acc)
    if counts is not None:
        counts.paillier_exps += key.params.size * key.params.size
    return BlindedQuery(tuple(out))


def expected_baseline_csp_query(key: BaselineKey, q: Sequence[int],
                                ephemerals: BaselineQueryEphemerals) -> list[int]:
    """Plaintext-side oracle for the unwrapped query."""
    q_hat = list(q) + [1] + list(ephemerals.r_q) + [0] * key.params.epsilon
    return [ephemerals.beta_q * sum(key.scaled_entry(i, j) * q_hat[j]
                                    for j in range(key.params.size))
            for i in range(key.params.size)]


baseline_knn = csp_knn
baseline_score = csp_score

__all__ = [
    "SCHEME_TAG", "BaselineParams", "BaselineKey", "BaselineTupleEphemerals",
    "BaselineQueryEphemerals", "baseline_keygen", "gen_tuple_ephemerals",
    "gen_query_ephemerals", "baseline_encrypt_tuple", "baseline_encrypt_database",
    "baseline_decrypt_tuple", "baseline_blind_query", "expected_baseline_csp_query",
    "baseline_knn", "baseline_score", "EncTuple", "QueryRequest", "BlindedQuery",
    "CspQuery", "qu_build_request", "qu_unwrap",
]
