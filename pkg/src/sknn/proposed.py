"""Enhanced secure k-NN scheme: matrix transform plus Paillier query blinding.

Tuples are shifted, norm-augmented, padded with a per-tuple normalizer vector
tau (w . tau = 0) and multiplied by the inverse of a column-permuted secret
matrix.  Queries travel under Paillier; the data owner injects query-dependent
randomizers r_enc whose decryption r_dec also satisfies w . r_dec = 0, so the
pad contributions cancel in every distance comparison while remaining fresh
per query.
"""
from __future__ import annotations

import math
import random
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from . import paillier
from .errors import (
    CoordinateOutOfBound,
    InvalidParams,
    KTooLarge,
    NormalizerOverflow,
    QueryRefused,
)
from .linalg import MacTally, Matrix, Permutation, apply_perm_columns, dot, mat_invert, sample_invertible, vec_mat_mul

SCHEME_TAG = "proposed"

_RAND_BOUND = 1 << 16


@dataclass(frozen=True)
class SecurityParams:
    """Dimension and scale knobs.

    eta = d + 2 + c + epsilon is the ciphertext dimension.  matrix_scale
    integerizes the secret matrix where its rows become Paillier exponents,
    query_scale integerizes the query-side randomizers, data_scale is the
    fixed-point factor applied to raw data before encryption.
    """

    d: int
    c: int
    epsilon: int
    matrix_scale: int = 10
    query_scale: int = 100
    data_scale: int = 1000
    alpha_form: str = "per-coordinate"  # or "scalar-max"

    def __post_init__(self) -> None:
        if self.d < 1 or self.c <= 1 or self.c > self.d:
            raise InvalidParams(f"need 1 < c <= d, got c={self.c}, d={self.d}")
        if self.c == self.d:
            warnings.warn("c == d is allowed but weakens the padding split", stacklevel=3)
        if self.epsilon < 2:
            raise InvalidParams("epsilon must be >= 2 (pad segment needs a 0 and a 1)")
        if self.alpha_form not in ("per-coordinate", "scalar-max"):
            raise InvalidParams(f"unknown alpha_form {self.alpha_form!r}")
        if min(self.matrix_scale, self.query_scale, self.data_scale) < 1:
            raise InvalidParams("scales must be positive integers")

    @property
    def eta(self) -> int:
        return self.d + 2 + self.c + self.epsilon


@dataclass(frozen=True)
class OwnerKey:
    """The data owner's long-term secret."""

    params: SecurityParams
    coord_bound: int
    matrix: Matrix                    # M
    s: tuple[int, ...]                # (d+1)-dimensional shift
    sigma: tuple[int, ...]            # d-dimensional dominance point
    b: tuple[int, ...]                # (c+epsilon)-bit pattern
    w: tuple[int, ...]                # (c+epsilon)-dimensional weights
    perm: Permutation
    m_hat: Matrix = field(repr=False)
    m_hat_inv: Matrix = field(repr=False)
    scaled_m_hat: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def last_one(self) -> int:
        return max(j for j, bit in enumerate(self.b) if bit == 1)

    @property
    def last_zero(self) -> int:
        return max(j for j, bit in enumerate(self.b) if bit == 0)

    @property
    def free_zero_slots(self) -> list[int]:
        lz = self.last_zero
        return [j for j, bit in enumerate(self.b) if bit == 0 and j != lz]

    @property
    def pad_one_slots(self) -> list[int]:
        lo = self.last_one
        return [j for j, bit in enumerate(self.b) if bit == 1 and j >= self.params.c and j != lo]


def _validate_components(params: SecurityParams, coord_bound: int, matrix: Matrix,
                         s: Sequence[int], sigma: Sequence[int], b: Sequence[int],
                         w: Sequence[int], perm: Permutation) -> None:
    eta, c, eps = params.eta, params.c, params.epsilon
    if coord_bound < 1:
        raise InvalidParams("coordinate bound must be >= 1")
    if matrix.nrows != eta or matrix.ncols != eta:
        raise InvalidParams(f"matrix must be {eta}x{eta}")
    if len(s) != params.d + 1:
        raise InvalidParams("shift vector must have d+1 entries")
    if len(sigma) != params.d:
        raise InvalidParams("dominance point must have d entries")
    if any(x <= coord_bound for x in sigma):
        raise InvalidParams("every dominance coordinate must exceed the plaintext bound")
    if len(b) != c + eps or any(bit not in (0, 1) for bit in b):
        raise InvalidParams("b must be a (c+epsilon)-bit pattern")
    if any(bit != 1 for bit in b[:c]):
        raise InvalidParams("first c bits of b must be 1")
    tail = b[c:]
    if 0 not in tail or 1 not in tail:
        raise InvalidParams("the epsilon segment of b needs at least one 0 and one 1")
    if len(w) != c + eps or any(int(x) != x or x <= 0 for x in w):
        raise InvalidParams("w must be positive integers")
    if len(perm) != eta:
        raise InvalidParams("permutation must cover eta positions")


def _scaled_rows(m_hat: Matrix, scale: int) -> tuple[tuple[int, ...], ...]:
    rows = []
    for row in m_hat.rows:
        scaled = []
        for x in row:
            sx = x * scale
            if sx.denominator != 1:
                raise InvalidParams(f"matrix entry {x} is not integral at scale {scale}")
            scaled.append(int(sx))
        rows.append(tuple(scaled))
    return tuple(rows)


def build_owner_key(params: SecurityParams, coord_bound: int, matrix: Matrix,
                    s: Sequence[int], sigma: Sequence[int], b: Sequence[int],
                    w: Sequence[int], perm: Permutation) -> OwnerKey:
    """Assemble and validate a key from explicit components (tests, toy replay)."""
    _validate_components(params, coord_bound, matrix, s, sigma, b, w, perm)
    # the permutation scatters columns: column j of M lands at position perm(j)
    m_hat = apply_perm_columns(matrix, perm.inverse())
    return OwnerKey(params, coord_bound, matrix, tuple(s), tuple(sigma), tuple(b),
                    tuple(w), perm, m_hat, mat_invert(m_hat),
                    _scaled_rows(m_hat, params.matrix_scale))


def keygen(params: SecurityParams, coord_bound: int, rng: random.Random,
           tally: MacTally | None = None) -> OwnerKey:
    if coord_bound < 1:
        raise InvalidParams("coordinate bound must be >= 1")
    eta, c, eps = params.eta, params.c, params.epsilon
    matrix = sample_invertible(eta, rng)
    if tally is not None:
        tally.add(eta * eta)
    s = [rng.randint(1, _RAND_BOUND) for _ in range(params.d + 1)]
    sigma = [coord_bound + rng.randint(1, max(coord_bound, 2)) for _ in range(params.d)]
    while True:
        tail = [rng.randint(0, 1) for _ in range(eps)]
        if 0 in tail and 1 in tail:
            break
    b = [1] * c + tail
    w = [rng.randint(1, _RAND_BOUND) for _ in range(c + eps)]
    perm = Permutation.random(eta, rng)
    return build_owner_key(params, coord_bound, matrix, s, sigma, b, w, perm)


@dataclass(frozen=True)
class EphemeralTupleSecrets:
    """Per-tuple randomness: the pad vector tau (w . tau = 0), alpha, and t.

    nom_p is the value of tau's last-0 slot, solved so the weighted sum
    vanishes exactly.
    """

    tau: tuple[Fraction, ...]
    alpha: int
    t: tuple[int, ...]
    free_rands: tuple[int, ...]
    nom_p: Fraction


def make_tuple_secrets(key: OwnerKey, free_rands: Sequence[int],
                       t: Sequence[int]) -> EphemeralTupleSecrets:
    """Build tuple secrets from explicit draws; the normalizer slot is solved exactly."""
    free_slots = key.free_zero_slots
    if len(free_rands) != len(free_slots):
        raise InvalidParams(f"expected {len(free_slots)} free draws, got {len(free_rands)}")
    c, eps = key.params.c, key.params.epsilon
    tau: list[Fraction] = [Fraction(0)] * (c + eps)
    draws = iter(free_rands)
    for j in range(c + eps):
        if key.b[j] == 1:
            tau[j] = Fraction(key.w[j])
        elif j != key.last_zero:
            tau[j] = Fraction(next(draws))
    lz = key.last_zero
    acc = sum(key.w[j] * tau[j] for j in range(c + eps) if j != lz)
    tau[lz] = -acc / key.w[lz]
    alpha = _alpha_value(key, t)
    return EphemeralTupleSecrets(tuple(tau), alpha, tuple(t), tuple(free_rands), tau[lz])


def _alpha_value(key: OwnerKey, t: Sequence[int]) -> int:
    if key.params.alpha_form == "scalar-max":
        if len(t) != 1:
            raise InvalidParams("scalar-max alpha takes a single t draw")
        smax = max(key.sigma)
        if not 0 < t[0] < smax:
            raise InvalidParams("t must satisfy 0 < t < max(sigma)")
        return (smax - t[0]) ** 2
    if len(t) != key.params.d:
        raise InvalidParams("per-coordinate alpha takes d draws")
    for ti, si in zip(t, key.sigma):
        if not 0 < ti < si:
            raise InvalidParams("each t_i must satisfy 0 < t_i < sigma_i")
    return sum((si - ti) ** 2 for ti, si in zip(t, key.sigma))


def gen_tau(key: OwnerKey, rng: random.Random) -> EphemeralTupleSecrets:
    """Fresh per-tuple secrets: free pad slots and the alpha draw."""
    free_rands = [rng.randint(1, _RAND_BOUND) for _ in key.free_zero_slots]
    if key.params.alpha_form == "scalar-max":
        t = [rng.randint(1, max(key.sigma) - 1)]
    else:
        t = [rng.randint(1, si - 1) for si in key.sigma]
    return make_tuple_secrets(key, free_rands, t)


@dataclass(frozen=True)
class EncTuple:
    index: int
    coords: tuple[Fraction, ...]


def encrypt_tuple(key: OwnerKey, p: Sequence[int], rng: random.Random,
                  secrets: EphemeralTupleSecrets | None = None, index: int = 0,
                  tally: MacTally | None = None) -> EncTuple:
    d = key.params.d
    if len(p) != d:
        raise CoordinateOutOfBound(f"expected {d} coordinates, got {len(p)}")
    for x in p:
        if int(x) != x or not 0 <= x <= key.coord_bound:
            raise CoordinateOutOfBound(f"coordinate {x} outside [0, {key.coord_bound}]")
    if secrets is None:
        secrets = gen_tau(key, rng)
    norm_sq = sum(x * x for x in p)
    p_hat = ([Fraction(key.s[i] - 2 * p[i]) for i in range(d)]
             + [Fraction(key.s[d] + norm_sq), Fraction(secrets.alpha)]
             + list(secrets.tau))
    return EncTuple(index, tuple(vec_mat_mul(p_hat, key.m_hat_inv, tally)))


def encrypt_database(key: OwnerKey, points: Sequence[Sequence[int]], rng: random.Random,
                     tally: MacTally | None = None) -> list[EncTuple]:
    return [encrypt_tuple(key, p, rng, index=i, tally=tally) for i, p in enumerate(points)]


def decrypt_tuple(key: OwnerKey, ct: EncTuple) -> list[Fraction]:
    """Exact recovery of the plaintext coordinates.

    Garbage in, garbage out: a tuple encrypted under a different key decrypts
    to meaningless rationals with no error raised.
    """
    p_hat = vec_mat_mul(ct.coords, key.m_hat)
    return [(key.s[i] - p_hat[i]) / 2 for i in range(key.params.d)]


@dataclass(frozen=True)
class QueryRequest:
    ciphertexts: tuple[paillier.PaillierCiphertext, ...]
    pk: paillier.PaillierPublicKey


def qu_build_request(q: Sequence[int], pk: paillier.PaillierPublicKey,
                     rng: random.Random, coord_bound: int) -> QueryRequest:
    for x in q:
        if int(x) != x or not 0 <= x <= coord_bound:
            raise CoordinateOutOfBound(f"query coordinate {x} outside [0, {coord_bound}]")
    return QueryRequest(tuple(paillier.encrypt(pk, int(x), rng) for x in q), pk)


def _coordinate_blocks(d: int, c: int) -> list[tuple[int, int]]:
    """Half-open index ranges into v: c-1 blocks of floor(d/c), the last takes the rest."""
    size = d // c
    return [(j * size, (j + 1) * size if j < c - 1 else d) for j in range(c)]


@dataclass(frozen=True)
class EphemeralQuerySecrets:
    """Per-query randomness and the derived normalizer-slot coefficients.

    The normalizer plaintext depends on the (hidden) query, so the owner only
    knows its coefficient structure: nom_q = sum_j block_coeffs[j] * (sum of
    the j-th shuffled coordinate block) + known_coeff.  r_block_scale is the
    uniform factor applied to the whole r_enc block so those coefficients are
    integral.
    """

    beta1: int
    beta2: int
    v: tuple[int, ...]
    block_rands: tuple[int, ...]
    pad_rands: tuple[int, ...]
    r_block_scale: int
    block_coeffs: tuple[int, ...]
    known_coeff: int

    def nom_q_for(self, key: OwnerKey, q: Sequence[int]) -> int:
        total = self.known_coeff
        for coeff, (lo, hi) in zip(self.block_coeffs, _coordinate_blocks(key.params.d, key.params.c)):
            total += coeff * sum(q[self.v[t]] for t in range(lo, hi))
        return total


def make_query_secrets(key: OwnerKey, beta1: int, beta2: int, v: Sequence[int],
                       block_rands: Sequence[int], pad_rands: Sequence[int]) -> EphemeralQuerySecrets:
    """Assemble query secrets from explicit draws.

    Callers injecting explicit beta values are responsible for the comparison
    safety bound beta2 > beta1 * sum(sigma^2); the sampled path enforces it.
    """
    c = key.params.c
    if sorted(v) != list(range(key.params.d)):
        raise InvalidParams("v must be a permutation of the coordinate indices")
    if len(block_rands) != c:
        raise InvalidParams(f"expected {c} block draws")
    if len(pad_rands) != len(key.pad_one_slots):
        raise InvalidParams(f"expected {len(key.pad_one_slots)} pad draws")
    if beta1 < 1 or beta2 < 1:
        raise InvalidParams("beta draws must be positive")
    scale = key.params.query_scale
    w_last = key.w[key.last_one]
    block_terms = [scale * key.w[j] * block_rands[j] for j in range(c)]
    known = sum(key.w[j] * key.w[j] for j in key.free_zero_slots + [key.last_zero])
    known += sum(key.w[j] * r for j, r in zip(key.pad_one_slots, pad_rands))
    known_term = scale * known
    k = 1
    for term in block_terms + [known_term]:
        k = math.lcm(k, w_last // math.gcd(w_last, term))
    block_coeffs = tuple(k * t // w_last for t in block_terms)
    return EphemeralQuerySecrets(beta1, beta2, tuple(v), tuple(block_rands),
                                 tuple(pad_rands), k, block_coeffs,
                                 k * known_term // w_last)


def gen_query_secrets(key: OwnerKey, rng: random.Random) -> EphemeralQuerySecrets:
    beta1 = rng.randint(1, _RAND_BOUND)
    sigma_sq = sum(x * x for x in key.sigma)
    beta2 = beta1 * (sigma_sq + 1) + rng.randint(1, _RAND_BOUND)
    v = list(range(key.params.d))
    rng.shuffle(v)
    block_rands = [rng.randint(1, _RAND_BOUND) for _ in range(key.params.c)]
    pad_rands = [rng.randint(1, _RAND_BOUND) for _ in key.pad_one_slots]
    return make_query_secrets(key, beta1, beta2, v, block_rands, pad_rands)


@dataclass(frozen=True)
class BlindedQuery:
    ciphertexts: tuple[paillier.PaillierCiphertext, ...]


@dataclass(frozen=True)
class CspQuery:
    values: tuple[int, ...]


class OpCount:
    """Paillier operation tallies for the query-blinding phase.

    paillier_exps counts only the final assembly exponentiations (eta^2 on a
    full blind).  paillier_encs counts one tick per non-coordinate slot of the
    blinded tuple, however the slot ciphertext is produced (eta - d on a full
    blind).
    """

    __slots__ = ("paillier_exps", "paillier_encs")

    def __init__(self) -> None:
        self.paillier_exps = 0
        self.paillier_encs = 0


def _max_abs_ubar(key: OwnerKey, secrets: EphemeralQuerySecrets, bound: int) -> list[int]:
    """Worst-case plaintext magnitude per slot, from the declared query bound."""
    d, c = key.params.d, key.params.c
    scale = key.params.query_scale
    k = secrets.r_block_scale
    blocks = _coordinate_blocks(d, c)
    out = [secrets.beta2 * scale * bound] * d
    out += [secrets.beta2 * scale, secrets.beta1 * scale]
    r_bounds = [0] * (c + key.params.epsilon)
    for j, (lo, hi) in enumerate(blocks):
        r_bounds[j] = secrets.block_rands[j] * scale * k * (hi - lo) * bound
    for j in key.free_zero_slots + [key.last_zero]:
        r_bounds[j] = key.w[j] * scale * k
    for j, r in zip(key.pad_one_slots, secrets.pad_rands):
        r_bounds[j] = r * scale * k
    nom_bound = secrets.known_coeff
    for coeff, (lo, hi) in zip(secrets.block_coeffs, blocks):
        nom_bound += coeff * (hi - lo) * bound
    r_bounds[key.last_one] = nom_bound
    return out + r_bounds


def do_blind_query(key: OwnerKey, req: QueryRequest, rng: random.Random,
                   policy: Callable[[QueryRequest], bool] | None = None,
                   secrets: EphemeralQuerySecrets | None = None,
                   counts: OpCount | None = None,
                   query_bound: int | None = None) -> BlindedQuery:
    """The owner-side blinding step: returns the eta Paillier ciphertexts a^(q).

    query_bound is the owner's declared limit on admissible query coordinates
    (defaults to the data bound); the overflow guard sizes plaintexts from it.
    """
    if policy is not None and not policy(req):
        raise QueryRefused("admission policy rejected the query")
    d, c, eps = key.params.d, key.params.c, key.params.epsilon
    if len(req.ciphertexts) != d:
        raise CoordinateOutOfBound(f"expected {d} query ciphertexts")
    if secrets is None:
        secrets = gen_query_secrets(key, rng)
    pk = req.pk
    scale = key.params.query_scale
    k = secrets.r_block_scale

    slot_bounds = _max_abs_ubar(key, secrets, query_bound or key.coord_bound)
    max_assembled = max(sum(abs(mij) * bj for mij, bj in zip(row, slot_bounds))
                        for row in key.scaled_m_hat)
    if 2 * max(max_assembled, max(slot_bounds)) >= pk.n:
        raise NormalizerOverflow("declared bounds exceed the Paillier message space")

    q_bar: list[paillier.PaillierCiphertext] = []
    for cix in req.ciphertexts:
        q_bar.append(paillier.hom_scale(pk, cix, secrets.beta2 * scale))
    q_bar.append(paillier.encrypt(pk, secrets.beta2 * scale, rng))
    q_bar.append(paillier.encrypt(pk, secrets.beta1 * scale, rng))
    if counts is not None:
        counts.paillier_encs += 2

    blocks = _coordinate_blocks(d, c)
    block_prods = []
    for lo, hi in blocks:
        acc = req.ciphertexts[secrets.v[lo]]
        for t in range(lo + 1, hi):
            acc = paillier.hom_add(pk, acc, req.ciphertexts[secrets.v[t]])
        block_prods.append(acc)

    r_enc: list[paillier.PaillierCiphertext] = [None] * (c + eps)  # type: ignore[list-item]
    for j in range(c):
        scaled = paillier.hom_scale(pk, block_prods[j], secrets.block_rands[j] * scale * k)
        r_enc[j] = paillier.hom_neg(pk, scaled)
    for j in key.free_zero_slots + [key.last_zero]:
        r_enc[j] = paillier.hom_neg(pk, paillier.encrypt(pk, key.w[j] * scale * k, rng))
    for j, r in zip(key.pad_one_slots, secrets.pad_rands):
        r_enc[j] = paillier.hom_neg(pk, paillier.encrypt(pk, r * scale * k, rng))
    norm_slot = paillier.encrypt(pk, secrets.known_coeff, rng)
    for coeff, prod in zip(secrets.block_coeffs, block_prods):
        norm_slot = paillier.hom_add(pk, norm_slot, paillier.hom_scale(pk, prod, coeff))
    r_enc[key.last_one] = norm_slot
    q_bar.extend(r_enc)
    if counts is not None:
        counts.paillier_encs += c + eps

    out = []
    one = paillier.PaillierCiphertext(1)  # multiplicative identity, E(0) with unit noise
    for row in key.scaled_m_hat:
        acc = one
        for mij, cj in zip(row, q_bar):
            acc = paillier.hom_add(pk, acc, paillier.hom_scale(pk, cj, mij))
        out.append(acc)
    if counts is not None:
        counts.paillier_exps += key.params.eta * key.params.eta
    return BlindedQuery(tuple(out))


def qu_unwrap(sk: paillier.PaillierPrivateKey, bq: BlindedQuery) -> CspQuery:
    """The querier strips the Paillier layer, leaving the matrix-blinded query."""
    return CspQuery(tuple(paillier.decrypt(sk, c) for c in bq.ciphertexts))


def expected_csp_query(key: OwnerKey, q: Sequence[int],
                       secrets: EphemeralQuerySecrets) -> list[int]:
    """Plaintext-side computation of the blinded query (harness and demo use)."""
    ubar = expected_ubar(key, q, secrets)
    return [int(sum(mij * uj for mij, uj in zip(row, ubar))) for row in key.scaled_m_hat]


def expected_ubar(key: OwnerKey, q: Sequence[int],
                  secrets: EphemeralQuerySecrets) -> list[int]:
    """Plaintext slots of the blinded tuple before the matrix is applied."""
    d, c, eps = key.params.d, key.params.c, key.params.epsilon
    scale = key.params.query_scale
    k = secrets.r_block_scale
    ubar = [secrets.beta2 * scale * q[i] for i in range(d)]
    ubar += [secrets.beta2 * scale, secrets.beta1 * scale]
    r_dec = [0] * (c + eps)
    for j, (lo, hi) in enumerate(_coordinate_blocks(d, c)):
        total = sum(q[secrets.v[t]] for t in range(lo, hi))
        r_dec[j] = -secrets.block_rands[j] * scale * k * total
    for j in key.free_zero_slots + [key.last_zero]:
        r_dec[j] = -key.w[j] * scale * k
    for j, r in zip(key.pad_one_slots, secrets.pad_rands):
        r_dec[j] = -r * scale * k
    r_dec[key.last_one] = secrets.nom_q_for(key, q)
    return ubar + r_dec


def csp_score(ct: EncTuple, q: CspQuery, tally: MacTally | None = None) -> Fraction:
    """The cloud's comparison value: smaller means nearer."""
    return dot(ct.coords, q.values, tally)


def csp_knn(edb: Sequence[EncTuple], q: CspQuery, k: int,
            tally: MacTally | None = None) -> list[int]:
    """Indices of the k smallest scores, ties broken by ascending index."""
    if not 1 <= k <= len(edb):
        raise KTooLarge(f"k={k} with {len(edb)} tuples")
    scored = sorted((csp_score(ct, q, tally), ct.index) for ct in edb)
    return [idx for _, idx in scored[:k]]
