"""Built-in worked example with fixed randomness, used by the demo and golden tests.

A 2-dimensional, two-tuple database with c=2, epsilon=4 (so eta=10), every
random draw pinned, and the expected intermediate values frozen.  Ciphertexts
in the reference tables were stored at 6 decimal places, so the score check
quantizes tuples to that precision; the exact-rational scores are also listed.
"""
from __future__ import annotations

import random
import warnings
from fractions import Fraction

from . import proposed
from .linalg import Matrix, Permutation

with warnings.catch_warnings():
    # the worked example deliberately uses the c == d corner
    warnings.simplefilter("ignore")
    PARAMS = proposed.SecurityParams(d=2, c=2, epsilon=4, matrix_scale=10,
                                     query_scale=100, data_scale=1)
COORD_BOUND = 7
QUERY_BOUND = 10

MATRIX_ROWS = [
    ["8.5", "3.2", "4.3", "1.8", "2.1", "3.5", "5.9", "8.6", "7.2", "1.3"],
    ["1.6", "4.7", "3.1", "2.9", "6.3", "9.1", "3.8", "4.1", "2.3", "2.9"],
    ["2.1", "7.2", "8.5", "1.9", "2.5", "8.9", "9.1", "5.1", "7.1", "9.8"],
    ["2.3", "4.9", "1.1", "5.6", "4.2", "1.8", "2.6", "5.5", "2.7", "7.3"],
    ["5.1", "3.4", "7.2", "3.7", "8.3", "1.5", "6.9", "7.5", "9.2", "6.6"],
    ["9.5", "3.5", "1.1", "8.3", "6.3", "1.8", "2.9", "6.1", "5.6", "7.8"],
    ["7.9", "9.4", "7.8", "5.6", "3.2", "4.8", "2.3", "3.8", "3.2", "9.4"],
    ["5.7", "6.4", "6.9", "2.8", "7.9", "9.6", "4.6", "5.1", "1.4", "8.3"],
    ["1.8", "5.8", "1.4", "4.1", "3.8", "4.7", "7.1", "4.4", "3.8", "5.9"],
    ["8.4", "3.4", "7.3", "2.9", "5.5", "6.7", "6.1", "6.7", "7.2", "3.3"],
]
SHIFT = (15, 63, 17)
DOMINANCE = (8, 11)
BITS = (1, 1, 1, 0, 1, 0)
WEIGHTS = (19, 23, 11, 18, 25, 40)
PERM = (5, 2, 7, 1, 8, 4, 3, 6, 0, 9)

DATABASE = [(6, 7), (4, 5)]
QUERY = (3, 9)
K = 1

# pinned random draws
TUPLE_FREE_RANDS = [(3,), (3,)]
TUPLE_T = [(7, 4), (2, 3)]
BETA1 = 4
BETA2 = 44
V = (0, 1)
BLOCK_RANDS = (21, 2)
PAD_RANDS = (6,)

# frozen expectations
EXPECTED_NOM_P = Fraction("-42.25")
EXPECTED_TAU = tuple(Fraction(x) for x in ("19", "23", "11", "3", "25", "-42.25"))
EXPECTED_ALPHAS = (50, 100)
EXPECTED_P_HAT = (
    tuple(Fraction(x) for x in ("3", "49", "102", "50", "19", "23", "11", "3", "25", "-42.25")),
    tuple(Fraction(x) for x in ("7", "53", "58", "100", "19", "23", "11", "3", "25", "-42.25")),
)
EXPECTED_P_PRIME = (
    tuple(Fraction(x) for x in ("-2.450", "4.596", "-20.674", "-4.666", "1.680",
                                "-14.833", "16.390", "-10.106", "30.685", "11.411")),
    tuple(Fraction(x) for x in ("-21.880", "-19.894", "-24.697", "15.103", "-9.657",
                                "-24.043", "4.931", "-7.558", "44.538", "54.709")),
)
P_PRIME_TOL = Fraction(1, 1000)
EXPECTED_NOM_Q = 14404
EXPECTED_UBAR = (13200, 39600, 4400, 400, -6300, -1800, -600, -1800, 14404, -4000)
EXPECTED_Q_PRIME = (1575584, 1782952, 1228800, 2905368, 3427432, 4446252,
                    2539928, 1537316, 2340052, 2188120)
# scores of the tuples as stored at 6-decimal precision; exact-rational values follow
STORAGE_DECIMALS = 6
EXPECTED_SCORES = (Fraction("28048002.560"), Fraction("28424001.890"))
SCORE_TOL = Fraction(1, 1000)
EXPECTED_SCORES_EXACT = (Fraction(28048000), Fraction(28424000))
EXPECTED_WINNER = 0


def owner_key() -> proposed.OwnerKey:
    return proposed.build_owner_key(PARAMS, COORD_BOUND, Matrix(MATRIX_ROWS),
                                    SHIFT, DOMINANCE, BITS, WEIGHTS, Permutation(PERM))


def tuple_secrets(key: proposed.OwnerKey, i: int) -> proposed.EphemeralTupleSecrets:
    return proposed.make_tuple_secrets(key, TUPLE_FREE_RANDS[i], TUPLE_T[i])


def query_secrets(key: proposed.OwnerKey) -> proposed.EphemeralQuerySecrets:
    return proposed.make_query_secrets(key, BETA1, BETA2, V, BLOCK_RANDS, PAD_RANDS)


def quantize(x: Fraction, decimals: int = STORAGE_DECIMALS) -> Fraction:
    q = 10 ** decimals
    return Fraction(round(x * q), q)


def quantized_tuple(ct: proposed.EncTuple) -> proposed.EncTuple:
    return proposed.EncTuple(ct.index, tuple(quantize(x) for x in ct.coords))


def run_pipeline(bits: int = 256, seed: int = 0) -> dict:
    """Full replay: key, both tuples, blinded query, scores, winner.

    Returns every intermediate needed by the demo printout and golden tests.
    """
    from . import paillier

    rng = random.Random(seed)
    key = owner_key()
    tsecrets = [tuple_secrets(key, i) for i in range(len(DATABASE))]
    edb = [proposed.encrypt_tuple(key, p, rng, secrets=ts, index=i)
           for i, (p, ts) in enumerate(zip(DATABASE, tsecrets))]

    pk, sk = paillier.paillier_keygen(bits, rng)
    req = proposed.qu_build_request(QUERY, pk, rng, QUERY_BOUND)
    qsecrets = query_secrets(key)
    blinded = proposed.do_blind_query(key, req, rng, secrets=qsecrets,
                                      query_bound=QUERY_BOUND)
    csp_q = proposed.qu_unwrap(sk, blinded)
    stored = [quantized_tuple(ct) for ct in edb]
    scores = [proposed.csp_score(ct, csp_q) for ct in stored]
    winner = proposed.csp_knn(stored, csp_q, K)
    return {
        "key": key,
        "tuple_secrets": tsecrets,
        "edb": edb,
        "stored": stored,
        "query_secrets": qsecrets,
        "request": req,
        "blinded": blinded,
        "csp_query": csp_q,
        "sk": sk,
        "nom_q": qsecrets.nom_q_for(key, QUERY),
        "ubar": proposed.expected_ubar(key, QUERY, qsecrets),
        "scores": scores,
        "scores_exact": [proposed.csp_score(ct, csp_q) for ct in edb],
        "winner": winner,
    }
