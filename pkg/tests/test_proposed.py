"""Enhanced scheme: keygen, tuple path, query protocol, scoring, pad algebra."""
import random
import warnings
from fractions import Fraction

import pytest

from conftest import brute_force_knn, distinct_distance_instance, squared_distance
from sknn import paillier, proposed, toy
from sknn.errors import CoordinateOutOfBound, InvalidParams, KTooLarge, NormalizerOverflow, QueryRefused
from sknn.linalg import dot, mat_vec_mul


@pytest.fixture(scope="module")
def toy_key():
    return toy.owner_key()


def small_key(rng, d=3, c=2, eps=3, bound=50, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        params = proposed.SecurityParams(d, c, eps, **kw)
    return proposed.keygen(params, bound, rng)


def reference_ubar(key, q, secrets):
    """Independent plaintext-side slots: the normalizer is solved from w . r_dec = 0."""
    d, c, eps = key.params.d, key.params.c, key.params.epsilon
    scale = key.params.query_scale
    k = secrets.r_block_scale
    size = d // c
    blocks = [(j * size, (j + 1) * size if j < c - 1 else d) for j in range(c)]
    r_dec = [Fraction(0)] * (c + eps)
    for j, (lo, hi) in enumerate(blocks):
        total = sum(q[secrets.v[t]] for t in range(lo, hi))
        r_dec[j] = Fraction(-secrets.block_rands[j] * scale * k * total)
    for j in key.free_zero_slots + [key.last_zero]:
        r_dec[j] = Fraction(-key.w[j] * scale * k)
    for j, r in zip(key.pad_one_slots, secrets.pad_rands):
        r_dec[j] = Fraction(-r * scale * k)
    lone = key.last_one
    acc = sum(key.w[j] * r_dec[j] for j in range(c + eps) if j != lone)
    nom_q = -acc / key.w[lone]
    assert nom_q.denominator == 1, "normalizer slot must be integral after block scaling"
    r_dec[lone] = nom_q
    ubar = [Fraction(secrets.beta2 * scale * q[i]) for i in range(d)]
    ubar += [Fraction(secrets.beta2 * scale), Fraction(secrets.beta1 * scale)]
    return ubar + r_dec


def recovered_ubar(key, csp_query):
    """Invert the public transform on an unwrapped query to expose the plaintext slots."""
    raw = mat_vec_mul(key.m_hat_inv, [Fraction(v) for v in csp_query.values])
    return [x / key.params.matrix_scale for x in raw]


def full_query(key, q, rng, bits=128, secrets=None, query_bound=None):
    pk, sk = paillier.paillier_keygen(bits, rng)
    req = proposed.qu_build_request(q, pk, rng, query_bound or key.coord_bound)
    blinded = proposed.do_blind_query(key, req, rng, secrets=secrets,
                                      query_bound=query_bound)
    return proposed.qu_unwrap(sk, blinded)


class TestKeygen:
    def test_worked_example_dimensions(self):
        assert toy.PARAMS.eta == 10

    def test_worked_example_injection_accepted(self, toy_key):
        assert toy_key.m_hat_inv.nrows == 10
        assert toy_key.last_one == 4
        assert toy_key.last_zero == 5

    def test_all_ones_pad_segment_rejected(self, toy_key):
        with pytest.raises(InvalidParams):
            proposed.build_owner_key(toy.PARAMS, toy.COORD_BOUND, toy_key.matrix,
                                     toy.SHIFT, toy.DOMINANCE, (1, 1, 1, 1, 1, 1),
                                     toy.WEIGHTS, toy_key.perm)

    def test_c_constraints(self):
        with pytest.raises(InvalidParams):
            proposed.SecurityParams(d=4, c=1, epsilon=2)
        with pytest.raises(InvalidParams):
            proposed.SecurityParams(d=4, c=5, epsilon=2)
        with pytest.warns(UserWarning):
            proposed.SecurityParams(d=4, c=4, epsilon=2)

    def test_sampled_key_invariants(self):
        rng = random.Random(21)
        key = small_key(rng, d=5, c=3, eps=4, bound=30)
        assert all(x > 30 for x in key.sigma)
        assert all(bit == 1 for bit in key.b[:3])
        assert 0 in key.b[3:] and 1 in key.b[3:]
        assert sorted(key.perm.indices) == list(range(key.params.eta))


class TestTupleSecrets:
    def test_worked_example_tau(self, toy_key):
        secrets = toy.tuple_secrets(toy_key, 0)
        assert secrets.tau == toy.EXPECTED_TAU
        assert secrets.nom_p == toy.EXPECTED_NOM_P
        assert secrets.alpha == 50

    def test_second_tuple_alpha(self, toy_key):
        assert toy.tuple_secrets(toy_key, 1).alpha == 100

    def test_weighted_sum_is_zero_by_construction(self):
        rng = random.Random(22)
        key = small_key(rng, d=4, c=2, eps=4)
        for _ in range(50):
            secrets = proposed.gen_tau(key, rng)
            assert dot(key.w, secrets.tau) == 0

    def test_fresh_draws_differ_in_free_slots(self):
        rng = random.Random(23)
        key = small_key(rng, d=4, c=2, eps=4)
        draws = {proposed.gen_tau(key, rng).free_rands for _ in range(100)}
        assert len(draws) > 1


class TestTupleEncryption:
    def test_worked_example_intermediate_and_ciphertexts(self, toy_key):
        rng = random.Random(0)
        for i, point in enumerate(toy.DATABASE):
            secrets = toy.tuple_secrets(toy_key, i)
            ct = proposed.encrypt_tuple(toy_key, point, rng, secrets=secrets, index=i)
            p_hat = mat_vec_mul(toy_key.m_hat, list(ct.coords))
            # recompute the pre-transform tuple from the ciphertext
            recovered = [dot(ct.coords, toy_key.m_hat.column(j)) for j in range(10)]
            assert tuple(recovered) == toy.EXPECTED_P_HAT[i]
            assert max(abs(a - b) for a, b in zip(ct.coords, toy.EXPECTED_P_PRIME[i])) \
                <= toy.P_PRIME_TOL

    def test_probabilistic_ciphertexts(self):
        rng = random.Random(24)
        key = small_key(rng)
        seen = {proposed.encrypt_tuple(key, [1, 2, 3], rng).coords for _ in range(50)}
        assert len(seen) == 50

    def test_out_of_bound_coordinate(self):
        rng = random.Random(25)
        key = small_key(rng, bound=10)
        with pytest.raises(CoordinateOutOfBound):
            proposed.encrypt_tuple(key, [1, 2, 11], rng)
        with pytest.raises(CoordinateOutOfBound):
            proposed.encrypt_tuple(key, [1, 2], rng)

    def test_roundtrip_reference_point(self, toy_key):
        rng = random.Random(26)
        ct = proposed.encrypt_tuple(toy_key, (6, 7), rng)
        assert proposed.decrypt_tuple(toy_key, ct) == [6, 7]

    def test_roundtrip_zero_vector(self):
        rng = random.Random(27)
        key = small_key(rng)
        assert proposed.decrypt_tuple(key, proposed.encrypt_tuple(key, [0, 0, 0], rng)) == [0, 0, 0]

    def test_roundtrip_200_random_points(self):
        rng = random.Random(28)
        key = small_key(rng, d=4, c=2, eps=3, bound=100)
        for _ in range(200):
            p = [rng.randint(0, 100) for _ in range(4)]
            assert proposed.decrypt_tuple(key, proposed.encrypt_tuple(key, p, rng)) == p


class TestQueryRequest:
    def test_request_decrypts_to_query(self, pk_sk_128):
        pk, sk = pk_sk_128
        rng = random.Random(29)
        req = proposed.qu_build_request((3, 9), pk, rng, 10)
        assert [paillier.decrypt(sk, c) for c in req.ciphertexts] == [3, 9]

    def test_requests_are_probabilistic(self, pk_sk_128):
        pk, _ = pk_sk_128
        rng = random.Random(30)
        r1 = proposed.qu_build_request((3, 9), pk, rng, 10)
        r2 = proposed.qu_build_request((3, 9), pk, rng, 10)
        assert all(a.value != b.value for a, b in zip(r1.ciphertexts, r2.ciphertexts))

    def test_bound_enforced(self, pk_sk_128):
        pk, _ = pk_sk_128
        with pytest.raises(CoordinateOutOfBound):
            proposed.qu_build_request((3, 11), pk, random.Random(0), 10)


class TestBlindQuery:
    def test_worked_example_golden_values(self, toy_key):
        rng = random.Random(31)
        pk, sk = paillier.paillier_keygen(256, rng)
        req = proposed.qu_build_request(toy.QUERY, pk, rng, toy.QUERY_BOUND)
        secrets = toy.query_secrets(toy_key)
        blinded = proposed.do_blind_query(toy_key, req, rng, secrets=secrets,
                                          query_bound=toy.QUERY_BOUND)
        assert secrets.nom_q_for(toy_key, toy.QUERY) == toy.EXPECTED_NOM_Q
        csp_query = proposed.qu_unwrap(sk, blinded)
        assert csp_query.values == toy.EXPECTED_Q_PRIME

    def test_policy_refusal(self, toy_key, pk_sk_128):
        pk, _ = pk_sk_128
        rng = random.Random(32)
        req = proposed.qu_build_request(toy.QUERY, pk, rng, toy.QUERY_BOUND)
        with pytest.raises(QueryRefused):
            proposed.do_blind_query(toy_key, req, rng, policy=lambda r: False)

    def test_pad_block_cancels_after_decryption(self):
        # w . r_dec = 0, observed through the actual Paillier decrypt path
        rng = random.Random(33)
        for trial in range(5):
            key = small_key(rng, d=rng.randint(2, 5), c=2, eps=rng.randint(2, 4))
            q = [rng.randint(0, key.coord_bound) for _ in range(key.params.d)]
            csp_query = full_query(key, q, rng)
            ubar = recovered_ubar(key, csp_query)
            r_dec = ubar[key.params.d + 2:]
            assert dot(key.w, r_dec) == 0

    def test_unwrap_matches_plaintext_oracle(self):
        rng = random.Random(34)
        for trial in range(5):
            key = small_key(rng, d=rng.randint(2, 6), c=rng.randint(2, 2), eps=3)
            q = [rng.randint(0, key.coord_bound) for _ in range(key.params.d)]
            pk, sk = paillier.paillier_keygen(128, rng)
            req = proposed.qu_build_request(q, pk, rng, key.coord_bound)
            secrets = proposed.gen_query_secrets(key, rng)
            blinded = proposed.do_blind_query(key, req, rng, secrets=secrets)
            got = proposed.qu_unwrap(sk, blinded)
            ubar = reference_ubar(key, q, secrets)
            expected = [int(sum(Fraction(m) * u for m, u in zip(row, ubar)))
                        for row in key.scaled_m_hat]
            assert list(got.values) == expected

    def test_unwrap_of_zero_ciphertexts(self, pk_sk_128):
        pk, sk = pk_sk_128
        rng = random.Random(35)
        zeros = proposed.BlindedQuery(tuple(paillier.encrypt(pk, 0, rng) for _ in range(6)))
        assert proposed.qu_unwrap(sk, zeros).values == (0,) * 6

    def test_normalizer_overflow_guard(self):
        rng = random.Random(36)
        key = small_key(rng, bound=1 << 22)
        pk, sk = paillier.paillier_keygen(64, rng)
        req = proposed.qu_build_request([1, 1, 1], pk, rng, key.coord_bound)
        with pytest.raises(NormalizerOverflow):
            proposed.do_blind_query(key, req, rng)


class TestScoringAndKnn:
    def test_worked_example_scores_and_winner(self):
        out = toy.run_pipeline(bits=256, seed=2)
        for got, want in zip(out["scores"], toy.EXPECTED_SCORES):
            assert abs(got - want) <= toy.SCORE_TOL
        assert out["scores_exact"] == list(toy.EXPECTED_SCORES_EXACT)
        assert out["winner"] == [toy.EXPECTED_WINNER]

    def test_zero_query_scores_zero(self, toy_key):
        rng = random.Random(37)
        ct = proposed.encrypt_tuple(toy_key, (6, 7), rng)
        assert proposed.csp_score(ct, proposed.CspQuery((0,) * 10)) == 0

    def test_score_sign_tracks_distance_sign(self):
        rng = random.Random(38)
        key = small_key(rng, d=3, c=2, eps=2, bound=60)
        points, q = distinct_distance_instance(rng, 3, 8, bound=60)
        edb = proposed.encrypt_database(key, points, rng)
        csp_query = full_query(key, q, rng)
        for i in range(len(points)):
            for j in range(i + 1, len(points)):
                score_gap = proposed.csp_score(edb[i], csp_query) - proposed.csp_score(edb[j], csp_query)
                dist_gap = squared_distance(points[i], q) - squared_distance(points[j], q)
                assert (score_gap > 0) == (dist_gap > 0)

    def test_knn_matches_brute_force(self):
        rng = random.Random(39)
        for _ in range(10):
            d = rng.randint(2, 5)
            key = small_key(rng, d=d, c=2, eps=2)
            points, q = distinct_distance_instance(rng, d, rng.randint(3, 12), bound=50)
            edb = proposed.encrypt_database(key, points, rng)
            csp_query = full_query(key, q, rng)
            k = rng.randint(1, len(points))
            assert proposed.csp_knn(edb, csp_query, k) == brute_force_knn(points, q, k)

    def test_k_bounds(self, toy_key):
        rng = random.Random(40)
        edb = proposed.encrypt_database(toy_key, toy.DATABASE, rng)
        q = proposed.CspQuery((1,) * 10)
        assert proposed.csp_knn(edb, q, 2) is not None
        with pytest.raises(KTooLarge):
            proposed.csp_knn(edb, q, 3)
        with pytest.raises(KTooLarge):
            proposed.csp_knn(edb, q, 0)


class TestPadAlgebra:
    def test_cross_tuple_pad_product_constant(self):
        # (tau_i - tau_j) . r_dec = 0, and tau . r_dec = k * scale * ||w||^2
        rng = random.Random(41)
        for _ in range(5):
            key = small_key(rng, d=4, c=2, eps=3)
            taus = [proposed.gen_tau(key, rng) for _ in range(4)]
            q = [rng.randint(0, key.coord_bound) for _ in range(4)]
            secrets = proposed.gen_query_secrets(key, rng)
            csp_query = full_query(key, q, rng, secrets=secrets)
            r_dec = recovered_ubar(key, csp_query)[key.params.d + 2:]
            w_norm_sq = sum(x * x for x in key.w)
            expected = secrets.r_block_scale * key.params.query_scale * w_norm_sq
            for ts in taus:
                assert dot(ts.tau, r_dec) == expected
            for a in taus:
                for b in taus:
                    diff = [x - y for x, y in zip(a.tau, b.tau)]
                    assert dot(diff, r_dec) == 0

    def test_unit_scaling_gives_w_norm_squared(self):
        # query_scale 1 and a unit last-1 weight force the block scale to 1
        rng = random.Random(42)
        params = proposed.SecurityParams(d=3, c=2, epsilon=3, query_scale=1)
        key = proposed.keygen(params, 40, rng)
        w = list(key.w)
        w[key.last_one] = 1
        key = proposed.build_owner_key(params, 40, key.matrix, key.s, key.sigma,
                                       key.b, w, key.perm)
        secrets = proposed.gen_query_secrets(key, rng)
        assert secrets.r_block_scale == 1
        q = [rng.randint(0, 40) for _ in range(3)]
        csp_query = full_query(key, q, rng, secrets=secrets)
        r_dec = recovered_ubar(key, csp_query)[key.params.d + 2:]
        tau = proposed.gen_tau(key, rng).tau
        assert dot(tau, r_dec) == sum(x * x for x in key.w)

    def test_knn_invariant_under_scale_changes(self):
        rng = random.Random(43)
        base = small_key(rng, d=3, c=2, eps=2, bound=60)
        points, q = distinct_distance_instance(rng, 3, 6, bound=60)
        results = []
        for ms, qs in ((10, 100), (40, 7), (10, 1)):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                params = proposed.SecurityParams(3, 2, 2, matrix_scale=ms, query_scale=qs)
            key = proposed.build_owner_key(params, 60, base.matrix, base.s, base.sigma,
                                           base.b, base.w, base.perm)
            sub_rng = random.Random(44)
            edb = proposed.encrypt_database(key, points, sub_rng)
            csp_query = full_query(key, q, sub_rng)
            results.append(proposed.csp_knn(edb, csp_query, 3))
        assert results[0] == results[1] == results[2] == brute_force_knn(points, q, 3)


class TestAlphaForms:
    def test_scalar_max_form(self):
        rng = random.Random(45)
        params = proposed.SecurityParams(d=3, c=2, epsilon=2, alpha_form="scalar-max")
        key = proposed.keygen(params, 20, rng)
        secrets = proposed.gen_tau(key, rng)
        assert len(secrets.t) == 1
        assert secrets.alpha == (max(key.sigma) - secrets.t[0]) ** 2
        p = [1, 2, 3]
        assert proposed.decrypt_tuple(key, proposed.encrypt_tuple(key, p, rng)) == p
