"""Shared fixtures and independent oracles used across the suite."""
from __future__ import annotations

import random
import warnings
from fractions import Fraction

import pytest

from sknn import paillier, proposed


def quiet_params(*args, **kwargs) -> proposed.SecurityParams:
    """SecurityParams without the c == d corner warning (used deliberately in tests)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return proposed.SecurityParams(*args, **kwargs)


def brute_force_knn(points, query, k):
    """Plaintext k-NN by squared Euclidean distance, ties by ascending index."""
    scored = sorted((sum((a - b) ** 2 for a, b in zip(p, query)), i)
                    for i, p in enumerate(points))
    return [i for _, i in scored[:k]]


def squared_distance(p, q):
    return sum((a - b) ** 2 for a, b in zip(p, q))


def distinct_distance_instance(rng, d, m, bound=100):
    """Random points and query whose squared distances to the query are all distinct."""
    while True:
        points = [[rng.randint(0, bound) for _ in range(d)] for _ in range(m)]
        query = [rng.randint(0, bound) for _ in range(d)]
        dists = [squared_distance(p, query) for p in points]
        if len(set(dists)) == len(dists):
            return points, query


def exact_rank(rows):
    """Rank of a rational matrix via exact Gaussian elimination."""
    a = [[Fraction(x) for x in row] for row in rows]
    rank = 0
    ncols = len(a[0]) if a else 0
    row = 0
    for col in range(ncols):
        piv = next((r for r in range(row, len(a)) if a[r][col] != 0), None)
        if piv is None:
            continue
        a[row], a[piv] = a[piv], a[row]
        for r in range(len(a)):
            if r != row and a[r][col] != 0:
                f = a[r][col] / a[row][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[row])]
        rank += 1
        row += 1
    return rank


@pytest.fixture(scope="session")
def pk_sk_256():
    """One 256-bit Paillier keypair shared by tests that only need a valid key."""
    return paillier.paillier_keygen(256, random.Random(0xC0FFEE))


@pytest.fixture(scope="session")
def pk_sk_128():
    return paillier.paillier_keygen(128, random.Random(0xBEEF))
