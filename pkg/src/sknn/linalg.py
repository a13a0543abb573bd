"""Exact rational linear algebra: matrices, permutations, inversion, inner products.

Everything here operates on `fractions.Fraction` so encryption, decryption and
k-NN score comparisons are bit-reproducible.  No floating point on any path.
"""
from __future__ import annotations

import math
import random
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DimensionMismatch, ResampleExhausted, Singular

Rational = Fraction

_SAMPLE_RETRIES = 64


class MacTally:
    """Deterministic multiply-accumulate counter attached to hot loops."""

    __slots__ = ("count",)

    def __init__(self) -> None:
        self.count = 0

    def add(self, n: int) -> None:
        self.count += n


class Permutation:
    """A bijection on {0, ..., n-1} stored as an index array."""

    def __init__(self, indices: Sequence[int]):
        idx = list(indices)
        if sorted(idx) != list(range(len(idx))):
            raise DimensionMismatch(f"not a permutation: {indices!r}")
        self.indices = idx

    def __len__(self) -> int:
        return len(self.indices)

    def __call__(self, j: int) -> int:
        return self.indices[j]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Permutation) and self.indices == other.indices

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.indices)
        for j, pj in enumerate(self.indices):
            inv[pj] = j
        return Permutation(inv)

    def apply(self, v: Sequence) -> list:
        """Gather: element j of the result is element pi(j) of v."""
        if len(v) != len(self.indices):
            raise DimensionMismatch("permutation length does not match vector")
        return [v[pj] for pj in self.indices]

    @staticmethod
    def random(n: int, rng: random.Random) -> "Permutation":
        idx = list(range(n))
        rng.shuffle(idx)
        return Permutation(idx)


class Matrix:
    """Row-major matrix of Fractions."""

    def __init__(self, rows: Iterable[Iterable]):
        self.rows = [[Fraction(x) for x in row] for row in rows]
        self.nrows = len(self.rows)
        self.ncols = len(self.rows[0]) if self.rows else 0
        if any(len(r) != self.ncols for r in self.rows):
            raise DimensionMismatch("ragged rows")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Matrix) and self.rows == other.rows

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def column(self, j: int) -> list[Fraction]:
        return [r[j] for r in self.rows]

    @staticmethod
    def identity(n: int) -> "Matrix":
        return Matrix([[Fraction(int(i == j)) for j in range(n)] for i in range(n)])


def mat_invert(m: Matrix) -> Matrix:
    """Exact inverse via fraction-free (Bareiss/Montante) elimination.

    The matrix is cleared to integers first so intermediate entries stay
    integral and bounded by minors; fractions only reappear in the final
    division by the pivot.
    """
    if m.nrows != m.ncols:
        raise DimensionMismatch("inverse of a non-square matrix")
    n = m.nrows
    scale = 1
    for row in m.rows:
        for x in row:
            scale = math.lcm(scale, x.denominator)
    # integer augmented system [scale*m | I]; ends as [diag(det) | det * (scale*m)^-1]
    a = [[int(x * scale) for x in row] + [int(i == j) for j in range(n)]
         for i, row in enumerate(m.rows)]
    prev = 1
    for k in range(n):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if swap is None:
                raise Singular("zero pivot column during elimination")
            a[k], a[swap] = a[swap], a[k]
        piv = a[k][k]
        for i in range(n):
            if i == k:
                continue
            row_i = a[i]
            row_k = a[k]
            f = row_i[k]
            for j in range(2 * n):
                row_i[j] = (row_i[j] * piv - f * row_k[j]) // prev
        prev = piv
    if a[n - 1][n - 1] == 0:
        raise Singular("determinant is zero")
    inv_rows = [[Fraction(a[i][n + j] * scale, a[i][i]) for j in range(n)]
                for i in range(n)]
    return Matrix(inv_rows)


def apply_perm_columns(m: Matrix, perm: Permutation) -> Matrix:
    """Column gather: column j of the result is column perm(j) of m."""
    if len(perm) != m.ncols:
        raise DimensionMismatch("permutation length does not match column count")
    return Matrix([[row[perm(j)] for j in range(m.ncols)] for row in m.rows])


def sample_invertible(eta: int, rng: random.Random,
                      entry_range: tuple[int, int, int] = (1, 99, 10)) -> Matrix:
    """Random invertible eta x eta matrix.

    Entries are k/den with k uniform in [lo, hi]; the default reproduces
    one-decimal entries in [0.1, 9.9].  Resamples on singularity.
    """
    lo, hi, den = entry_range
    for _ in range(_SAMPLE_RETRIES):
        m = Matrix([[Fraction(rng.randint(lo, hi), den) for _ in range(eta)]
                    for _ in range(eta)])
        try:
            mat_invert(m)
        except Singular:
            continue
        return m
    raise ResampleExhausted(f"no invertible {eta}x{eta} matrix in {_SAMPLE_RETRIES} draws")


def vec_mat_mul(v: Sequence, m: Matrix, tally: MacTally | None = None) -> list[Fraction]:
    """Row vector times matrix, exactly."""
    if len(v) != m.nrows:
        raise DimensionMismatch(f"vector length {len(v)} vs {m.nrows} rows")
    out = [Fraction(0)] * m.ncols
    for i, vi in enumerate(v):
        row = m.rows[i]
        for j in range(m.ncols):
            out[j] += vi * row[j]
    if tally is not None:
        tally.add(m.nrows * m.ncols)
    return out


def mat_vec_mul(m: Matrix, v: Sequence, tally: MacTally | None = None) -> list[Fraction]:
    """Matrix times column vector, exactly."""
    if len(v) != m.ncols:
        raise DimensionMismatch(f"vector length {len(v)} vs {m.ncols} columns")
    out = [sum((row[j] * v[j] for j in range(m.ncols)), Fraction(0)) for row in m.rows]
    if tally is not None:
        tally.add(m.nrows * m.ncols)
    return out


def dot(u: Sequence, v: Sequence, tally: MacTally | None = None) -> Fraction:
    if len(u) != len(v):
        raise DimensionMismatch(f"dot of lengths {len(u)} and {len(v)}")
    if tally is not None:
        tally.add(len(u))
    return sum((Fraction(a) * Fraction(b) for a, b in zip(u, v)), Fraction(0))
