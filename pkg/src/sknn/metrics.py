"""Deterministic operation counters and the benchmark grid.

Wall-clock numbers are measured but never asserted anywhere; complexity is
validated through the exact multiply-accumulate and Paillier-operation counts,
which depend only on the dimensions:

    db-encrypt MACs = m * eta^2        knn MACs = m * eta
    query-blind exponentiations = eta^2, slot constructions = eta - d
"""
from __future__ import annotations

import random
import time
import warnings
from dataclasses import dataclass, field

from . import baseline, paillier, proposed
from .linalg import MacTally

PHASES = ("keygen", "db-encrypt", "query-blind", "knn")


@dataclass
class OpCounters:
    macs: dict[str, int] = field(default_factory=lambda: {p: 0 for p in PHASES})
    paillier_encs: int = 0
    paillier_exps: int = 0

    @property
    def paillier_ops(self) -> int:
        return self.paillier_encs + self.paillier_exps


@dataclass(frozen=True)
class RunSpec:
    """One measured configuration."""

    scheme: str  # "proposed" or "baseline"
    d: int
    m: int
    k: int = 1
    c: int = 5
    epsilon: int = 10
    coord_bound: int = 100
    bits: int = 128
    seed: int = 0


def count_ops(spec: RunSpec, wall: dict[str, int] | None = None) -> OpCounters:
    """Run keygen, database encryption, one blinded query and one k-NN, counting ops.

    `wall` (optional) collects per-phase wall time in nanoseconds.
    """
    rng = random.Random(spec.seed)
    counters = OpCounters()
    points = [[rng.randint(0, spec.coord_bound) for _ in range(spec.d)]
              for _ in range(spec.m)]
    query = [rng.randint(0, spec.coord_bound) for _ in range(spec.d)]

    def timed(phase, fn):
        start = time.perf_counter_ns()
        out = fn()
        if wall is not None:
            wall[phase] = time.perf_counter_ns() - start
        return out

    if spec.scheme == proposed.SCHEME_TAG:
        with warnings.catch_warnings():
            # grid sweeps hit the c == d corner on purpose
            warnings.simplefilter("ignore", UserWarning)
            params = proposed.SecurityParams(spec.d, spec.c, spec.epsilon)
        keygen_tally = MacTally()
        key = timed("keygen", lambda: proposed.keygen(params, spec.coord_bound, rng,
                                                      tally=keygen_tally))
        enc_tally = MacTally()
        edb = timed("db-encrypt", lambda: proposed.encrypt_database(key, points, rng,
                                                                    tally=enc_tally))
        pk, sk = paillier.paillier_keygen(spec.bits, rng)
        req = proposed.qu_build_request(query, pk, rng, spec.coord_bound)
        ops = proposed.OpCount()
        blinded = timed("query-blind", lambda: proposed.do_blind_query(key, req, rng,
                                                                       counts=ops))
        csp_query = proposed.qu_unwrap(sk, blinded)
        knn_tally = MacTally()
        timed("knn", lambda: proposed.csp_knn(edb, csp_query, spec.k, tally=knn_tally))
    elif spec.scheme == baseline.SCHEME_TAG:
        keygen_tally = MacTally()
        key = timed("keygen", lambda: baseline.baseline_keygen(
            spec.d, spec.c, spec.epsilon, rng, coord_bound=spec.coord_bound))
        keygen_tally.add(key.params.size * key.params.size)
        enc_tally = MacTally()
        edb = timed("db-encrypt", lambda: baseline.baseline_encrypt_database(
            key, points, rng, tally=enc_tally))
        pk, sk = paillier.paillier_keygen(spec.bits, rng)
        req = baseline.qu_build_request(query, pk, rng, spec.coord_bound)
        ops = proposed.OpCount()
        blinded = timed("query-blind", lambda: baseline.baseline_blind_query(
            key, req, rng, counts=ops))
        csp_query = baseline.qu_unwrap(sk, blinded)
        knn_tally = MacTally()
        timed("knn", lambda: baseline.baseline_knn(edb, csp_query, spec.k, tally=knn_tally))
    else:
        raise ValueError(f"unknown scheme {spec.scheme!r}")

    counters.macs["keygen"] = keygen_tally.count
    counters.macs["db-encrypt"] = enc_tally.count
    counters.macs["knn"] = knn_tally.count
    counters.paillier_encs = ops.paillier_encs
    counters.paillier_exps = ops.paillier_exps
    return counters


BENCH_HEADER = "phase,scheme,d,m,k,wall_ns,mac_count,paillier_ops"


def run_bench(dims: list[int], samples: list[int], repetitions: int,
              schemes: tuple[str, ...] = (proposed.SCHEME_TAG, baseline.SCHEME_TAG),
              k: int = 1, c: int = 5, epsilon_proposed: int = 10,
              epsilon_baseline: int = 5, bits: int = 128, seed: int = 0) -> list[dict]:
    """Measure the (dims x samples x schemes) grid; one row per phase per repetition.

    Default split parameters: c=5 with epsilon=5 for the baseline and
    epsilon=10 for the enhanced scheme.
    """
    rows: list[dict] = []
    for rep in range(repetitions):
        for scheme in schemes:
            epsilon = epsilon_proposed if scheme == proposed.SCHEME_TAG else epsilon_baseline
            for d in dims:
                for m in samples:
                    cpar = min(c, d) if min(c, d) > 1 else 2
                    if scheme == proposed.SCHEME_TAG and cpar > d:
                        continue
                    wall: dict[str, int] = {}
                    spec = RunSpec(scheme, d, m, k=min(k, m), c=cpar, epsilon=epsilon,
                                   bits=bits, seed=seed + rep)
                    counters = count_ops(spec, wall)
                    for phase in PHASES:
                        ops = counters.paillier_ops if phase == "query-blind" else 0
                        rows.append({"phase": phase, "scheme": scheme, "d": d, "m": m,
                                     "k": spec.k, "wall_ns": wall.get(phase, 0),
                                     "mac_count": counters.macs[phase],
                                     "paillier_ops": ops})
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    lines = [BENCH_HEADER]
    for r in rows:
        lines.append(f"{r['phase']},{r['scheme']},{r['d']},{r['m']},{r['k']},"
                     f"{r['wall_ns']},{r['mac_count']},{r['paillier_ops']}")
    return "\n".join(lines) + "\n"
