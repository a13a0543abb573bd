"""Command-line entry point.

Exit codes: 0 success, 2 usage error, 3 domain error, 4 attack inconclusive.
Every subcommand is deterministic under --seed (default from SKNN_SEED).
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import attacks, baseline, metrics, paillier, proposed, protocol, storage, toy
from .errors import AmbiguousBeta, NoUniqueCandidate, SknnError
from .serialize import rational_to_str

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_INCONCLUSIVE = 4


def _default_seed() -> int:
    return int(os.environ.get("SKNN_SEED", "0"))


def _parse_coords(text: str) -> list[str]:
    return [f.strip() for f in text.split(",") if f.strip()]


def _scaled_point(fields: list[str], scale: int) -> list[int]:
    out = []
    for f in fields:
        v = Fraction(f) * scale
        if v.denominator != 1:
            raise SknnError(f"coordinate {f!r} not representable at scale {scale}")
        out.append(int(v))
    return out


def cmd_keygen(args) -> int:
    rng = random.Random(args.seed)
    if args.scheme == proposed.SCHEME_TAG:
        params = proposed.SecurityParams(args.dim, args.c, args.epsilon,
                                         matrix_scale=args.matrix_scale,
                                         query_scale=args.query_scale,
                                         data_scale=args.data_scale)
        key = proposed.keygen(params, args.bound, rng)
    else:
        key = baseline.baseline_keygen(args.dim, args.c, args.epsilon, rng,
                                       coord_bound=args.bound,
                                       integerized=not args.real_valued)
    storage.write_key(key, args.out)
    print(f"wrote {args.scheme} key ({args.dim}d) to {args.out}")
    return EXIT_OK


def cmd_encrypt_db(args) -> int:
    key = storage.read_key(args.key)
    rng = random.Random(args.seed)
    points = storage.ingest_csv(args.infile, key.params)
    if isinstance(key, proposed.OwnerKey):
        edb = proposed.encrypt_database(key, points, rng)
        tag = proposed.SCHEME_TAG
    else:
        edb = baseline.baseline_encrypt_database(key, points, rng)
        tag = baseline.SCHEME_TAG
    storage.write_edb(edb, tag, args.out)
    print(f"encrypted {len(edb)} tuples to {args.out}")
    return EXIT_OK


def cmd_decrypt_db(args) -> int:
    key = storage.read_key(args.key)
    tag = proposed.SCHEME_TAG if isinstance(key, proposed.OwnerKey) else baseline.SCHEME_TAG
    edb = storage.read_edb(args.infile, expect_scheme=tag)
    decrypt = (proposed.decrypt_tuple if isinstance(key, proposed.OwnerKey)
               else baseline.baseline_decrypt_tuple)
    scale = key.params.data_scale if isinstance(key, proposed.OwnerKey) else 1
    points = [decrypt(key, ct) for ct in edb]
    Path(args.out).write_text(storage.plaintexts_to_csv(points, scale))
    print(f"decrypted {len(points)} tuples to {args.out}")
    return EXIT_OK


def cmd_query(args) -> int:
    key = storage.read_key(args.key)
    if not isinstance(key, proposed.OwnerKey):
        raise SknnError("query sessions run against the enhanced scheme; use a proposed key")
    edb = storage.read_edb(args.edb, expect_scheme=proposed.SCHEME_TAG)
    rng = random.Random(args.seed)
    query = _scaled_point(_parse_coords(args.query), key.params.data_scale)
    # query coordinates may legitimately exceed the data bound
    bound = max([key.coord_bound] + [abs(x) for x in query])
    transcript = protocol.simulate_session(key, edb, query, args.k, rng,
                                           bits=args.bits, query_bound=bound)
    if args.transcript:
        Path(args.transcript).write_text(protocol.serialize_transcript(transcript))
    if transcript.result is None:
        print("refused", file=sys.stderr)
        return EXIT_DOMAIN
    print(" ".join(str(i) for i in transcript.result))
    return EXIT_OK


def _verdict_table(reports: list[attacks.AttackReport]) -> str:
    rows = [("attack", "verdict", "detail")]
    for rep in reports:
        verdict = {True: "MATCH", False: "NO-MATCH", None: "-"}[rep.verdict]
        detail = ", ".join(f"{k}={v}" for k, v in sorted(rep.stats.items())
                           if not isinstance(v, (list, dict)))
        rows.append((rep.attack, verdict, detail))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _gen_baseline_instance(args, rng):
    key = baseline.baseline_keygen(args.dim, args.c, args.epsilon, rng,
                                   coord_bound=args.bound)
    seen: set[tuple[int, ...]] = set()
    points: list[list[int]] = []
    while len(points) < args.tuples:
        p = tuple(rng.randint(0, args.bound) for _ in range(args.dim))
        if p not in seen:
            seen.add(p)
            points.append(list(p))
    edb = baseline.baseline_encrypt_database(key, points, rng)
    pk, sk = paillier.paillier_keygen(args.bits, rng)
    return key, points, edb, pk, sk


def cmd_attack(args) -> int:
    rng = random.Random(args.seed)
    reports: list[attacks.AttackReport] = []
    if args.kind == "resistance":
        params = proposed.SecurityParams(args.dim, args.c, args.epsilon)
        key = proposed.keygen(params, args.bound, rng)
        pk, sk = paillier.paillier_keygen(args.bits, rng)
        for case in ("zeroQuery", "unitQuery", "scaledUnitQuery"):
            reports.append(attacks.evaluate_resistance(key, pk, sk, rng, case=case,
                                                       trials=args.trials,
                                                       n_large=args.probe))
    else:
        key, points, edb, pk, sk = _gen_baseline_instance(args, rng)
        if args.kind == "level1":
            _, report = attacks.evaluate_level1(key, pk, sk, rng, n_large=args.probe)
            reports.append(report)
        elif args.kind == "level2":
            known = list(range(min(args.known, len(points))))
            reports.append(attacks.evaluate_level2(key, edb, points, known, pk, sk, rng,
                                                   n_large=args.probe))
        else:  # query-recovery
            query = [rng.randint(0, args.bound) for _ in range(args.dim)]
            reports.append(attacks.evaluate_query_recovery(key, edb, points, query,
                                                           pk, sk, rng))
    for rep in reports:
        print(rep.to_json())
    print(_verdict_table(reports))
    return EXIT_OK


def cmd_demo_toy(args) -> int:
    out = toy.run_pipeline(bits=args.bits, seed=args.seed)
    checks: list[tuple[str, str, str, bool]] = []

    def check(label, got, want, ok=None):
        checks.append((label, got, want, (got == want) if ok is None else ok))

    ts = out["tuple_secrets"]
    check("nom_p", rational_to_str(ts[0].nom_p), rational_to_str(toy.EXPECTED_NOM_P))
    check("tau", "(" + ", ".join(rational_to_str(x) for x in ts[0].tau) + ")",
          "(" + ", ".join(rational_to_str(x) for x in toy.EXPECTED_TAU) + ")")
    check("alphas", str(tuple(t.alpha for t in ts)), str(toy.EXPECTED_ALPHAS))
    for i, ct in enumerate(out["edb"]):
        err = max(abs(a - b) for a, b in zip(ct.coords, toy.EXPECTED_P_PRIME[i]))
        check(f"p'_{i} (within 1e-3)",
              "(" + ", ".join(f"{float(x):.3f}" for x in ct.coords) + ")",
              "(" + ", ".join(f"{float(x):.3f}" for x in toy.EXPECTED_P_PRIME[i]) + ")",
              ok=err <= toy.P_PRIME_TOL)
    check("nom_q", str(out["nom_q"]), str(toy.EXPECTED_NOM_Q))
    check("q'", str(out["csp_query"].values), str(toy.EXPECTED_Q_PRIME))
    for i, score in enumerate(out["scores"]):
        check(f"score_{i} (within 1e-3)", f"{float(score):.3f}",
              f"{float(toy.EXPECTED_SCORES[i]):.3f}",
              ok=abs(score - toy.EXPECTED_SCORES[i]) <= toy.SCORE_TOL)
    check("1-NN index", str(out["winner"]), str([toy.EXPECTED_WINNER]))

    failed = [c for c in checks if not c[3]]
    for label, got, want, ok in checks:
        mark = "ok " if ok else "FAIL"
        print(f"[{mark}] {label}: {got}")
        if not ok:
            print(f"       expected: {want}")
    print(f"{len(checks) - len(failed)}/{len(checks)} golden values reproduced")
    return EXIT_OK if not failed else 1


def cmd_bench(args) -> int:
    dims = [int(x) for x in _parse_coords(args.dims)] if args.dims else []
    samples = [int(x) for x in _parse_coords(args.samples)] if args.samples else []
    rows = metrics.run_bench(dims, samples, args.reps, bits=args.bits, seed=args.seed,
                             k=args.k)
    csv_text = metrics.rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(csv_text)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        print(csv_text, end="")
    if args.plots_dir:
        from .plots import render_bench_figures
        written = render_bench_figures(rows, args.plots_dir)
        for path in written:
            print(f"figure: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sknn",
                                     description="secure k-NN encryption toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_seed(p):
        p.add_argument("--seed", type=int, default=_default_seed())

    p = sub.add_parser("keygen", help="generate an owner key file")
    p.add_argument("--scheme", choices=[proposed.SCHEME_TAG, baseline.SCHEME_TAG],
                   default=proposed.SCHEME_TAG)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--c", type=int, default=2)
    p.add_argument("--epsilon", type=int, default=4)
    p.add_argument("--bound", type=int, default=100)
    p.add_argument("--matrix-scale", type=int, default=10)
    p.add_argument("--query-scale", type=int, default=100)
    p.add_argument("--data-scale", type=int, default=1000)
    p.add_argument("--real-valued", action="store_true",
                   help="baseline only: sample one-decimal entries instead of integers")
    p.add_argument("--out", required=True)
    add_seed(p)
    p.set_defaults(fn=cmd_keygen)

    p = sub.add_parser("encrypt-db", help="encrypt a CSV of points")
    p.add_argument("--key", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    add_seed(p)
    p.set_defaults(fn=cmd_encrypt_db)

    p = sub.add_parser("decrypt-db", help="decrypt an encrypted database back to CSV")
    p.add_argument("--key", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_decrypt_db)

    p = sub.add_parser("query", help="run one three-party k-NN session")
    p.add_argument("--key", required=True)
    p.add_argument("--edb", required=True)
    p.add_argument("--query", required=True, help="comma-separated coordinates")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--bits", type=int, default=256)
    p.add_argument("--transcript", help="write the session transcript (JSON lines)")
    add_seed(p)
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("attack", help="run a cryptanalysis demo on a generated instance")
    p.add_argument("kind", choices=["level1", "level2", "query-recovery", "resistance"])
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--c", type=int, default=2)
    p.add_argument("--epsilon", type=int, default=2)
    p.add_argument("--bound", type=int, default=100)
    p.add_argument("--tuples", type=int, default=10)
    p.add_argument("--known", type=int, default=2)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--probe", type=int, default=10 ** 9,
                   help="magnitude of the column-isolation probe query")
    p.add_argument("--bits", type=int, default=128)
    add_seed(p)
    p.set_defaults(fn=cmd_attack)

    p = sub.add_parser("demo-toy", help="replay the built-in worked example")
    p.add_argument("--bits", type=int, default=256)
    add_seed(p)
    p.set_defaults(fn=cmd_demo_toy)

    p = sub.add_parser("bench", help="measure the timing/op-count grid")
    p.add_argument("--dims", default="2,4,8", help="comma-separated dimensions")
    p.add_argument("--samples", default="10,50", help="comma-separated database sizes")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--bits", type=int, default=128)
    p.add_argument("--out", help="CSV output path (stdout when omitted)")
    p.add_argument("--plots-dir", help="render trend figures into this directory")
    add_seed(p)
    p.set_defaults(fn=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (NoUniqueCandidate, AmbiguousBeta) as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except SknnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
