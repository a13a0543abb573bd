"""Key files, encrypted-database files, and dataset ingestion.

Key files are single JSON documents with exact decimal-string entries; the
encrypted database is JSON lines, one tuple per line.  Both carry a scheme
tag so baseline and enhanced artifacts cannot be mixed up silently.
"""
from __future__ import annotations

import json
import warnings
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import baseline, proposed
from .errors import DimensionMismatch, MalformedRow
from .linalg import Matrix, Permutation
from .serialize import rational_from_str, rational_to_str, vector_from_strs, vector_to_strs


def owner_key_to_json(key: proposed.OwnerKey) -> str:
    p = key.params
    doc = {
        "scheme": proposed.SCHEME_TAG,
        "params": {"d": p.d, "c": p.c, "epsilon": p.epsilon,
                   "matrix_scale": p.matrix_scale, "query_scale": p.query_scale,
                   "data_scale": p.data_scale, "alpha_form": p.alpha_form},
        "coord_bound": key.coord_bound,
        "matrix": [vector_to_strs(row) for row in key.matrix.rows],
        "shift": [str(x) for x in key.s],
        "dominance": [str(x) for x in key.sigma],
        "bits": "".join(str(b) for b in key.b),
        "weights": [str(x) for x in key.w],
        "perm": key.perm.indices,
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def baseline_key_to_json(key: baseline.BaselineKey) -> str:
    p = key.params
    doc = {
        "scheme": baseline.SCHEME_TAG,
        "params": {"d": p.d, "c": p.c, "epsilon": p.epsilon,
                   "integerized": p.integerized},
        "coord_bound": key.coord_bound,
        "matrix": [vector_to_strs(row) for row in key.matrix.rows],
        "shift": [str(x) for x in key.s],
        "tau": [str(x) for x in key.tau],
        "perm": key.perm.indices,
        "exponent_scale": key.exponent_scale,
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def key_from_json(text: str):
    doc = json.loads(text)
    scheme = doc["scheme"]
    matrix = Matrix([vector_from_strs(row) for row in doc["matrix"]])
    perm = Permutation(doc["perm"])
    if scheme == proposed.SCHEME_TAG:
        pdoc = doc["params"]
        with warnings.catch_warnings():
            # parameter-choice warnings fired when the key was first built
            warnings.simplefilter("ignore", UserWarning)
            params = proposed.SecurityParams(pdoc["d"], pdoc["c"], pdoc["epsilon"],
                                             pdoc["matrix_scale"], pdoc["query_scale"],
                                             pdoc["data_scale"], pdoc["alpha_form"])
        return proposed.build_owner_key(
            params, doc["coord_bound"], matrix,
            [int(x) for x in doc["shift"]],
            [int(x) for x in doc["dominance"]],
            [int(ch) for ch in doc["bits"]],
            [int(x) for x in doc["weights"]], perm)
    if scheme == baseline.SCHEME_TAG:
        pdoc = doc["params"]
        params = baseline.BaselineParams(pdoc["d"], pdoc["c"], pdoc["epsilon"],
                                         pdoc["integerized"])
        from .linalg import apply_perm_columns, mat_invert
        m_hat = apply_perm_columns(matrix, perm.inverse())
        return baseline.BaselineKey(params, doc["coord_bound"], matrix,
                                    tuple(int(x) for x in doc["shift"]),
                                    tuple(int(x) for x in doc["tau"]), perm,
                                    m_hat, mat_invert(m_hat), doc["exponent_scale"])
    raise ValueError(f"unknown scheme tag {scheme!r}")


def write_key(key, path: str | Path) -> None:
    if isinstance(key, proposed.OwnerKey):
        Path(path).write_text(owner_key_to_json(key))
    else:
        Path(path).write_text(baseline_key_to_json(key))


def read_key(path: str | Path):
    return key_from_json(Path(path).read_text())


def edb_to_jsonl(edb: Sequence[proposed.EncTuple], scheme: str) -> str:
    lines = [json.dumps({"index": ct.index, "scheme": scheme,
                         "coords": vector_to_strs(ct.coords)}, sort_keys=True)
             for ct in edb]
    return "\n".join(lines) + ("\n" if lines else "")


def edb_from_jsonl(text: str, expect_scheme: str | None = None) -> list[proposed.EncTuple]:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        if expect_scheme is not None and doc.get("scheme") != expect_scheme:
            raise ValueError(f"tuple tagged {doc.get('scheme')!r}, expected {expect_scheme!r}")
        out.append(proposed.EncTuple(doc["index"], tuple(vector_from_strs(doc["coords"]))))
    return out


def write_edb(edb: Sequence[proposed.EncTuple], scheme: str, path: str | Path) -> None:
    Path(path).write_text(edb_to_jsonl(edb, scheme))


def read_edb(path: str | Path, expect_scheme: str | None = None) -> list[proposed.EncTuple]:
    return edb_from_jsonl(Path(path).read_text(), expect_scheme)


def ingest_csv(path: str | Path, params) -> list[list[int]]:
    """Read d-column numeric rows and integerize them at the declared data scale.

    Values must be exactly representable at that scale; lossy rows are
    rejected rather than rounded because the k-NN correctness argument needs
    exact integers.
    """
    d = params.d
    scale = params.data_scale
    rows: list[list[int]] = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != d:
            raise DimensionMismatch(f"line {lineno}: expected {d} fields, got {len(fields)}")
        row = []
        for f in fields:
            try:
                value = rational_from_str(f) * scale
            except (ValueError, ZeroDivisionError) as exc:
                raise MalformedRow(f"line {lineno}: {f!r} is not numeric") from exc
            if value.denominator != 1:
                raise MalformedRow(f"line {lineno}: {f!r} not representable at scale {scale}")
            row.append(int(value))
        rows.append(row)
    return rows


def plaintexts_to_csv(points: Sequence[Sequence], scale: int = 1) -> str:
    lines = []
    for p in points:
        lines.append(",".join(rational_to_str(Fraction(x) / scale) for x in p))
    return "\n".join(lines) + ("\n" if lines else "")
