"""Benchmark trend figures rendered next to the CSV output."""
from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_PHASES = ("db-encrypt", "query-blind", "knn")
_STYLES = {"proposed": "o-", "baseline": "s--"}


def _aggregate(rows: list[dict], x_field: str, phase: str, fixed: dict) -> dict[str, dict[int, float]]:
    acc: dict[str, dict[int, list[int]]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        if r["phase"] != phase:
            continue
        if any(r[k] != v for k, v in fixed.items()):
            continue
        acc[r["scheme"]][r[x_field]].append(r["wall_ns"])
    return {scheme: {x: sum(v) / len(v) / 1e6 for x, v in series.items()}
            for scheme, series in acc.items()}


def render_bench_figures(rows: list[dict], outdir: str | Path) -> list[Path]:
    """One figure per phase and sweep axis: mean wall time (ms), plus a MAC-count plot."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if not rows:
        return written
    dims = sorted({r["d"] for r in rows})
    ms = sorted({r["m"] for r in rows})
    sweeps = [("d", {"m": max(ms)}, f"m={max(ms)}"),
              ("m", {"d": max(dims)}, f"d={max(dims)}")]
    for x_field, fixed, note in sweeps:
        fig, axes = plt.subplots(1, len(_PHASES), figsize=(4 * len(_PHASES), 3.2))
        for ax, phase in zip(axes, _PHASES):
            series = _aggregate(rows, x_field, phase, fixed)
            for scheme, points in sorted(series.items()):
                xs = sorted(points)
                ax.plot(xs, [points[x] for x in xs], _STYLES.get(scheme, "x-"),
                        label=scheme)
            ax.set_xlabel(x_field)
            ax.set_ylabel("mean wall time (ms)")
            ax.set_title(f"{phase} ({note})")
            ax.legend()
        fig.tight_layout()
        path = outdir / f"bench_time_vs_{x_field}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    fig, ax = plt.subplots(figsize=(5, 3.2))
    macs: dict[str, dict[int, int]] = defaultdict(dict)
    for r in rows:
        if r["phase"] == "db-encrypt" and r["d"] == max(dims):
            macs[r["scheme"]][r["m"]] = r["mac_count"]
    for scheme, points in sorted(macs.items()):
        xs = sorted(points)
        ax.plot(xs, [points[x] for x in xs], _STYLES.get(scheme, "x-"), label=scheme)
    ax.set_xlabel("m")
    ax.set_ylabel("db-encrypt MACs")
    ax.set_title(f"multiply-accumulates (d={max(dims)})")
    ax.legend()
    fig.tight_layout()
    path = outdir / "bench_macs_vs_m.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written
