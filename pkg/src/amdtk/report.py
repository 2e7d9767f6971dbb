"""Benchmark statistics: build, serialize, and plot.

The stats dict is a versioned, JSON-native structure so downstream tooling
can rely on its shape. CSV output flattens the same data to one row per
repeat with aggregate columns duplicated on every row.
"""

import csv
import io
import json
from collections import Counter
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def build_stats(results, *, baseline=None, preprocess_seconds=0.0, input_name=""):
    """Collect one or more repeat runs of the same input into a stats dict.

    baseline, when given, is a fill-edge count (or a result carrying one)
    to report mean fill against. preprocess_seconds covers parse plus
    symmetrization and is reported both on its own and inside total_seconds.
    """
    if not results:
        raise ValueError("need at least one result")
    first = results[0]
    repeats = []
    for i, r in enumerate(results):
        repeats.append(
            {
                "repeat": i,
                "seed": r.config.get("seed"),
                "order_seconds": float(r.elapsed),
                "fill_edges": int(r.fill_edges),
                "steps": int(r.steps),
                "peak_pool": int(r.peak_pool),
                "pool_capacity": int(r.pool_capacity),
                "merges": int(r.merges),
                "absorptions": int(r.absorptions),
                "phase_seconds": {k: float(v) for k, v in r.phase_seconds.items()},
            }
        )
    order_secs = np.array([r["order_seconds"] for r in repeats])
    fills = np.array([r["fill_edges"] for r in repeats], dtype=np.float64)

    hist = Counter()
    for r in results:
        hist.update(int(s) for s in r.step_pivots)
    phase_names = sorted({k for r in repeats for k in r["phase_seconds"]})
    phase_mean = {
        k: float(np.mean([r["phase_seconds"].get(k, 0.0) for r in repeats]))
        for k in phase_names
    }

    aggregate = {
        "order_seconds_mean": float(order_secs.mean()),
        "order_seconds_sd": float(order_secs.std(ddof=1)) if len(repeats) > 1 else 0.0,
        "fill_edges_mean": float(fills.mean()),
        "fill_edges_sd": float(fills.std(ddof=1)) if len(repeats) > 1 else 0.0,
        "total_seconds": float(preprocess_seconds + order_secs.sum()),
        "phase_seconds_mean": phase_mean,
    }
    if baseline is not None:
        base_fill = getattr(baseline, "fill_edges", baseline)
        aggregate["baseline_fill_edges"] = int(base_fill)
        if base_fill > 0:
            aggregate["fill_ratio_vs_baseline"] = float(fills.mean() / base_fill)

    return _jsonable(
        {
            "schema_version": SCHEMA_VERSION,
            "input": input_name,
            "n": int(first.n),
            "nnz_offdiag": int(first.nnz_offdiag),
            "mode": first.mode,
            "workers": int(first.workers),
            "config": dict(first.config),
            "preprocess_seconds": float(preprocess_seconds),
            "repeats": repeats,
            "aggregate": aggregate,
            "step_histogram": sorted([s, c] for s, c in hist.items()),
        }
    )


def _csv_rows(stats):
    agg = stats["aggregate"]
    phases = sorted(agg.get("phase_seconds_mean", {}))
    head = [
        "schema_version", "input", "n", "nnz_offdiag", "mode", "workers",
        "preprocess_seconds", "repeat", "seed", "order_seconds", "fill_edges",
        "steps", "peak_pool", "pool_capacity", "merges", "absorptions",
    ]
    head += [f"phase_{p}_seconds" for p in phases]
    head += [
        "order_seconds_mean", "order_seconds_sd", "fill_edges_mean",
        "fill_edges_sd", "total_seconds", "baseline_fill_edges",
        "fill_ratio_vs_baseline", "step_histogram",
    ]
    hist_str = ";".join(f"{s}:{c}" for s, c in stats["step_histogram"])
    rows = [head]
    for r in stats["repeats"]:
        row = [
            stats["schema_version"], stats["input"], stats["n"],
            stats["nnz_offdiag"], stats["mode"], stats["workers"],
            stats["preprocess_seconds"], r["repeat"],
            "" if r["seed"] is None else r["seed"],
            r["order_seconds"], r["fill_edges"], r["steps"], r["peak_pool"],
            r["pool_capacity"], r["merges"], r["absorptions"],
        ]
        row += [r["phase_seconds"].get(p, 0.0) for p in phases]
        row += [
            agg["order_seconds_mean"], agg["order_seconds_sd"],
            agg["fill_edges_mean"], agg["fill_edges_sd"], agg["total_seconds"],
            agg.get("baseline_fill_edges", ""),
            agg.get("fill_ratio_vs_baseline", ""), hist_str,
        ]
        rows.append(row)
    return rows


def render_report(stats, fmt="json"):
    """Serialize a stats dict to text in the requested format."""
    if fmt == "json":
        return json.dumps(stats, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        csv.writer(buf).writerows(_csv_rows(stats))
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def _render_figures(stats, base: Path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    hist = stats["step_histogram"]
    fig, ax = plt.subplots(figsize=(6, 4))
    if hist:
        sizes = [h[0] for h in hist]
        counts = [h[1] for h in hist]
        ax.bar(sizes, counts, color="#4878b0", width=0.8)
    ax.axvline(stats["workers"], color="#c44e52", linestyle="--",
               label=f"workers = {stats['workers']}")
    ax.set_xlabel("pivots eliminated per step")
    ax.set_ylabel("steps")
    ax.set_title(f"{stats['input'] or stats['mode']}: step sizes")
    ax.legend()
    fig.tight_layout()
    steps_path = base.with_name(base.name + "_steps.png")
    fig.savefig(steps_path, dpi=110)
    plt.close(fig)
    written.append(steps_path)

    phase_mean = stats["aggregate"].get("phase_seconds_mean", {})
    fig, ax = plt.subplots(figsize=(6, 4))
    if phase_mean:
        names = sorted(phase_mean)
        vals = [phase_mean[k] for k in names]
        ax.bar(range(len(names)), vals, color="#55a868")
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylabel("seconds (mean over repeats)")
    ax.set_title(f"{stats['input'] or stats['mode']}: phase breakdown")
    fig.tight_layout()
    phases_path = base.with_name(base.name + "_phases.png")
    fig.savefig(phases_path, dpi=110)
    plt.close(fig)
    written.append(phases_path)
    return written


def write_stats(stats, path, fmt="json", *, plots=True):
    """Write the stats file, plus companion figures unless plots is False.

    Figures land next to the stats file as <stem>_steps.png and
    <stem>_phases.png. Returns the list of paths written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_report(stats, fmt))
    written = [path]
    if plots:
        written += _render_figures(stats, path.with_suffix(""))
    return written
