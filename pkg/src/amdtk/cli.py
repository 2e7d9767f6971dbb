"""Command line front end: order matrices, verify runs, report statistics.

Exit codes: 0 success, 2 usage error (click), 3 input parse failure,
4 pool exhausted after retries, 5 verification failure. Every flag can be
set through the environment with the AMDTK_ prefix, e.g.
AMDTK_ORDER_MODE=parallel for `amdtk order --mode`.
"""

import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .core import sequential_amd
from .generators import generate_from_spec, write_matrix_market
from .matrixio import (
    MatrixFormatError,
    apply_permutation,
    parse_matrix_market,
    random_permutation,
    symmetrize_pattern,
)
from .oracle import minimum_degree_order
from .parallel import ParallelConfig, parallel_amd
from .quotient import PoolExhaustedError
from .report import build_stats, write_stats
from .results import OrderingResult, TraceStep
from .verify import verify_result

EXIT_PARSE = 3
EXIT_POOL = 4
EXIT_VERIFY = 5

# doublings from the default 1.5 are cheap; from a tiny starting value this
# bound still allows reaching ~1000x the requested elbow room
MAX_POOL_ATTEMPTS = 10


@click.group(context_settings={"auto_envvar_prefix": "AMDTK",
                               "help_option_names": ["-h", "--help"]})
@click.version_option(__version__)
def main():
    """Fill-reducing ordering toolkit."""


def _load_pattern(input_path, gen_spec, seed, skip_symmetrize):
    """Returns (pattern, display name). Raises the caller's exit on failure."""
    if (input_path is None) == (gen_spec is None):
        raise click.UsageError("provide exactly one of INPUT or --gen")
    if gen_spec is not None:
        try:
            return generate_from_spec(gen_spec, seed=seed)
        except ValueError as exc:
            raise click.UsageError(str(exc))
    try:
        with open(input_path, "r") as fh:
            trip = parse_matrix_market(fh)
        pattern = symmetrize_pattern(trip, skip_symmetrize=skip_symmetrize)
    except (OSError, MatrixFormatError, ValueError) as exc:
        click.echo(f"error: cannot read {input_path}: {exc}", err=True)
        sys.exit(EXIT_PARSE)
    return pattern, str(input_path)


def _oracle_md_result(pattern, run_seed, want_trace):
    t0 = time.perf_counter()
    order, fill = minimum_degree_order(pattern)
    elapsed = time.perf_counter() - t0
    n = pattern.n
    trace = None
    if want_trace:
        trace = [TraceStep(pivots=order[i:i + 1], start=i, stop=i + 1)
                 for i in range(n)]
    return OrderingResult(
        order=order, mode="oracle-md", n=n, nnz_offdiag=pattern.nnz_offdiag,
        workers=1, elapsed=elapsed, fill_edges=fill, peak_pool=0,
        pool_capacity=0, step_pivots=np.ones(n, dtype=np.int64),
        step_originals=np.ones(n, dtype=np.int64),
        step_seconds=np.zeros(n), phase_seconds={"total": elapsed},
        merges=0, absorptions=0, config={"seed": run_seed}, trace=trace,
    )


def _run_once(pattern, mode, run_seed, augmentation, workers, mult, lim_total,
              aggressive, want_trace):
    """One ordering run with the pool-exhaustion retry loop."""
    aug = augmentation
    for attempt in range(MAX_POOL_ATTEMPTS):
        try:
            if mode == "sequential":
                return sequential_amd(
                    pattern, augmentation=aug,
                    aggressive_absorption=aggressive, collect_trace=want_trace)
            cfg = ParallelConfig(
                workers=workers, mult=mult, lim_total=lim_total,
                augmentation=aug, seed=run_seed,
                aggressive_absorption=aggressive)
            return parallel_amd(pattern, cfg, collect_trace=want_trace)
        except PoolExhaustedError as exc:
            aug *= 2
            click.echo(
                f"pool exhausted (needed {exc.needed} slots of {exc.capacity});"
                f" retrying with augmentation {aug:g}", err=True)
    click.echo(f"pool still exhausted after {MAX_POOL_ATTEMPTS} attempts",
               err=True)
    sys.exit(EXIT_POOL)


@main.command()
@click.argument("input_path", required=False,
                type=click.Path(path_type=Path, dir_okay=False))
@click.option("--gen", "gen_spec", default=None, metavar="SPEC",
              help="Generate the input instead of reading a file; "
                   "grid2d:<k>, grid3d:<k>, er:<n>,<p>, path:<n>, tree:<n>.")
@click.option("--mode", default="sequential", show_default=True,
              type=click.Choice(["sequential", "parallel", "oracle-md"]))
@click.option("--workers", default=0, show_default="all CPUs", type=int,
              help="Worker threads for parallel mode.")
@click.option("--mult", default=1.1, show_default=True, type=float,
              help="Degree window relaxation factor.")
@click.option("--lim-total", default=8192, show_default=True, type=int,
              help="Total candidate cap, split evenly across workers.")
@click.option("--augmentation", default=1.5, show_default=True, type=float,
              help="Spare pool space as a fraction of the input pattern.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--repeats", default=1, show_default=True, type=int,
              help="Run this many times; repeat r uses seed+r and its own "
                   "random input permutation.")
@click.option("--verify", is_flag=True,
              help="Replay each run against the elimination-graph oracle "
                   "(slow; intended for small inputs).")
@click.option("--skip-symmetrize", is_flag=True,
              help="Trust the input pattern to be structurally symmetric.")
@click.option("--stats", "stats_path", default=None,
              type=click.Path(path_type=Path, dir_okay=False),
              help="Write machine-readable statistics here.")
@click.option("--format", "fmt", default="json", show_default=True,
              type=click.Choice(["json", "csv"]))
@click.option("--perm-out", default=None,
              type=click.Path(path_type=Path, dir_okay=False),
              help="Write the ordering, one 0-based original index per line. "
                   "With repeats > 1 each file gets a .r<k> suffix.")
@click.option("--plots/--no-plots", default=True, show_default=True,
              help="Render companion figures next to the stats file.")
@click.option("--aggressive-absorption/--no-aggressive-absorption",
              default=True, show_default=True)
def order(input_path, gen_spec, mode, workers, mult, lim_total, augmentation,
          seed, repeats, verify, skip_symmetrize, stats_path, fmt, perm_out,
          plots, aggressive_absorption):
    """Compute a fill-reducing ordering of a Matrix Market pattern.

    Each repeat applies a fresh random permutation to the input (seeded with
    seed + repeat index) before ordering, so repeated timings and fill
    counts sample the input's relabeling sensitivity.
    """
    if repeats < 1:
        raise click.UsageError("--repeats must be at least 1")
    t0 = time.perf_counter()
    pattern, name = _load_pattern(input_path, gen_spec, seed, skip_symmetrize)
    preprocess_seconds = time.perf_counter() - t0

    results = []
    orig_orders = []
    for r in range(repeats):
        run_seed = seed + r
        perm = random_permutation(pattern.n, run_seed)
        permuted = apply_permutation(pattern, perm)
        if mode == "oracle-md":
            result = _oracle_md_result(permuted, run_seed, verify)
        else:
            result = _run_once(permuted, mode, run_seed, augmentation,
                               workers, mult, lim_total,
                               aggressive_absorption, verify)
        result.config.setdefault("seed", run_seed)
        if verify:
            verdict = verify_result(permuted, result)
            if not verdict.ok:
                for failure in verdict.failures:
                    click.echo(f"verification failed: {failure}", err=True)
                sys.exit(EXIT_VERIFY)
        orig_orders.append(perm.order[result.order])
        results.append(result)
        click.echo(
            f"repeat {r}: n={result.n} fill={result.fill_edges}"
            f" steps={result.steps} seconds={result.elapsed:.4f}"
            + (" verified" if verify else ""))

    if perm_out is not None:
        for r, oo in enumerate(orig_orders):
            path = perm_out if repeats == 1 else Path(f"{perm_out}.r{r}")
            path.write_text("".join(f"{v}\n" for v in oo))

    stats = build_stats(results, preprocess_seconds=preprocess_seconds,
                        input_name=name)
    if stats_path is not None:
        written = write_stats(stats, stats_path, fmt, plots=plots)
        click.echo("wrote " + ", ".join(str(w) for w in written))
    else:
        agg = stats["aggregate"]
        click.echo(
            f"mean fill {agg['fill_edges_mean']:.1f}"
            f" (sd {agg['fill_edges_sd']:.1f}),"
            f" mean order time {agg['order_seconds_mean']:.4f}s,"
            f" total {agg['total_seconds']:.4f}s"
            f" incl. {stats['preprocess_seconds']:.4f}s preprocess")


@main.command()
@click.argument("spec")
@click.option("-o", "--out", required=True,
              type=click.Path(path_type=Path, dir_okay=False),
              help="Output Matrix Market file.")
@click.option("--seed", default=0, show_default=True, type=int,
              help="Seed for the random generators.")
def gen(spec, out, seed):
    """Write a synthetic test matrix.

    SPEC is one of grid2d:<k>, grid3d:<k>, er:<n>,<p>, path:<n>, tree:<n>.
    """
    try:
        pattern, name = generate_from_spec(spec, seed=seed)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    write_matrix_market(pattern, out)
    click.echo(f"wrote {name}: n={pattern.n}"
               f" entries={pattern.nnz_offdiag // 2} to {out}")
