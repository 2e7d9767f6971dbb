"""Independent replay checks for ordering runs.

Everything here works on the brute-force elimination graph, so a passing
verdict does not depend on any of the quotient-graph machinery being
correct. Slow by design; meant for tests and the CLI --verify path.
"""

from dataclasses import dataclass, field

import numpy as np

from .matrixio import Permutation, SparsePattern
from .oracle import EliminationGraph, find_distance2_violation


@dataclass
class VerifyVerdict:
    ok: bool
    failures: list = field(default_factory=list)
    checked_steps: int = 0
    fill_edges: int = -1

    def __bool__(self):
        return self.ok


def verify_trace(pattern: SparsePattern, trace, order, *, expected_fill=None):
    """Replay a stepwise trace against the elimination-graph oracle.

    trace is a sequence of steps with .pivots and the half-open [start, stop)
    slice of ``order`` emitted by that step. Checks, in this order: order is
    a permutation, slices tile the order contiguously, every pivot is live
    and emitted by its own step, the pivot set of every step is distance-2
    independent at the state the step saw, and (when given) the fill of the
    replayed order matches expected_fill. Failure strings name the step and
    the vertices involved.
    """
    order = np.asarray(order, dtype=np.int64)
    failures = []
    try:
        Permutation(order.copy())
    except ValueError as exc:
        failures.append(f"order is not a permutation: {exc}")
        return VerifyVerdict(False, failures)
    if len(order) != pattern.n:
        failures.append(f"order has {len(order)} entries for {pattern.n} vertices")
        return VerifyVerdict(False, failures)

    g = EliminationGraph.from_pattern(pattern)
    fill = 0
    pos = 0
    checked = 0
    for i, step in enumerate(trace):
        start, stop = int(step.start), int(step.stop)
        if start != pos or stop <= start or stop > pattern.n:
            failures.append(
                f"step {i}: emitted range [{start},{stop}) does not continue from {pos}"
            )
            break
        emitted = order[start:stop]
        emitted_set = set(int(v) for v in emitted)
        bad = False
        pivots = [int(p) for p in step.pivots]
        for p in pivots:
            if p not in g.live:
                failures.append(f"step {i}: pivot {p} not live")
                bad = True
            elif p not in emitted_set:
                failures.append(f"step {i}: pivot {p} missing from its emitted slice")
                bad = True
        if bad:
            break
        witness = find_distance2_violation(g, pivots)
        if witness is not None:
            u, v, w = witness
            if w is None:
                failures.append(f"step {i}: pivots {u} and {v} are adjacent")
            else:
                failures.append(f"step {i}: pivots {u} and {v} share neighbor {w}")
        for v in emitted:
            v = int(v)
            if v not in g.live:
                failures.append(f"step {i}: emitted vertex {v} not live")
                bad = True
                break
            fill += g.eliminate(v)
        if bad:
            break
        pos = stop
        checked += 1
    else:
        if pos != pattern.n:
            failures.append(f"trace stops at {pos} of {pattern.n} vertices")
        elif expected_fill is not None and fill != int(expected_fill):
            failures.append(
                f"fill mismatch: replay produced {fill}, run reported {int(expected_fill)}"
            )
    return VerifyVerdict(not failures, failures, checked, fill)


def verify_result(pattern: SparsePattern, result):
    """Verify an OrderingResult that was produced with collect_trace=True."""
    if result.trace is None:
        raise ValueError("result carries no trace; rerun with collect_trace=True")
    return verify_trace(
        pattern, result.trace, result.order, expected_fill=result.fill_edges
    )
