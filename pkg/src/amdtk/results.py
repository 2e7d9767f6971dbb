"""Result containers shared by the ordering drivers and the report path."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matrixio import Permutation


@dataclass(frozen=True)
class TraceStep:
    """One elimination step: representative pivots plus the half-open slice
    [start, stop) of the output order they produced (members included)."""

    pivots: np.ndarray
    start: int
    stop: int


@dataclass(frozen=True)
class StepInfo:
    """Argument to on_step callbacks, delivered after the step completed.

    ``graph`` is the live quotient graph, valid only for the duration of the
    callback; instrumented tests snapshot what they need from it.
    """

    step: int
    pivots: np.ndarray    # representative ids, ascending
    emitted: np.ndarray   # original vertices output this step, in order
    k_before: int
    k_after: int
    graph: object | None = None


@dataclass
class OrderingResult:
    """Everything one ordering run produced.

    ``fill_edges`` is exact, integrated during elimination as
    sum over pivots of |neighborhood at elimination| (in original-vertex
    units) minus the off-diagonal pair count of the input.
    """

    order: np.ndarray
    mode: str
    n: int
    nnz_offdiag: int
    workers: int
    elapsed: float
    fill_edges: int
    peak_pool: int
    pool_capacity: int
    step_pivots: np.ndarray
    step_originals: np.ndarray
    step_seconds: np.ndarray
    phase_seconds: dict[str, float]
    merges: int
    absorptions: int
    config: dict = field(default_factory=dict)
    trace: list[TraceStep] | None = None

    @property
    def steps(self) -> int:
        return len(self.step_pivots)

    def permutation(self) -> Permutation:
        return Permutation(self.order)
