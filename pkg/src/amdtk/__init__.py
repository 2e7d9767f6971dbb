"""Fill-reducing ordering toolkit: sequential and parallel approximate
minimum degree on quotient graphs, plus exact elimination-graph references."""

from .matrixio import (
    MatrixFormatError,
    Permutation,
    RawTriplets,
    SparsePattern,
    apply_permutation,
    parse_matrix_market,
    random_permutation,
    symmetrize_pattern,
)
from .oracle import (
    EliminationGraph,
    fill_in_count,
    find_distance2_violation,
    is_distance2_independent,
    minimum_degree_order,
)
from .quotient import (
    PivotRecord,
    PoolExhaustedError,
    PoolReservation,
    QuotientGraph,
)
from .core import (
    DegreeWorkspace,
    SequentialDegreeLists,
    compute_set_difference_sizes,
    sequential_amd,
    update_approximate_degrees,
)
from .parallel import (
    ConcurrentDegreeLists,
    ParallelConfig,
    dist2_independent_set,
    parallel_amd,
)
from .fillcount import fill_of_order, simulated_fill, symbolic_fill
from .generators import (
    generate_from_spec,
    grid2d_pattern,
    grid3d_pattern,
    path_pattern,
    random_graph_pattern,
    random_tree_pattern,
    write_matrix_market,
)
from .verify import VerifyVerdict, verify_result, verify_trace
from .report import SCHEMA_VERSION, build_stats, render_report, write_stats
from .results import OrderingResult, StepInfo, TraceStep

__version__ = "0.1.0"

__all__ = [
    "MatrixFormatError",
    "Permutation",
    "RawTriplets",
    "SparsePattern",
    "apply_permutation",
    "parse_matrix_market",
    "random_permutation",
    "symmetrize_pattern",
    "EliminationGraph",
    "fill_in_count",
    "find_distance2_violation",
    "is_distance2_independent",
    "minimum_degree_order",
    "PivotRecord",
    "PoolExhaustedError",
    "PoolReservation",
    "QuotientGraph",
    "DegreeWorkspace",
    "SequentialDegreeLists",
    "compute_set_difference_sizes",
    "sequential_amd",
    "update_approximate_degrees",
    "ConcurrentDegreeLists",
    "ParallelConfig",
    "dist2_independent_set",
    "parallel_amd",
    "fill_of_order",
    "simulated_fill",
    "symbolic_fill",
    "generate_from_spec",
    "grid2d_pattern",
    "grid3d_pattern",
    "path_pattern",
    "random_graph_pattern",
    "random_tree_pattern",
    "write_matrix_market",
    "VerifyVerdict",
    "verify_result",
    "verify_trace",
    "SCHEMA_VERSION",
    "build_stats",
    "render_report",
    "write_stats",
    "OrderingResult",
    "StepInfo",
    "TraceStep",
    "__version__",
]
