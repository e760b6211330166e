"""Mean-field analysis of upper tails of vertex-percolated hypergraph edge counts."""

from .errors import (
    ConvergenceError,
    HypergraphFormatError,
    InfeasibleError,
    NoBreakingPossible,
    ResourceLimitError,
)
from .graphon import (
    BlockGraphon,
    MotifGraph,
    bipartite_slope,
    finite_vs_limit_gap,
    graph_to_block_graphon,
    homomorphism_density,
    solve_block_variational,
    two_sided_slope,
    weighted_density,
)
from .hypergraph import (
    Hypergraph,
    SimpleGraph,
    complete_hypergraph,
    degree_profile,
    edge_polynomial,
    motif_counting_hypergraph,
    read_hypergraph_json,
)
from .rate import (
    convex_minorant,
    convexity_threshold,
    is_replica_symmetric,
    region_scan,
    relative_entropy,
    tilted_rate,
)
from .varsolve import (
    BreakingCertificate,
    SolverOptions,
    VariationalProblem,
    VariationalSolution,
    build_breaking_certificate,
    check_regular_upper_bound,
    concave_pair_certificate,
    kkt_residual,
    replica_value,
    solve_full,
    solve_two_value,
)
from .verify import (
    exact_tail,
    meanfield_report,
    monte_carlo_tail,
    rate_convergence_study,
    tilted_monte_carlo,
)

__version__ = "0.1.0"
