"""Entropy-guided graph structure learning.

The package rebuilds a noisy graph in three moves: fuse a similarity
overlay into the edge set (``similarity``), compress the result into a
height-bounded encoding tree that minimizes structural entropy
(``tree``), then resample vertex pairs from the tree's uncertainty
profile to form the next edge set (``sampling``).  ``pipeline`` chains
the moves into an iterative loop with pluggable embedding providers,
and ``cli`` exposes everything as subcommands.
"""

from .errors import (
    ConfigError,
    DegenerateGraphError,
    EntrographError,
    ParseError,
    ProviderError,
    StageError,
    ValidationError,
)
from .graph import (
    Graph,
    connected_components,
    is_connected,
    load_attributes,
    load_edge_list,
    relabel_edge_list,
    save_attributes,
    save_edge_list,
    validate_attributes,
    volume,
)
from .pipeline import (
    PipelineConfig,
    TraceRecord,
    embed,
    generate_sbm,
    iteration_seed,
    perturb,
    run_pipeline,
)
from .sampling import (
    ProbabilityTree,
    SampledEdgeSet,
    annotate_probabilities,
    deduction_entropy,
    load_sampled,
    reconstruct,
    sample_edges,
    sibling_probabilities,
)
from .similarity import (
    FusionResult,
    fuse_and_reweight,
    fusion_offset,
    knn_edges,
    pcc_similarity,
    select_k,
)
from .tree import (
    EncodingTree,
    EntropyReport,
    build_optimal_tree,
    combine,
    lift,
    one_dim_entropy,
    single_level_tree,
    tree_entropy,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DegenerateGraphError", "EntrographError", "ParseError",
    "ProviderError", "StageError", "ValidationError",
    "Graph", "connected_components", "is_connected", "load_attributes",
    "load_edge_list", "relabel_edge_list", "save_attributes",
    "save_edge_list", "validate_attributes", "volume",
    "PipelineConfig", "TraceRecord", "embed", "generate_sbm",
    "iteration_seed", "perturb", "run_pipeline",
    "ProbabilityTree", "SampledEdgeSet", "annotate_probabilities",
    "deduction_entropy", "load_sampled", "reconstruct", "sample_edges",
    "sibling_probabilities",
    "FusionResult", "fuse_and_reweight", "fusion_offset", "knn_edges",
    "pcc_similarity", "select_k",
    "EncodingTree", "EntropyReport", "build_optimal_tree", "combine",
    "lift", "one_dim_entropy", "single_level_tree", "tree_entropy",
    "__version__",
]
