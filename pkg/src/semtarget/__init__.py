"""Similarity-guided target selection and evaluation for targeted attacks.

Pick per-class attack targets from a semantic similarity source (a concept
hierarchy or label embeddings), run attacks against them, and score the
outcome with rank-based metrics.
"""

from .embeddings import (
    EmbeddingSet,
    SimilarityMatrix,
    cosine,
    cosine_matrix,
    load_embeddings,
    write_embeddings,
)
from .errors import CycleError, TrainingGateError, ValidationError
from .metrics import (
    ClassTemplates,
    MetricsReport,
    PredictionRecord,
    dissimilarity_metric,
    fooling_rate,
    load_predictions,
    report,
    static_dm,
    targeted_success_rate,
    template_rank,
    validate_log,
    write_predictions,
)
from .targets import TargetRow, TargetTable, build_targets, read_table, write_table
from .taxonomy import Taxonomy, TaxonomyNode, parse_taxonomy, write_classmap, write_edges

__version__ = "0.1.0"

__all__ = [
    "ClassTemplates",
    "CycleError",
    "EmbeddingSet",
    "MetricsReport",
    "PredictionRecord",
    "SimilarityMatrix",
    "TargetRow",
    "TargetTable",
    "Taxonomy",
    "TaxonomyNode",
    "TrainingGateError",
    "ValidationError",
    "build_targets",
    "cosine",
    "cosine_matrix",
    "dissimilarity_metric",
    "fooling_rate",
    "load_embeddings",
    "load_predictions",
    "parse_taxonomy",
    "read_table",
    "report",
    "static_dm",
    "targeted_success_rate",
    "template_rank",
    "validate_log",
    "write_classmap",
    "write_edges",
    "write_embeddings",
    "write_predictions",
    "write_table",
    "__version__",
]
