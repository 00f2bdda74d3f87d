"""Training evaluator for dense-connectivity graph documents.

Materializes a CNN from a meta-graph document, trains it briefly on a
CIFAR-10 subset, and serves scores over newline-delimited JSON on
stdin/stdout. The graph semantics are re-derived from the document alone;
the only coupling to the search side is the wire protocol.
"""

from .documents import CellSpec, MetaSpec, StageSpec, parse_document
from .errors import DataUnavailable, EvaluatorError, SchemaError, UnrealizableGraph
from .network import EvalNetwork, build_network, searched_parameter_count
from .training import EvalBudget, EvalResult, evaluate_once

__all__ = [
    "CellSpec",
    "MetaSpec",
    "StageSpec",
    "parse_document",
    "DataUnavailable",
    "EvaluatorError",
    "SchemaError",
    "UnrealizableGraph",
    "EvalNetwork",
    "build_network",
    "searched_parameter_count",
    "EvalBudget",
    "EvalResult",
    "evaluate_once",
]
