class EvaluatorError(Exception):
    """Base class for evaluator failures."""


class SchemaError(EvaluatorError):
    """The meta-graph document is malformed or describes no usable graph."""


class UnrealizableGraph(EvaluatorError):
    """A validated document still failed to materialize; never expected."""


class DataUnavailable(EvaluatorError):
    """The CIFAR-10 files are not present under the data directory."""
