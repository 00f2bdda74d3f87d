"""Exception types shared across the package."""


class DensewireError(Exception):
    """Base class for package-specific failures."""


class EmptyDerivation(DensewireError):
    """No intermediate vertex is reachable from the input vertex."""


class BudgetTooSmall(DensewireError):
    """Even the minimum-width network exceeds the requested MAC budget."""


class UnknownPreset(DensewireError):
    pass


class InvalidPermutation(DensewireError):
    """Permutation breaks endpoint fixing, operator labels, or edge ordering."""


class ShapeMismatch(DensewireError):
    """Two meta-graphs do not share cell count, vertex counts, or operators."""


class EmptyDataset(DensewireError):
    pass


class DimensionMismatch(DensewireError):
    pass


class DegenerateVariance(DensewireError):
    """Rank correlations are undefined for a constant score vector.

    Carries the mean squared error, which is still well defined.
    """

    def __init__(self, message, mse=None):
        super().__init__(message)
        self.mse = mse


class NonPositiveTemperature(DensewireError):
    pass


class DisconnectedSpace(DensewireError):
    """The proposal graph does not connect every state of the space."""


class SpaceTooLarge(DensewireError):
    pass


class SamplingExhausted(DensewireError):
    """Rejection sampling could not produce the requested number of samples."""


class OracleFailure(DensewireError):
    """An oracle call failed; the search driver adds round context."""


class ExternalProtocolError(OracleFailure):
    """The external evaluator broke the newline-delimited JSON protocol."""


class SchemaError(DensewireError):
    """A document failed schema validation."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
