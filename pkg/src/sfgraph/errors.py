"""Exception taxonomy shared across the package.

Three broad failure classes, mirrored by the CLI exit codes:

* bad parameters / bad invocation   -> ParameterError   (exit 1)
* unusable input data               -> ParseError, DimensionError, DataError (exit 2)
* numerical breakdown at runtime    -> NumericalError   (exit 3)
"""


class SfgraphError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(SfgraphError, ValueError):
    """A parameter is outside its documented domain (bad theta, K > n, ...)."""


class ParseError(SfgraphError, ValueError):
    """An input file could not be parsed (ragged row, non-numeric cell, ...)."""


class DimensionError(SfgraphError, ValueError):
    """Input has unusable shape (too few rows/columns, length mismatch)."""


class DataError(SfgraphError, ValueError):
    """Input parsed fine but is degenerate (zero-norm target, identical samples)."""


class NumericalError(SfgraphError, RuntimeError):
    """A numerical routine failed to produce a usable result (non-convergence)."""
