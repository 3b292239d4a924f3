"""Exception hierarchy.

Every error raised deliberately by the library derives from
:class:`OrbitalError`, which in turn is a :class:`ValueError`.  Validation
errors may carry a list of ``(field_path, reason)`` violations.
"""

from __future__ import annotations


class OrbitalError(ValueError):
    def __init__(self, message: str = "", violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class DimensionMismatch(OrbitalError):
    pass


class AllZeroWeights(OrbitalError):
    pass


class NegativeWeight(OrbitalError):
    pass


class NotNormalized(OrbitalError):
    pass


class DegenerateBox(OrbitalError):
    pass


class EmptyDirections(OrbitalError):
    pass


class UnknownNamedMap(OrbitalError):
    pass


class SymbolOutOfRange(OrbitalError):
    pass


class InvalidProbabilities(OrbitalError):
    pass


class EmptyIFS(OrbitalError):
    pass


class InvalidQ(OrbitalError):
    pass


class InvalidTolerance(OrbitalError):
    pass


class DepthOverflow(OrbitalError):
    pass


class DegenerateSpec(OrbitalError):
    pass


class EmptyBatch(OrbitalError):
    pass


class InvalidMu0Support(OrbitalError):
    pass


class ParseError(OrbitalError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaViolation(OrbitalError):
    pass
