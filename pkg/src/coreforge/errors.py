"""Exception hierarchy shared by every coreforge module."""

from __future__ import annotations


class CoreforgeError(Exception):
    """Base class for all errors raised by coreforge."""


# -- type model -------------------------------------------------------------


class SchemaError(CoreforgeError):
    pass


class InvalidUnit(SchemaError):
    pass


class DuplicateUnitName(SchemaError):
    pass


class DanglingReference(SchemaError):
    pass


class SchemaArityMismatch(SchemaError):
    pass


class MissingValue(SchemaError):
    pass


# -- expression language ----------------------------------------------------


class ExprError(CoreforgeError):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class UnboundSelector(ExprError):
    pass


class NonBooleanVerification(ExprError):
    pass


class DomainError(ExprError, ValueError):
    """The result is not a finite real number (``(-1) ^ 0.5``, ``0 ^ -1``)."""


# -- factorization ----------------------------------------------------------


class FactorizationError(CoreforgeError):
    pass


class TooFewTypes(FactorizationError):
    pass


class DuplicateTypeName(FactorizationError):
    pass


class UnknownTypeName(FactorizationError):
    pass


# -- efficiency -------------------------------------------------------------


class EfficiencyError(CoreforgeError):
    pass


class MissingSizeEntry(EfficiencyError):
    pass


class DivisionByZeroHC(EfficiencyError, ZeroDivisionError):
    pass


class DegenerateInput(EfficiencyError):
    pass


# -- relational store -------------------------------------------------------


class StoreError(CoreforgeError):
    pass


class EmptyClass(StoreError):
    pass


class SchemaMismatch(StoreError):
    pass


class ConstraintViolation(StoreError):
    pass


class NotFound(StoreError, KeyError):
    pass


class IoError(StoreError, OSError):
    pass


class ConfigError(CoreforgeError, ValueError):
    pass
