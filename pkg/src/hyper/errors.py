"""Exception hierarchy for the engine.

Data/schema problems, query problems and evaluation problems form three
families so the CLI can map them to distinct exit codes.
"""
from __future__ import annotations


class HyperError(Exception):
    """Base class for all engine errors."""


# -- data / schema -----------------------------------------------------------

class SchemaError(HyperError):
    pass


class UnknownAttribute(SchemaError):
    pass


class UnknownRelation(SchemaError):
    pass


class ValueOutsideDomain(SchemaError):
    def __init__(self, relation: str, row: int, attr: str, value=None):
        self.relation, self.row, self.attr, self.value = relation, row, attr, value
        super().__init__(f"{relation}[{row}].{attr}: value {value!r} outside declared domain")


class DuplicateKey(SchemaError):
    pass


class NonStarSchema(SchemaError):
    pass


class ImmutableAttribute(SchemaError):
    pass


class UpdateValueOutsideDomain(SchemaError):
    pass


class InvalidUpdateFunction(SchemaError):
    pass


# -- causal model ------------------------------------------------------------

class CausalModelError(HyperError):
    pass


class CycleDetected(CausalModelError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cycle detected: " + " -> ".join(map(str, self.cycle)))


class DanglingAttribute(CausalModelError):
    pass


class EmptyJoinGroup(CausalModelError):
    pass


class InvalidScm(CausalModelError):
    pass


# -- query dialect -----------------------------------------------------------

class QueryError(HyperError):
    pass


class QuerySyntaxError(QueryError):
    def __init__(self, message: str, line: int, col: int):
        self.line, self.col = line, col
        super().__init__(f"{message} (line {line}, col {col})")


class ValidationError(QueryError):
    pass


class ImmutableUpdateTarget(ValidationError):
    pass


class PostInWhen(ValidationError):
    pass


class PathBetweenUpdates(ValidationError):
    pass


class DomainTooLarge(QueryError):
    pass


class UnsupportedAggregate(QueryError):
    pass


# -- estimation / evaluation -------------------------------------------------

class EvaluationError(HyperError):
    pass


class EmptySample(EvaluationError):
    pass


class ZeroSupport(EvaluationError):
    def __init__(self, conditioning):
        self.conditioning = dict(conditioning)
        super().__init__(f"zero support for conditioning values {self.conditioning}")


class InvalidBackdoorSet(EvaluationError):
    pass


class WorldCapExceeded(EvaluationError):
    pass


class EmptyCandidateSet(EvaluationError):
    pass


class Infeasible(EvaluationError):
    pass
