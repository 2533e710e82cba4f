"""Exception types raised across the package.

``ValidationError`` covers everything that maps to a usage error at the
command line (exit code 2); plain ``OSError`` from file handling maps to
exit code 3.
"""


class RankfolioError(Exception):
    pass


class ValidationError(RankfolioError):
    pass


# scenario loading / data model

class MissingPerformance(ValidationError):
    pass


class FeatureArityMismatch(ValidationError):
    pass


class DuplicateId(ValidationError):
    pass


class MalformedFile(ValidationError):
    pass


class NegativeRuntime(ValidationError):
    pass


class InvalidSpec(ValidationError):
    pass


# learners

class EmptyInput(ValidationError):
    pass


class ArityMismatch(ValidationError):
    pass


class SingularSystem(RankfolioError):
    pass


# rankers

class MalformedLabel(ValidationError):
    pass


class InvalidRankMultiset(ValidationError):
    pass


class NonFiniteScore(ValidationError):
    pass


class TooFewRows(ValidationError):
    pass


class ComboMismatch(ValidationError):
    pass


# evaluation

class TooFewInstances(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class InvalidGroups(ValidationError):
    pass


class IncompleteGrid(ValidationError):
    pass


# schedules / simulation

class InvalidBudget(ValidationError):
    pass


class LevelMismatch(ValidationError):
    pass


class UnknownAlgorithm(ValidationError):
    pass
