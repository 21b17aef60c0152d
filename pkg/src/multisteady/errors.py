"""Exception hierarchy.

Every error raised by the library derives from :class:`MultiSteadyError`.
The intermediate classes group errors by the CLI exit code they map to.
"""


class MultiSteadyError(Exception):
    """Base class for all library errors."""


# -- model / input problems (exit code 3) ------------------------------------

class ModelError(MultiSteadyError):
    pass


class ValidationError(ModelError):
    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


class ParseError(ModelError):
    pass


class NoMec(ModelError):
    pass


class NotStronglyConnected(ModelError):
    pass


class InvalidM(ModelError, ValueError):
    pass


class ClassNotInMec(ModelError):
    pass


class ColorMismatch(ModelError):
    pass


class SupportMismatch(ModelError):
    pass


class AttemptsExhausted(ModelError):
    pass


# -- LP solver problems (exit code 4) -----------------------------------------

class SolverError(MultiSteadyError):
    pass


class Infeasible(SolverError):
    pass


class Unbounded(SolverError):
    pass


class IterationLimit(SolverError):
    pass


class ZeroRow(SolverError):
    pass


# -- evaluator refusals (exit code 5) -----------------------------------------

class EvaluationRefused(MultiSteadyError):
    pass


class NotWellFormed(EvaluationRefused):
    def __init__(self, offending):
        self.offending = offending
        super().__init__(f"coloring is not well-formed; colors shared across MECs: {offending}")


class NotFull(EvaluationRefused):
    pass


class ReducibleChain(EvaluationRefused):
    pass


# kept as an alias: the stationary solver reports the same condition
Reducible = ReducibleChain


class LcmCapExceeded(EvaluationRefused):
    pass


class CapExceeded(EvaluationRefused):
    pass


class Timeout(MultiSteadyError):
    pass
