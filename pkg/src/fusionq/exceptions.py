"""Exception hierarchy.

Two families matter to callers: :class:`DataError` (bad input, exit code 2 on
the command line) and :class:`ModelError` (infeasible or degenerate model,
exit code 3).
"""


class FusionError(Exception):
    """Base class for every error raised by fusionq."""


class DataError(FusionError, ValueError):
    """Malformed or inconsistent input data."""


class ShapeError(DataError):
    """Dimensions of two inputs do not agree."""


class MissingClassError(DataError):
    """An operation needs both positive and negative examples."""


class EmptySampleError(DataError):
    pass


class InvalidWeightsError(DataError):
    pass


class InvalidHyperparameterError(DataError):
    pass


class InvalidProblemError(DataError):
    """A QP is malformed (asymmetric quadratic term, inconsistent shapes)."""


class FormatVersionError(DataError):
    pass


class ChecksumError(DataError):
    pass


class StratificationError(DataError):
    pass


class ModelError(FusionError):
    """No valid model can be produced from otherwise well-formed input."""


class InfeasibleMarginError(ModelError):
    """The margin equality cannot be met inside the weight box.

    ``max_mu`` is the largest margin value the voters can reach on the sample;
    any ``mu`` strictly below it is feasible.
    """

    def __init__(self, mu, max_mu):
        self.mu = mu
        self.max_mu = max_mu
        super().__init__(
            f"margin mu={mu:g} is not attainable; largest feasible margin is {max_mu:.6g}"
        )


class ConvergenceError(ModelError):
    pass


class ProblemTooLargeError(ModelError):
    pass


class DegenerateError(ModelError):
    """A quantity is undefined because its inputs are degenerate."""


class UndefinedBoundError(DegenerateError):
    pass


class UndefinedMAPError(DegenerateError):
    pass


class DegenerateTestError(DegenerateError):
    pass


class DegenerateStandardizationError(DegenerateError):
    pass


class NoFeasibleModelError(ModelError):
    pass
