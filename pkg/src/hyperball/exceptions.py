"""Exception hierarchy shared by all hyperball modules."""


class HyperballError(Exception):
    """Base class for library errors."""


class DomainError(HyperballError, ValueError):
    """An argument lies outside the admissible domain of an operation."""


class ConvergenceError(HyperballError, RuntimeError):
    """An iterative routine failed to reach its tolerance."""


class StepFailure(ConvergenceError):
    """An ODE step kept leaving the admissible region after repeated halving."""


class DegenerateDataError(HyperballError, ValueError):
    """The data admit no finite estimate (e.g. all observations coincide)."""
