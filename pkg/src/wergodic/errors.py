"""Exception hierarchy.

Every error raised on purpose by the package derives from ``WergodicError``;
most also derive from ``ValueError`` so callers doing plain input validation
can keep catching that.
"""


class WergodicError(Exception):
    pass


class InvalidMeasure(WergodicError, ValueError):
    """Weights negative, non-finite, or not summing to one."""


class AtomOutOfRange(WergodicError, ValueError):
    """Atoms span more than the unit interval; use ``w1_exact`` instead."""


class SolverFailure(WergodicError, RuntimeError):
    pass


class CapExceeded(WergodicError, ValueError):
    pass


class NotStochastic(WergodicError, ValueError):
    pass


class BadParameter(WergodicError, ValueError):
    pass


class BadGrid(WergodicError, ValueError):
    pass


class BadDiffusion(WergodicError, ValueError):
    pass


class EmptyTrajectory(WergodicError, ValueError):
    pass


class BadExponent(WergodicError, ValueError):
    pass


class DegeneratePair(WergodicError, ValueError):
    pass


class BudgetExceeded(WergodicError, ValueError):
    pass


class NonPositiveValue(WergodicError, ValueError):
    pass


class NonUniqueStationary(WergodicError, ValueError):
    pass


class ConfigError(WergodicError, ValueError):
    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
