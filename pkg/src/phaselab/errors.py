"""Exception types shared across phaselab modules."""


class PhaselabError(Exception):
    """Base class for all phaselab errors."""


class DomainViolation(PhaselabError):
    """A point lies outside a declared domain or inside a guarded singularity."""


class NonFinite(PhaselabError):
    """An evaluation produced inf or nan."""


class ArityMismatch(PhaselabError):
    """Fields combined over inconsistent variable counts."""


class FlatDerivative(PhaselabError):
    """The test function has (numerically) vanishing derivative at the base point."""


class DimensionOverflow(PhaselabError):
    """A builder would exceed the configured variable-count cap."""


class NotCritical(PhaselabError):
    """Classification requested at a point whose gradient is not small."""


class BudgetExceeded(PhaselabError):
    """Too many refinement seeds failed to converge within the iteration budget.

    Usually a sign that the critical set is not isolated points.
    """


class DegenerateHessian(PhaselabError):
    """A stationary-phase weight was requested for a (near-)singular Hessian."""


class ResolutionExceeded(PhaselabError):
    """The oscillation rate requires more quadrature nodes than the budget allows."""


class NoFamily(PhaselabError):
    """No exact zero family exists (target not a positive exact rational)."""


class SlowOnset(PhaselabError):
    """The determinant ratio did not stabilise within the scan budget."""


class RegimeViolation(PhaselabError):
    """The coupling-expansion preconditions (small h*beta*L3*y^2) do not hold."""


class EvaluatorFailure(PhaselabError):
    """A phase-track evaluator raised; carries the offending h."""

    def __init__(self, h, message=""):
        self.h = h
        super().__init__(f"evaluator failed at h={h!r}: {message}")


class ExpressionParseError(PhaselabError):
    """Malformed prefix expression text."""


class ConfigError(PhaselabError):
    """Invalid run configuration; carries the offending field name."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")
