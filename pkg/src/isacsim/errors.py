"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A scenario configuration field failed validation."""


class NoFeasiblePoint(RuntimeError):
    """The optimizer could not find any feasible beam design."""


class BudgetInfeasible(RuntimeError):
    """The power budget cannot be met even at the loosest setting."""


class NoFeasibleCandidate(RuntimeError):
    """Every randomization candidate violated a hard constraint.

    Carries the best candidate found so the caller can still transmit
    something while flagging the violation.
    """

    def __init__(self, message, best_beams=None, best_margin=None):
        super().__init__(message)
        self.best_beams = best_beams
        self.best_margin = best_margin


class NumericalFailure(RuntimeError):
    """A solver or linear-algebra step broke down numerically."""
