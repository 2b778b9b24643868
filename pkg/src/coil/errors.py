"""Exception types raised across the package."""


class CoilError(Exception):
    pass


class Infeasible(CoilError):
    """Some demand cannot be served by any facility."""


class BoundExceeded(CoilError):
    """The exact solver ran out of its node budget."""


class InconsistentSolution(CoilError):
    pass


class DegenerateBelief(CoilError):
    """A belief update left zero posterior mass."""


class EmptyHorizon(CoilError):
    pass


class NonTermination(CoilError):
    pass


class BadConfig(CoilError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class ParseError(CoilError):
    pass


class InvariantViolation(CoilError):
    def __init__(self, step, message):
        super().__init__(f"step {step}: {message}")
        self.step = step
