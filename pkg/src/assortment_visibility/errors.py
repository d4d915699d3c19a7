"""Exception hierarchy shared by the solvers, the CLI and the MCP server."""


class AssortmentError(Exception):
    """Base class for all package errors.

    ``exit_code`` is the process exit status the CLI reports for this error.
    """

    exit_code = 1


class InvalidAssortmentError(AssortmentError, ValueError):
    """An assortment references a product index outside the instance."""


class PreconditionError(AssortmentError, ValueError):
    """An operation was called with arguments violating its precondition."""


class CannotIncreaseVisibilityError(PreconditionError):
    """The visibility requirement of a product is already equal to the horizon."""


class UnsupportedInstanceError(AssortmentError, ValueError):
    """The instance falls outside what an algorithm supports (e.g. unequal prices)."""


class MalformedInputError(AssortmentError, ValueError):
    """Generator input does not describe a valid instance."""


class LpModelError(AssortmentError, ValueError):
    """A linear program is not well formed."""


class SolverError(AssortmentError, RuntimeError):
    """The simplex method failed to terminate within its iteration limit."""


class ExtractionError(AssortmentError, RuntimeError):
    """An LP solution is not a vertex of the expected shape."""


class BipartiteStructureError(AssortmentError, ValueError):
    """A fractional graph is not a simple bipartite graph with values in [0, 1]."""


class InfeasibleInstanceError(AssortmentError):
    """No plan satisfies the visibility and cardinality requirements."""

    exit_code = 2


class InstanceTooLargeError(AssortmentError):
    """An exhaustive oracle was asked to enumerate beyond its guard."""

    exit_code = 3


class GuessBudgetExceededError(AssortmentError):
    """The approximation scheme would enumerate more guesses than allowed."""

    exit_code = 3

    def __init__(self, guess_count: int, budget: int):
        super().__init__(f"Guess count {guess_count} exceeds the guess budget {budget}")
        self.guess_count = guess_count
        self.budget = budget


class SandwichViolationError(AssortmentError, ArithmeticError):
    """A plan's true objective is not bracketed by its rounded-weight objective."""
