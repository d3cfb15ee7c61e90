"""Exception types shared across the package."""


class ValidationError(ValueError):
    """A precondition on inputs or a wire-format invariant is violated."""


class DomainError(ValueError):
    """An analytic continuation was evaluated outside its domain of validity."""


class ConfigurationError(RuntimeError):
    """The requested computation is infeasible under the given parameters
    (memory budget exceeded, contraction bound violated, grid too small)."""
