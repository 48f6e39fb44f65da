"""Exception types shared across the package."""


class SingularSystemError(ValueError):
    """A least-squares system is rank deficient or too ill-conditioned to trust."""


class DictionaryBudgetError(ValueError):
    """A dictionary build would exceed the configured element budget."""
