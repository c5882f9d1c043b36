"""Exception types shared by all modules."""


class DomainError(ValueError):
    """An argument lies outside the domain of a map or operation."""


class CompositionError(ValueError):
    """The range of the inner map does not fit the domain of the outer map."""


class UnsupportedError(ValueError):
    """The input is valid but outside what an exact algorithm handles."""


class InvariantError(RuntimeError):
    """An exact invariant failed, which signals a wrong input map."""


class ResourceError(RuntimeError):
    """A budget (pieces, iterations, search size) was exhausted.

    ``partial`` carries whatever the operation had reached, e.g. the last
    iterate that fit in the piece budget.
    """

    def __init__(self, message, partial=None, **info):
        super().__init__(message)
        self.partial = partial
        self.info = info
