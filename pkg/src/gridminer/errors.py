class GridError(Exception):
    """Base class for all gridminer errors."""


class InputError(GridError):
    """Malformed or invalid user input (config, workload, dataset, arguments)."""


class InvariantViolation(GridError):
    """An internal consistency check failed; indicates a bug, not bad input."""


class NoResource(GridError):
    """No trust-eligible gridlet is available for a task."""


class TaskError(GridError):
    """A task could not be executed against its partition."""
