"""tvflow exceptions."""


class FlowError(Exception):
    """Base exception for all tvflow errors."""

    exit_code = 1

    def __init__(self, message: str) -> None:
        """Initialize the exception.

        Args:
            message: Error message
        """
        self.message = message
        super().__init__(message)


class FlowShapeError(FlowError):
    """Raised when grid dimensions do not match."""

    exit_code = 2


class FlowConfigError(FlowError):
    """Raised when a model spec, setting or manifest value is invalid."""

    exit_code = 2


class FlowFormatError(FlowError):
    """Raised when a file has unexpected contents."""

    exit_code = 3


class FlowIOError(FlowError):
    """Raised when a path cannot be read or written."""

    exit_code = 3


class FlowFetchError(FlowError):
    """Raised when a dataset download fails."""

    exit_code = 3

    def __init__(self, message: str, status_code: int | None = None) -> None:
        """Initialize the exception.

        Args:
            message: Error message
            status_code: HTTP status code if applicable
        """
        self.status_code = status_code
        super().__init__(message)


class FlowDivergenceError(FlowError):
    """Raised when the solver produces non-finite values."""

    exit_code = 4

    def __init__(self, message: str, iteration: int) -> None:
        """Initialize the exception.

        Args:
            message: Error message
            iteration: Iteration at which non-finite values appeared
        """
        self.iteration = iteration
        super().__init__(message)
