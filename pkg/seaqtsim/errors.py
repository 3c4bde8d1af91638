from typing import Any, Optional, Sequence


class Error(Exception):
    """
    Error is raised when a numerical operation fails.
    """

    def __init__(self, message: str):
        """
        Initialize a failure.

        :param message: Message to fail with.
        """
        super().__init__(message)
        self.message = message

    def __reduce__(self) -> tuple[Any, ...]:
        return self.__class__, (self.message,)


class PositivityViolationError(Error):
    """
    A density matrix has an eigenvalue below the allowed negative tolerance.
    """

    def __init__(
        self, message: str, time: Optional[float] = None, spectrum: Sequence[float] = ()
    ):
        """
        Initialize a positivity violation.

        :param message: Message to fail with.
        :param time: Time (ns) at which the violation occurred, if known.
        :param spectrum: Eigenvalues of the offending matrix.
        """
        super().__init__(message)
        self.time = time
        self.spectrum = tuple(float(v) for v in spectrum)

    def __reduce__(self) -> tuple[Any, ...]:
        return self.__class__, (self.message, self.time, self.spectrum)


class DegenerateConstraintError(Error):
    """
    The Gram matrix of the constraint operators is singular.
    """

    def __init__(self, message: str, determinant: float = 0.0):
        """
        Initialize a degenerate-constraint failure.

        :param message: Message to fail with.
        :param determinant: Value of the offending Gram determinant.
        """
        super().__init__(message)
        self.determinant = determinant

    def __reduce__(self) -> tuple[Any, ...]:
        return self.__class__, (self.message, self.determinant)


class SweepError(Error):
    """
    A sweep cell failed. Carries the cell coordinates.
    """

    def __init__(self, message: str, tau: float, d_eps: float):
        """
        Initialize a sweep failure.

        :param message: Message of the underlying failure.
        :param tau: Gate duration (ns) of the failed cell.
        :param d_eps: Detuning label (μV) of the failed cell.
        """
        super().__init__(f"tau={tau:g} ns, d_eps={d_eps:g} uV: {message}")
        self.cause = message
        self.tau = tau
        self.d_eps = d_eps

    def __reduce__(self) -> tuple[Any, ...]:
        return self.__class__, (self.cause, self.tau, self.d_eps)


class MetricsRangeError(Error):
    """
    A metrics record violates its value ranges.
    """
