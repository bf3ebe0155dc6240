from typing import Optional

from src.Enums.ExitCode import ExitCode


class SimulationError(Exception):
    """
    Base exception for every domain failure of the simulator.

    Carries the process exit code the CLI terminates with and the HTTP-like status the
    API reports, together with a message explaining the problem.

    Attributes:
        exit_code (ExitCode): Exit code used by the command-line front end.
        status (int): Status code reported in API response envelopes.
        message (str): A message describing the error.
    """

    default_exit_code: ExitCode = ExitCode.UNEXPECTED_ERROR
    default_status: int = 500

    def __init__(self, message: str, exit_code: Optional[ExitCode] = None, status: Optional[int] = None):
        """
        Initializes the exception with a message and optional overrides of the codes.

        Args:
            message (str): A message explaining the error.
            exit_code (Optional[ExitCode]): Overrides the class default exit code.
            status (Optional[int]): Overrides the class default status code.
        """
        super().__init__(message)
        self.message = message
        self.exit_code = exit_code if exit_code is not None else self.default_exit_code
        self.status = status if status is not None else self.default_status


class InvalidParameter(SimulationError):
    """A value violates the precondition of an operation."""
    default_exit_code = ExitCode.CONFIG_ERROR
    default_status = 422


class AboveThreshold(SimulationError):
    """The pump drives the cavity at or above threshold; the linear steady state does not exist."""
    default_exit_code = ExitCode.CONFIG_ERROR
    default_status = 422


class SingularSystem(SimulationError):
    """The real 2x2 equilibrium system is singular (exactly at threshold)."""
    default_exit_code = ExitCode.CONFIG_ERROR
    default_status = 422


class InvalidGain(SimulationError):
    """A gain ratio below 1 cannot be produced by any pump strength."""
    default_exit_code = ExitCode.CONFIG_ERROR
    default_status = 422


class WindowTooNarrow(SimulationError):
    """The reflected-power minimum sits on the boundary of the searched window."""
    default_exit_code = ExitCode.CONFIG_ERROR
    default_status = 422


class LockFailed(SimulationError):
    """The PDH loop did not settle within the settle window."""
    default_exit_code = ExitCode.LOCK_FAILED
    default_status = 409


class EmptyWindow(SimulationError):
    """The analysis window holds too few samples or no transmitted power."""
    default_exit_code = ExitCode.INSUFFICIENT_DATA
    default_status = 422


class InsufficientData(SimulationError):
    """A homodyne trace is too short or covers too little of the phase ramp."""
    default_exit_code = ExitCode.INSUFFICIENT_DATA
    default_status = 422


class CalibrationError(SimulationError):
    """Noise calibration could not bracket one of its targets."""
    default_exit_code = ExitCode.CONFIG_ERROR
    default_status = 422


class DegenerateFit(SimulationError):
    """
    The squeezing magnitude is consistent with zero, so arg(ξ) cannot be identified.

    Attributes:
        estimate: The partial TomographyEstimate; its arg(ξ) standard error is infinite.
    """
    default_exit_code = ExitCode.INSUFFICIENT_DATA
    default_status = 422

    def __init__(self, message: str, estimate=None):
        super().__init__(message)
        self.estimate = estimate
