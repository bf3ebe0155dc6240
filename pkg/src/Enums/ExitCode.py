from enum import IntEnum


class ExitCode(IntEnum):
    """
    Process exit codes of the command-line front end.
    """
    SUCCESS = 0
    UNEXPECTED_ERROR = 1
    CONFIG_ERROR = 2
    LOCK_FAILED = 3
    INSUFFICIENT_DATA = 4
