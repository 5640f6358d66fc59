"""
Exception types shared by every fockFTW module.

Domain errors (bad physics parameters, too little data) and input errors
(unparseable files) are kept apart so the command line can map them onto
stable exit codes.
"""


class FockDomainError(ValueError):
    """A value is outside the domain an operation accepts."""


class UnheraldableError(FockDomainError):
    """The requested herald outcome has (numerically) zero probability."""

    def __init__(self, herald_n, probability):
        self.herald_n = herald_n
        self.probability = probability
        super().__init__(
            f"herald outcome n={herald_n} is unheraldable (probability {probability:.3e} < 1e-15)"
        )


class InsufficientDataError(FockDomainError):
    """Too few records, events or calibration values for the requested estimate."""


class InputFormatError(ValueError):
    """
    A file or record could not be parsed.

    Args:
        message (str): What went wrong
        path (str, optional): File being read
        line_number (int, optional): 1-based line of the offending record
    """

    def __init__(self, message, path=None, line_number=None):
        self.path = None if path is None else str(path)
        self.line_number = line_number
        location = ""
        if self.path is not None:
            location = f"{self.path}"
            if line_number is not None:
                location += f":{line_number}"
            location += ": "
        elif line_number is not None:
            location = f"line {line_number}: "
        super().__init__(f"{location}{message}")
