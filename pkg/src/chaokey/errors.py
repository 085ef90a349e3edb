"""Exception hierarchy shared by every chaokey module."""


class ChaokeyError(Exception):
    """Base class for all errors raised by chaokey."""


class InvalidArg(ChaokeyError, ValueError):
    pass


class NonFinite(ChaokeyError, ArithmeticError):
    """Integration produced NaN or Inf."""


class DegenerateInput(ChaokeyError, ValueError):
    """Input has no variance/energy, so the statistic is undefined."""


class DimensionMismatch(ChaokeyError, ValueError):
    pass


class FormatError(ChaokeyError, ValueError):
    """A serialized container or key file is corrupt or truncated."""


class FrameTooShort(FormatError):
    pass


class FrameTooLong(FormatError, InvalidArg):
    pass


class KeyMissing(ChaokeyError, FileNotFoundError):
    """A required key file is absent."""
