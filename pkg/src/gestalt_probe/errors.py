"""Exception hierarchy shared across the toolkit."""


class GestaltError(Exception):
    """Base class for all toolkit errors."""


class ChannelMismatchError(GestaltError):
    """Operation received an image with the wrong channel count."""


class DimensionMismatchError(GestaltError):
    """Shapes of two inputs that must agree do not."""


class EmptyInputError(GestaltError):
    """An operation that needs foreground content got none."""


class ConvergenceError(GestaltError):
    """Iterative generator could not reach its target within its budget."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class FormatError(GestaltError):
    """A file or stream does not match its declared binary/text layout."""


class ProtocolError(GestaltError):
    """External classifier violated the wire protocol."""


class ClassifierError(GestaltError):
    """The classifier itself failed while scoring an image."""


class ConfigError(GestaltError):
    """Invalid sweep configuration."""
