"""Exception types shared across the toolkit."""


class SpeechcmdError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(SpeechcmdError, ValueError):
    """A precondition on an operation's input was violated."""


class FormatError(SpeechcmdError, ValueError):
    """A binary or text artifact does not match its declared layout.

    ``offset`` is the byte position at which the problem was detected,
    when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset
