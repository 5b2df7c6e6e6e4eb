"""Exception types raised across the toolkit."""


class DiffNormalsError(Exception):
    """Base class for all toolkit errors."""


class CloudIOError(DiffNormalsError, OSError):
    """A cloud or ground-truth file is missing or unreadable."""


class ParseError(DiffNormalsError, ValueError):
    """Malformed file content. ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f"{':' if where else ''}line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class UnknownAttributeError(DiffNormalsError, KeyError):
    def __str__(self):
        return f"unknown attribute {self.args[0]!r}"


class InvalidRadiusError(DiffNormalsError, ValueError):
    pass


class InvalidParamsError(DiffNormalsError, ValueError):
    pass


class InvalidThresholdError(DiffNormalsError, ValueError):
    pass


class IndexOutOfRangeError(DiffNormalsError, IndexError):
    pass


class EmptyClassError(DiffNormalsError, ValueError):
    pass


class UnknownClassError(DiffNormalsError, KeyError):
    def __str__(self):
        return f"unknown class {self.args[0]!r}"


class EmptyInputError(DiffNormalsError, ValueError):
    pass
