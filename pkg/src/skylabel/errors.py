"""Exception hierarchy.

Everything raised on bad input or bad data derives from :class:`SkylabelError`
so the CLI can map it to a data-error exit code.
"""


class SkylabelError(ValueError):
    pass


class InvalidInputError(SkylabelError):
    pass


class ConfigError(SkylabelError):
    pass


class DegenerateCancellationError(SkylabelError):
    """Groundwave and skywave cancel exactly; the composite phase is undefined."""


class UnsupportedLatitudeError(SkylabelError):
    pass


class DegenerateWindowError(SkylabelError):
    pass


class InsufficientDataError(SkylabelError):
    pass


class UnitAmbiguityError(SkylabelError):
    pass


class DataFormatError(SkylabelError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line
