"""Exception types shared across the engine."""


class TeachkitError(Exception):
    """Base class for all engine errors."""


class MalformedImage(TeachkitError):
    pass


class UnsupportedFormat(TeachkitError):
    pass


class BadDimensions(TeachkitError):
    pass


class ParseError(TeachkitError):
    def __init__(self, message, line=None, offset=None):
        detail = message
        if line is not None:
            detail += f" (line {line})"
        if offset is not None:
            detail += f" (field {offset})"
        super().__init__(detail)
        self.line = line
        self.offset = offset


class InconsistentDimension(TeachkitError):
    pass


class UnknownState(TeachkitError):
    def __init__(self, state_id):
        super().__init__(f"unknown state: {state_id!r}")
        self.state_id = state_id


class DimensionMismatch(TeachkitError):
    pass


class EmptyClass(TeachkitError):
    def __init__(self, state_id):
        super().__init__(f"state {state_id!r} has no samples")
        self.state_id = state_id


class NonFiniteLoss(TeachkitError):
    pass


class NotContinuous(TeachkitError):
    pass


class OutOfBounds(TeachkitError):
    pass


class RayParallel(TeachkitError):
    pass


class BehindCamera(TeachkitError):
    pass


class FlatTemplate(TeachkitError):
    pass


class SourceUnavailable(TeachkitError):
    def __init__(self, source):
        super().__init__(f"anchor source unavailable: {source!r}")
        self.source = source


class VersionMismatch(TeachkitError):
    pass


class ValidationError(TeachkitError):
    """Carries every broken reference found, not just the first."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class BadSpec(TeachkitError):
    pass


class NoModel(TeachkitError):
    pass
