class SummarizerError(Exception):
    """Base class for every failure the pipeline reports."""

    @property
    def category(self) -> str:
        return type(self).__name__


class ShapeMismatch(SummarizerError, ValueError):
    pass


class NotScalar(SummarizerError, ValueError):
    pass


class NonFiniteValue(SummarizerError, ArithmeticError):
    pass


class MissingSection(SummarizerError, ValueError):
    def __init__(self, name: str):
        super().__init__(f"report has no {name} section")
        self.name = name


class AmbiguousSections(SummarizerError, ValueError):
    pass


class EmptyCorpus(SummarizerError, ValueError):
    pass


class UnknownBodyPart(SummarizerError, ValueError):
    pass


class IdOutOfRange(SummarizerError, IndexError):
    pass


class MalformedLine(SummarizerError, ValueError):
    def __init__(self, lineno: int, detail: str = ""):
        super().__init__(f"line {lineno}: {detail}" if detail else f"line {lineno}")
        self.lineno = lineno


class MalformedRecord(SummarizerError, ValueError):
    def __init__(self, lineno: int, detail: str = ""):
        super().__init__(f"line {lineno}: {detail}" if detail else f"line {lineno}")
        self.lineno = lineno


class DimensionMismatch(SummarizerError, ValueError):
    pass


class EmptySequence(SummarizerError, ValueError):
    pass


class EmptyStates(SummarizerError, ValueError):
    pass


class LengthMismatch(SummarizerError, ValueError):
    pass


class EmptySplit(SummarizerError, ValueError):
    pass


class EmptyFindings(SummarizerError, ValueError):
    pass


class EmptyList(SummarizerError, ValueError):
    pass


class EmptyInput(SummarizerError, ValueError):
    pass


class VocabMismatch(SummarizerError, ValueError):
    pass


class UnknownMethod(SummarizerError, ValueError):
    pass


class CheckpointFormatError(SummarizerError, ValueError):
    pass


class ConfigConflict(SummarizerError, ValueError):
    pass


def error_category(exc: BaseException) -> str:
    """Machine-readable category used for the CLI's one-line error report."""
    if isinstance(exc, SummarizerError):
        return exc.category
    if isinstance(exc, OSError):
        return "IoError"
    return type(exc).__name__
