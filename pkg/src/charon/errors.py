"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class CharonError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for this failure."""

    exit_code = 1


class SourceError(CharonError):
    exit_code = 3

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class LexError(SourceError):
    pass


class ParseError(SourceError):
    pass


class SemanticError(SourceError):
    pass


class CompileError(CharonError):
    exit_code = 4


class IRError(CharonError):
    exit_code = 8

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class CertificateFormatError(CharonError):
    exit_code = 9


class EvaluationError(CharonError):
    exit_code = 9


class CertificationError(CharonError):
    """Raised when an IR program does not match the compiler's patterns."""

    exit_code = 5

    def __init__(self, message: str, index: int | None = None):
        self.index = index
        super().__init__(f"instruction {index}: {message}" if index is not None else message)


class CanonError(CharonError):
    exit_code = 6

    def __init__(self, message: str, factor: int | None = None):
        self.factor = factor
        super().__init__(f"factor {factor}: {message}" if factor is not None else message)


class VMError(CharonError):
    exit_code = 7


class BenchError(CharonError):
    exit_code = 10
