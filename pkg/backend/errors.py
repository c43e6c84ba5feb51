# backend/errors.py
"""
Exception types shared by every backend module.

The CLI maps them onto its exit codes:
    ParseError / PreconditionError / GroupMismatchError -> 2
    InfeasibleError / SizeLimitError                    -> 3
"""


class IrelabError(Exception):
    """Root of all irelab errors."""


class GroupMismatchError(IrelabError, ValueError):
    pass


class ParseError(IrelabError, ValueError):
    pass


class GraphFormatError(ParseError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class PreconditionError(IrelabError, ValueError):
    pass


class SizeLimitError(IrelabError):
    def __init__(self, count: int, cap: int, what: str = "ball"):
        super().__init__(f"{what} would contain {count} elements, cap is {cap}")
        self.count = count
        self.cap = cap


class InfeasibleError(IrelabError):
    """An enumeration or search budget was exhausted."""

    def __init__(self, message: str, **counts):
        if counts:
            detail = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
            message = f"{message} ({detail})"
        super().__init__(message)
        self.counts = counts


class UndeterminedCellError(IrelabError):
    pass
