from typing import Optional


class InterleaveError(Exception):
    """Base class of every error raised by the analysis package."""

    kind = 'error'


class ProcessSyntaxError(InterleaveError, ValueError):
    kind = 'syntax'

    def __init__(self, message: str, position: int) -> None:
        super().__init__(f'{message} at position {position}')
        self.position = position


class InvalidTreeError(InterleaveError, ValueError):
    kind = 'invalid-tree'


class InvalidDegreeSequenceError(InterleaveError, ValueError):
    kind = 'invalid-degree-sequence'

    def __init__(self, message: str, index: int) -> None:
        super().__init__(f'{message} (index {index})')
        self.index = index


class InvalidPrefixError(InterleaveError, ValueError):
    kind = 'invalid-prefix'

    def __init__(self, message: str, index: int, node: Optional[int] = None) -> None:
        super().__init__(f'{message} (position {index})')
        self.index = index
        self.node = node


class DomainError(InterleaveError, ValueError):
    kind = 'domain'


class LimitExceededError(InterleaveError):
    """An oracle limit or node budget would be exceeded.

    `predicted` holds the exact size of the refused computation when it is
    cheap to know, otherwise None.
    """

    kind = 'limit'

    def __init__(self, message: str, predicted: Optional[int] = None) -> None:
        super().__init__(message)
        self.predicted = predicted


class RecurrenceError(InterleaveError, ArithmeticError):
    kind = 'recurrence'

    def __init__(self, message: str, index: int) -> None:
        super().__init__(f'{message} (n = {index})')
        self.index = index


class PrecisionError(InterleaveError, ArithmeticError):
    kind = 'precision'


class EmptyMultisetError(InterleaveError, ValueError):
    kind = 'empty-multiset'


class UnknownElementError(InterleaveError, KeyError):
    kind = 'unknown-element'

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else 'unknown element'


class SelfTestFailure(InterleaveError):
    kind = 'selftest'

    def __init__(self, failures: list[str]) -> None:
        super().__init__(f'{len(failures)} self-test check(s) failed')
        self.failures = failures
