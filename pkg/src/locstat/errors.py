"""Exception hierarchy shared across the package."""


class LocstatError(Exception):
    """Base class for all package errors."""


class DegenerateWindow(LocstatError, ValueError):
    """Fewer than two design points carry kernel weight at an evaluation point."""


class AllDegenerate(LocstatError, ValueError):
    """Every bandwidth candidate failed the local linear fit precondition."""


class GridMismatch(LocstatError, ValueError):
    pass


class MissingMidpoint(LocstatError, KeyError):
    pass


class BlockTooLarge(LocstatError, ValueError):
    pass


class DomainError(LocstatError, ValueError):
    pass


class EigenFailure(LocstatError, ArithmeticError):
    pass


class SolveFailure(LocstatError, ArithmeticError):
    pass


class LengthMismatch(LocstatError, ValueError):
    pass


class UnstableFilter(LocstatError, ValueError):
    pass


class Unsupported(LocstatError, NotImplementedError):
    pass


class ParseError(LocstatError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyAfterCleaning(LocstatError, ValueError):
    pass


class ConfigError(LocstatError, ValueError):
    pass
