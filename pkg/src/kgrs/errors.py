"""Exception types raised by the library."""


class KGRSError(Exception):
    """Base class for all library errors."""


class GridMismatch(KGRSError):
    """Two grid functions living on different grids were combined."""


class NonFiniteValue(KGRSError, ValueError):
    pass


class RecurrenceOverflow(KGRSError, OverflowError):
    """Hermite recurrence left the representable range."""


class PochhammerZero(KGRSError, ZeroDivisionError):
    pass


class NotJOrthonormal(KGRSError):
    """Some |[phi_n, phi_n]| is not 1 within tolerance.

    ``index`` and ``value`` identify the first offending element.
    """

    def __init__(self, index, value, tolerance):
        self.index = index
        self.value = value
        self.tolerance = tolerance
        super().__init__(
            f"|[phi_{index}, phi_{index}]| = {abs(value):.12g} deviates from 1 "
            f"by more than {tolerance:g}"
        )


class SignsAbsent(KGRSError):
    """Operation needs certified signs but the system carries none."""


class NotBiorthogonal(KGRSError):
    pass


class GridTooSmall(KGRSError):
    def __init__(self, message, suggested_L):
        self.suggested_L = suggested_L
        super().__init__(f"{message}; try L >= {suggested_L:g}")


class RankDeficientSpan(KGRSError):
    pass


class NonPositiveSection(KGRSError):
    def __init__(self, eigenvalue):
        self.eigenvalue = eigenvalue
        super().__init__(f"finite section of G has eigenvalue {eigenvalue:.6g} <= 0")


class EigensolverError(KGRSError):
    pass


class ParityDefect(KGRSError):
    pass


class ConfigError(KGRSError, ValueError):
    pass
