"""Exception types raised across the package."""


class LdpcCrcError(Exception):
    """Base class for all package errors."""


class DegenerateCode(LdpcCrcError):
    """The parity-check matrix leaves no information bits (k = 0)."""


class DivisionByZeroPolynomial(LdpcCrcError, ZeroDivisionError):
    pass


class ExponentOutOfRange(LdpcCrcError, ValueError):
    pass


class PayloadOutOfRange(LdpcCrcError, ValueError):
    pass


class InvalidAlpha(LdpcCrcError, ValueError):
    pass


class BlockMismatch(LdpcCrcError, ValueError):
    pass


class MissingWeightData(LdpcCrcError, KeyError):
    def __init__(self, weights):
        self.weights = sorted(weights)
        super().__init__(f"no CRC ratio for weights {self.weights}")

    def __str__(self):
        return self.args[0]


class MissingInput(LdpcCrcError):
    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__(f"missing input tables: {', '.join(self.missing)}")
